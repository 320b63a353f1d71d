"""Time the compiled core against the NumPy fallback.

    python benchmarks/bench_core.py [--repeat 5]

Prints one line per kernel with the best-of-n wall time for each backend
and the speedup.  Both backends are checked to agree before timing.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from fracsymm import _backend
from fracsymm.kernel import kernel_coefficients
from fracsymm.radial import assemble_gagliardo_radial, make_radial_mesh
from fracsymm.specfun import KernelParams


def cases():
    rng = np.random.default_rng(0)
    coef = kernel_coefficients(3, 0.3)
    r, rho = rng.uniform(0.0, 1.0, 200_000), rng.uniform(0.01, 1.0, 200_000)
    delta = np.abs(r - rho)
    yield "kernel_smooth (2e5 pts)", lambda name: _backend.get_backend(name).kernel_smooth(coef, r, rho, delta)

    # the two Riesz routes are different algorithms (direct double sum versus
    # separable matrix products), kept apart so each checks the other
    xs = np.linspace(-1.0, 1.0, 32)
    u, v = rng.uniform(0, 1, (32, 32)), rng.uniform(0, 1, (32, 32))
    yield "riesz_double_sum (32x32)", lambda name: _backend.get_backend(name).riesz_double_sum(
        u, v, (xs, xs), 4e-3, 2.0, 0.3, 0.2)

    grid = make_radial_mesh(1.0, 128, KernelParams(3, 0.3))
    yield "radial assembly (M=128)", lambda name: assemble_gagliardo_radial(grid, backend=name).matrix


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    try:
        _backend.get_backend("compiled")
    except ImportError:
        print("compiled core not built; nothing to compare")
        return 1
    print(f"{'kernel':28s} {'compiled [s]':>13s} {'python [s]':>11s} {'speedup':>8s}")
    for name, fn in cases():
        a, b = np.asarray(fn("compiled")), np.asarray(fn("python"))
        if not np.allclose(a, b, rtol=1e-9, atol=0.0):
            raise SystemExit(f"{name}: backends disagree")
        tc = min(timeit.repeat(lambda: fn("compiled"), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn("python"), number=1, repeat=args.repeat))
        print(f"{name:28s} {tc:13.4f} {tp:11.4f} {tp / tc:7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
