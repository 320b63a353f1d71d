import os
import subprocess
import sys

import numpy as np
import pytest

from fracsymm import _backend
from fracsymm.kernel import KernelEvaluator, kernel_coefficients
from fracsymm.specfun import KernelParams

try:
    compiled = _backend.get_backend("compiled")
except ImportError:  # pragma: no cover
    compiled = None
python = _backend.get_backend("python")

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled core not built")


@needs_ext
@pytest.mark.parametrize("N,s", [(2, 0.5), (2, 0.25), (3, 0.3), (4, 0.75), (3, 0.5)])
def test_kernel_smooth_agrees(N, s):
    coef = kernel_coefficients(N, s)
    rng = np.random.default_rng(N * 100 + int(100 * s))
    r = rng.uniform(0.0, 2.0, 400)
    rho = rng.uniform(0.01, 2.0, 400)
    keep = np.abs(r - rho) > 1e-6
    r, rho = r[keep], rho[keep]
    delta = np.abs(r - rho)
    a = np.asarray(compiled.kernel_smooth(coef, r, rho, delta))
    b = np.asarray(python.kernel_smooth(coef, r, rho, delta))
    np.testing.assert_allclose(a, b, rtol=1e-11, atol=0.0)


@needs_ext
def test_riesz_double_sum_agrees():
    rng = np.random.default_rng(5)
    xs, ys = np.linspace(-1, 1, 12), np.linspace(-1, 1, 9)
    coords = (xs, ys)
    u, v = rng.uniform(0, 1, (9, 12)), rng.uniform(0, 1, (9, 12))
    for alpha in (0.5, 2.0):
        a = compiled.riesz_double_sum(u, v, coords, 0.01, alpha, 0.3, 0.2)
        b = python.riesz_double_sum(u, v, coords, 0.01, alpha, 0.3, 0.2)
        assert a == pytest.approx(b, rel=1e-12)


@needs_ext
def test_evaluators_on_both_backends_agree():
    p = KernelParams(N=3, s=0.5 + 2e-3)  # inside the interpolation window
    ec, ep = KernelEvaluator(p, backend="compiled"), KernelEvaluator(p, backend="python")
    r = np.linspace(0.05, 1.5, 30)
    np.testing.assert_allclose(ec(r, 1.0 + 0 * r + 1e-3), ep(r, 1.0 + 0 * r + 1e-3), rtol=1e-10)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        _backend.get_backend("fortran")


def test_pure_python_environment_switch():
    env = dict(os.environ, FRACSYMM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import fracsymm; print(fracsymm.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
