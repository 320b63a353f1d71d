"""Selects the compiled core when available, else the NumPy fallback.

Set ``FRACSYMM_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and the backend-agreement tests).
"""
from __future__ import annotations

import os

from . import _kernel_py

_impl = _kernel_py
BACKEND = "python"
if os.environ.get("FRACSYMM_PURE_PYTHON", "") != "1":
    try:
        from . import _core as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "compiled"


def get_backend(name: str | None = None):
    """Return the implementation module for ``name`` ('compiled'/'python')."""
    if name is None:
        return _impl
    if name == "python":
        return _kernel_py
    if name == "compiled":
        from . import _core  # noqa: F401  raises ImportError when not built
        return _core
    raise ValueError(f"unknown backend {name!r}")


def kernel_smooth(coef, r, rho, delta):
    return _impl.kernel_smooth(coef, r, rho, delta)


def riesz_double_sum(u, v, coords, area, alpha, t, h):
    return _impl.riesz_double_sum(u, v, coords, area, alpha, t, h)
