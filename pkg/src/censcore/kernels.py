"""Dispatch to the compiled kernels, or the numpy fallback.

The compiled extension ``censcore._ckernels`` is used when it imports;
setting ``CENSCORE_PURE_PYTHON=1`` forces the fallback. Both backends
expose identical functions; the wrappers here broadcast arguments and
coerce them to contiguous float64.
"""
from __future__ import annotations

import os
from types import ModuleType

import numpy as np

from . import _pykernels
from .special_math import DEFAULT_SERIES, SeriesControl


def _load_compiled() -> ModuleType | None:
    if os.environ.get("CENSCORE_PURE_PYTHON", "").strip() not in ("", "0"):
        return None
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


_compiled = _load_compiled()
_impl: ModuleType = _compiled if _compiled is not None else _pykernels

BACKEND: str = _impl.NAME


def available_backends() -> list[str]:
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def get_backend(name: str | None = None) -> ModuleType:
    """Raw kernel module by name; ``None`` gives the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def set_backend(name: str) -> str:
    """Make ``name`` the active backend; returns the previous one."""
    global _impl, BACKEND
    previous = BACKEND
    _impl = get_backend(name)
    BACKEND = _impl.NAME
    return previous


def _flat(*arrays):
    b = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in arrays))
    shape = b[0].shape
    return shape, [np.ascontiguousarray(x.ravel()) for x in b]


def _shaped(values: np.ndarray, shape):
    if shape == ():
        return float(values[0])
    return values.reshape(shape)


def reg_lower_gamma(s, x, backend: str | None = None):
    """Elementwise P(s, x); broadcasts, returns float for scalar input."""
    shape, (s_, x_) = _flat(s, x)
    return _shaped(get_backend(backend).reg_lower_gamma(s_, x_), shape)


def gamma_cdf_pdf_integral(alpha, y, ctl: SeriesControl = DEFAULT_SERIES, backend: str | None = None):
    """Elementwise ∫₀^{y/β} F_{α,β} f_{α+1,β} (independent of β)."""
    shape, (a_, y_) = _flat(alpha, y)
    out = get_backend(backend).gamma_cdf_pdf_integral(a_, y_, ctl.rel_tol, ctl.max_terms)
    return _shaped(out, shape)


def ensemble_twcrps(members, t, tau: float, c_m: float, backend: str | None = None):
    """Row-wise ensemble twCRPS; ``members`` is (n, m), ``t`` is (n,)."""
    members = np.ascontiguousarray(np.atleast_2d(np.asarray(members, dtype=float)))
    t = np.ascontiguousarray(np.broadcast_to(np.asarray(t, dtype=float), members.shape[:1]))
    return get_backend(backend).ensemble_twcrps(members, t, float(tau), float(c_m))


def concordance_counts(p, t, tau: float, backend: str | None = None):
    p = np.ascontiguousarray(p, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    return get_backend(backend).concordance_counts(p, t, float(tau))


def minmax_isotonic(values, offsets, alpha: float, backend: str | None = None):
    values = np.ascontiguousarray(values, dtype=float)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    return get_backend(backend).minmax_isotonic(values, offsets, float(alpha))
