"""Backend selector for the hot multiplier kernels.

The compiled extension ``nsc._kernels`` is used when it imports; otherwise
(or when the environment variable ``NSC_PURE_PYTHON=1`` is set) the numpy
implementations in :mod:`nsc._fallback` are used.  All entry points accept
flat mode lists: coefficients ``(ncomp, M)`` complex128 and wavevectors
``(3, M)`` float64.
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback

BACKEND = "numpy"
_impl = _fallback

if os.environ.get("NSC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def _c(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.complex128)


def _r(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def heat(c: np.ndarray, xi: np.ndarray, t: float) -> np.ndarray:
    return _impl.heat(_c(c), _r(xi), float(t))


def leray(c: np.ndarray, xi: np.ndarray) -> np.ndarray:
    return _impl.leray(_c(c), _r(xi))


def stokes_coriolis(c: np.ndarray, xi: np.ndarray, omega: float, t: float) -> np.ndarray:
    return _impl.stokes_coriolis(_c(c), _r(xi), float(omega), float(t))


def shell_energy(c: np.ndarray, xi: np.ndarray, j_min: int, j_max: int) -> np.ndarray:
    return _impl.shell_energy(_c(c), _r(xi), int(j_min), int(j_max))


profile = _fallback.profile
chi = _fallback.chi

__all__ = ["BACKEND", "heat", "leray", "stokes_coriolis", "shell_energy", "profile", "chi"]
