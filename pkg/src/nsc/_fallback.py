"""Pure numpy implementations of the hot multiplier kernels.

Every function works on flat mode lists: coefficient arrays have shape
``(ncomp, M)`` and wavevectors shape ``(3, M)``.  The compiled extension
``nsc._kernels`` exposes the same functions with identical semantics.
"""
from __future__ import annotations

import numpy as np


def _unit(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
    ka = np.sqrt(k2)
    inv = np.divide(1.0, ka, out=np.zeros_like(ka), where=ka > 0)
    return k2, inv


def heat(c: np.ndarray, xi: np.ndarray, t: float) -> np.ndarray:
    k2, _ = _unit(xi)
    return c * np.exp(-k2 * t)


def leray(c: np.ndarray, xi: np.ndarray) -> np.ndarray:
    _, inv = _unit(xi)
    e1, e2, e3 = xi[0] * inv, xi[1] * inv, xi[2] * inv
    d = e1 * c[0] + e2 * c[1] + e3 * c[2]
    return np.stack([c[0] - e1 * d, c[1] - e2 * d, c[2] - e3 * d])


def stokes_coriolis(c: np.ndarray, xi: np.ndarray, omega: float, t: float) -> np.ndarray:
    """``exp(-|xi|^2 t) [cos(phi) c + sin(phi) (c x xi_hat)]``, ``phi = omega t xi3/|xi|``."""
    k2, inv = _unit(xi)
    e1, e2, e3 = xi[0] * inv, xi[1] * inv, xi[2] * inv
    decay = np.exp(-k2 * t)
    phi = (omega * t) * e3
    cs = np.cos(phi)
    sn = np.sin(phi)
    r1 = c[1] * e3 - c[2] * e2
    r2 = c[2] * e1 - c[0] * e3
    r3 = c[0] * e2 - c[1] * e1
    return np.stack([
        decay * (cs * c[0] + sn * r1),
        decay * (cs * c[1] + sn * r2),
        decay * (cs * c[2] + sn * r3),
    ])


def _g(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def chi(r: np.ndarray) -> np.ndarray:
    """Smooth monotone cutoff: 1 on ``r <= 1``, 0 on ``r >= 2``."""
    r = np.asarray(r, dtype=float)
    a = _g(2.0 - r)
    b = _g(r - 1.0)
    den = a + b
    return np.divide(a, den, out=np.where(r <= 1.0, 1.0, 0.0), where=den > 0)


def profile(r: np.ndarray) -> np.ndarray:
    """Littlewood-Paley radial profile ``chi(r) - chi(2r)``, supported in [1/2, 2]."""
    r = np.asarray(r, dtype=float)
    return chi(r) - chi(2.0 * r)


def shell_energy(c: np.ndarray, xi: np.ndarray, j_min: int, j_max: int) -> np.ndarray:
    """``E_j = sum_modes profile(2^-j |xi|)^2 sum_c |c|^2`` for ``j = j_min..j_max``."""
    k2, _ = _unit(xi)
    ka = np.sqrt(k2)
    power = (c.real**2 + c.imag**2).sum(axis=0)
    out = np.empty(j_max - j_min + 1)
    for idx, j in enumerate(range(j_min, j_max + 1)):
        w = profile(ka * 2.0 ** (-j))
        out[idx] = float(np.dot(w * w, power))
    return out
