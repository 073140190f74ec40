"""Heat semigroup, oscillation operators and the Stokes-Coriolis semigroup.

For a divergence-free, mean-zero field the semigroup acts mode by mode as

    T(t) f_hat = exp(-|xi|^2 t) [cos(phi) f_hat + sin(phi) R(xi) f_hat],
    phi = Omega t xi_3 / |xi|,

with the skew symbol ``R(xi) v = v x xi/|xi|``.  Equivalently

    T(t) f = 1/2 G_+(Omega t)[e^{t Lap}(I + R_op) f] + 1/2 G_-(Omega t)[e^{t Lap}(I - R_op) f]

where ``G_pm(tau)`` multiplies by ``exp(pm i tau xi_3/|xi|)`` and ``R_op`` is
the matrix of Riesz transforms whose symbol is ``-i R(xi)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .spectral_core import DIV_TOL, Grid3, SpectralField, divergence_residual, leray_project, riesz_transform

__all__ = [
    "SemigroupParams",
    "skew_symbol",
    "heat",
    "wave_operator",
    "riesz_matrix_apply",
    "apply_semigroup",
    "apply_semigroup_decomposed",
    "apply_semigroup_flat",
    "NotDivergenceFree",
    "heat_smoothing_envelope",
]


class NotDivergenceFree(ValueError):
    """Raised when a semigroup is applied to a field with a divergence."""


@dataclass(frozen=True)
class SemigroupParams:
    omega: float
    t: float

    def __post_init__(self) -> None:
        if not self.t >= 0:
            raise ValueError(f"time must be nonnegative, got {self.t!r}")


def skew_symbol(xi: np.ndarray) -> np.ndarray:
    """The 3x3 skew matrix ``R(xi)``; zero at ``xi = 0``.

    Rows are ``(0, xi3, -xi2; -xi3, 0, xi1; xi2, -xi1, 0) / |xi|`` so that
    ``R(xi) v = v x xi/|xi|``.  Accepts ``xi`` of shape ``(3,)`` or ``(3, ...)``.
    """
    xi = np.asarray(xi, float)
    a = np.sqrt(np.sum(xi * xi, axis=0))
    inv = np.divide(1.0, a, out=np.zeros_like(a), where=a > 0)
    x1, x2, x3 = xi[0] * inv, xi[1] * inv, xi[2] * inv
    z = np.zeros_like(x1)
    return np.array([[z, x3, -x2], [-x3, z, x1], [x2, -x1, z]])


def _flat(f: SpectralField) -> np.ndarray:
    return f.coeffs.reshape(f.n_components, -1)


def heat(f: SpectralField, t: float) -> SpectralField:
    """``e^{t Lap} f``: multiply every mode by ``exp(-|xi|^2 t)``."""
    if not t >= 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t!r}")
    out = kernels.heat(_flat(f), f.grid.xi_flat, t)
    return f.with_coeffs(out.reshape(f.coeffs.shape))


def _phase(grid: Grid3) -> np.ndarray:
    xa = grid.xi_abs
    x3 = np.broadcast_to(grid.xi[2], grid.shape)
    return np.divide(x3, xa, out=np.zeros(grid.shape), where=xa > 0)


def wave_operator(f: SpectralField, tau: float, sign: int) -> SpectralField:
    """``G_pm(tau) f``: multiply by ``exp(pm i tau xi_3/|xi|)`` (1 at the zero mode)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    mult = np.exp(1j * sign * tau * _phase(f.grid))
    return f.with_coeffs(f.coeffs * mult)


def riesz_matrix_apply(f: SpectralField) -> SpectralField:
    """Apply the Riesz matrix operator with rows ``(0, R3, -R2; -R3, 0, R1; R2, -R1, 0)``."""
    if f.n_components != 3:
        raise ValueError("Riesz matrix needs a 3-component field")
    comp = [SpectralField(f.grid, f.coeffs[i], f.mean_zero) for i in range(3)]

    def r(i: int, c: int) -> np.ndarray:
        return riesz_transform(comp[c], i).coeffs[0]

    out = np.stack([
        r(2, 1) - r(1, 2),
        -r(2, 0) + r(0, 2),
        r(1, 0) - r(0, 1),
    ])
    return f.with_coeffs(out)


def _prepare(f: SpectralField, auto_project: bool) -> SpectralField:
    if f.n_components != 3:
        raise ValueError("the semigroup acts on 3-component fields")
    res = divergence_residual(f)
    if res > DIV_TOL:
        if not auto_project:
            raise NotDivergenceFree(f"divergence residual {res:.3e} exceeds {DIV_TOL:g}")
        f = leray_project(f)
    return f


def apply_semigroup(f: SpectralField, sp: SemigroupParams, auto_project: bool = False) -> SpectralField:
    """Closed-form Stokes-Coriolis semigroup ``T_Omega(t) f``."""
    f = _prepare(f, auto_project)
    out = kernels.stokes_coriolis(_flat(f), f.grid.xi_flat, sp.omega, sp.t)
    return f.with_coeffs(out.reshape(f.coeffs.shape), divergence_free=True)


def apply_semigroup_flat(c: np.ndarray, xi: np.ndarray, omega: float, t: float) -> np.ndarray:
    """Semigroup on a flat mode list (no divergence check); used by the solver."""
    return kernels.stokes_coriolis(c, xi, omega, t)


def apply_semigroup_decomposed(f: SpectralField, sp: SemigroupParams,
                               auto_project: bool = False) -> SpectralField:
    """Semigroup assembled from heat, Riesz matrix and the two oscillation operators."""
    f = _prepare(f, auto_project)
    hf = heat(f, sp.t)
    rf = riesz_matrix_apply(hf)
    plus = wave_operator(hf + rf, sp.omega * sp.t, +1)
    minus = wave_operator(hf - rf, sp.omega * sp.t, -1)
    out = (plus + minus) * 0.5
    return out.with_coeffs(out.coeffs, divergence_free=True)


def heat_smoothing_envelope(grid: Grid3, s0: float, s1: float, times, seed: int = 0) -> np.ndarray:
    """Envelope ``sup_j ||e^{t Lap} f_j||_{B^{s1}_{2,2}} / ||f_j||_{B^{s0}_{2,2}}``.

    ``f_j`` is the ``j``-th Littlewood-Paley block of one seeded random
    divergence-free field; the sup runs over every resolved block.  All
    norms are evaluated by Parseval, so each entry is exact for the grid.
    Returns an array of ``(t, envelope)`` rows.
    """
    from .littlewood_paley import BesovIndex, besov_norm, block, build_partition

    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((3,) + grid.shape) + 1j * rng.standard_normal((3,) + grid.shape)
    f = leray_project(SpectralField(grid, raw * (grid.xi_abs > 0)))
    part = build_partition(grid)
    i0, i1 = BesovIndex(s0, 2.0, 2.0), BesovIndex(s1, 2.0, 2.0)
    blocks = [block(f, j, part) for j in part.js]
    base = [besov_norm(b, i0, part) for b in blocks]
    out = []
    for t in times:
        env = max(besov_norm(heat(b, t), i1, part) / n0 for b, n0 in zip(blocks, base) if n0 > 0)
        out.append((float(t), env))
    return np.asarray(out)
