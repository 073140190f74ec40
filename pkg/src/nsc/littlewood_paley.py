"""Littlewood-Paley blocks, homogeneous Besov norms and mixed space-time norms.

The radial profile is ``phi0(r) = chi(r) - chi(2r)`` where ``chi`` is the
exponential-glue cutoff

    chi(r) = g(2 - r) / (g(2 - r) + g(r - 1)),   g(x) = exp(-1/x) for x > 0,

equal to 1 on ``r <= 1`` and 0 on ``r >= 2``.  The dyadic sum
``sum_j phi0(2^-j r)`` telescopes to exactly 1 for every ``r > 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from . import kernels
from .spectral_core import Grid3, SpectralField, inverse_transform, _fftn, _ifftn

__all__ = [
    "DyadicPartition",
    "BesovIndex",
    "MixedNormSpec",
    "profile",
    "build_partition",
    "partition_for_range",
    "block",
    "lp_norm",
    "besov_norm",
    "block_lp_norms",
    "block_norm_table",
    "besov_from_blocks",
    "mixed_norm",
    "mixed_norm_from_table",
    "horizon_convergence",
    "product_estimate_ratio",
]

PROFILE_NAME = "exp-glue"

profile = kernels.profile


@dataclass(frozen=True)
class DyadicPartition:
    """Resolved dyadic range ``j_min..j_max`` for the fixed profile ``phi0``."""

    j_min: int
    j_max: int
    profile_name: str = PROFILE_NAME

    def __post_init__(self) -> None:
        if self.j_max < self.j_min:
            raise ValueError("empty dyadic range")

    @property
    def js(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    def weight(self, j: int, r: np.ndarray) -> np.ndarray:
        return profile(np.asarray(r, float) * 2.0 ** (-j))

    def partition_sum(self, r: np.ndarray, j_range: tuple[int, int] | None = None) -> np.ndarray:
        lo, hi = j_range if j_range is not None else (self.j_min, self.j_max)
        r = np.asarray(r, float)
        return sum(profile(r * 2.0 ** (-j)) for j in range(lo, hi + 1))

    def record(self) -> dict:
        return {"profile": self.profile_name, "j_min": self.j_min, "j_max": self.j_max,
                "support": [0.5, 2.0]}


def partition_for_range(r_min: float, r_max: float) -> DyadicPartition:
    """Smallest dyadic range whose blocks cover every ``r`` in ``[r_min, r_max]``."""
    if not (0 < r_min <= r_max):
        raise ValueError("need 0 < r_min <= r_max")
    return DyadicPartition(int(math.floor(math.log2(r_min))), int(math.ceil(math.log2(r_max))))


def build_partition(grid: Grid3) -> DyadicPartition:
    """Dyadic range covering all nonzero wavevector magnitudes of ``grid``."""
    r_min = grid.dxi
    r_max = grid.dxi * (grid.n // 2) * math.sqrt(3.0)
    return partition_for_range(r_min, r_max)


@dataclass(frozen=True)
class BesovIndex:
    s: float
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self) -> None:
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (v >= 1.0):
                raise ValueError(f"{name} must lie in [1, inf], got {v!r}")
        if not math.isfinite(self.s):
            raise ValueError("s must be finite")


@dataclass(frozen=True)
class MixedNormSpec:
    theta: float
    besov: BesovIndex
    tilde: bool = False
    horizon: float = 1.0

    def __post_init__(self) -> None:
        if not (self.theta >= 1.0):
            raise ValueError("theta must lie in [1, inf]")
        if not (0 < self.horizon < math.inf):
            raise ValueError("horizon must be finite and positive")


# ---------------------------------------------------------------------------
# single-field norms
# ---------------------------------------------------------------------------
def _check_j(j: int, part: DyadicPartition) -> None:
    if not (part.j_min <= j <= part.j_max):
        raise ValueError(f"block index {j} outside resolved range [{part.j_min}, {part.j_max}]")


def block(f: SpectralField, j: int, part: DyadicPartition) -> SpectralField:
    """Littlewood-Paley block ``Delta_j f`` (zero mode always removed)."""
    _check_j(j, part)
    w = profile(f.grid.xi_abs * 2.0 ** (-j))
    return SpectralField(f.grid, f.coeffs * w, True, f.divergence_free)


def _physical_lp(values: np.ndarray, p: float, cell_volume: float) -> float:
    """L^p quadrature of a (ncomp, ...) real array using the Euclidean magnitude."""
    if values.shape[0] == 1:
        mag = np.abs(values[0])
    else:
        mag = np.sqrt(np.einsum("c...,c...->...", values, values))
    if math.isinf(p):
        return float(mag.max())
    if p == 1.0:
        return float(mag.sum() * cell_volume)
    return float((np.sum(mag**p) * cell_volume) ** (1.0 / p))


def lp_norm(f: SpectralField, p: float) -> float:
    """``||f||_{L^p}`` on the periodic box (Parseval for p = 2)."""
    if not p >= 1:
        raise ValueError("p must lie in [1, inf]")
    if p == 2:
        return f.norm_l2()
    return _physical_lp(inverse_transform(f).values, p, f.grid.cell_volume)


@lru_cache(maxsize=64)
def _block_weights(grid: Grid3, j_min: int, j_max: int, half: bool) -> np.ndarray:
    """Stacked multipliers ``phi0(2^-j |xi|)``; ``half`` keeps the last axis up to n/2."""
    xa = grid.xi_abs
    if half:
        xa = xa[..., : grid.n // 2 + 1]
    w = np.stack([profile(xa * 2.0 ** (-j)) for j in range(j_min, j_max + 1)])
    w.setflags(write=False)
    return w


def block_lp_norms(f: SpectralField, p: float, part: DyadicPartition, real: bool | None = None) -> np.ndarray:
    """``||Delta_j f||_{L^p}`` for every resolved ``j``.

    With ``real=True`` the field is taken to represent real data and only
    the half spectrum enters the inverse transforms.  ``None`` (default)
    checks Hermitian symmetry first; unpaired Nyquist modes (e.g. after a
    Leray projection) break it, and then the full complex transform is used.
    """
    g = f.grid
    if p == 2:
        c = f.coeffs.reshape(f.n_components, -1)
        e = kernels.shell_energy(c, g.xi_flat, part.j_min, part.j_max)
        return np.sqrt(e / g.volume)
    if real is None:
        real = f.is_hermitian(1e-10)
    out = np.empty(part.js.size)
    inv_h3 = 1.0 / g.cell_volume
    if real:
        w = _block_weights(g, part.j_min, part.j_max, True)
        half = f.coeffs[..., : g.n // 2 + 1]
        for k in range(part.js.size):
            vals = sfft.irfftn(half * w[k], s=g.shape, axes=(-3, -2, -1)) * inv_h3
            out[k] = _physical_lp(vals, p, g.cell_volume)
        return out
    w = _block_weights(g, part.j_min, part.j_max, False)
    for k in range(part.js.size):
        vals = _ifftn(f.coeffs * w[k]).real * inv_h3
        out[k] = _physical_lp(vals, p, g.cell_volume)
    return out


def _lq(values: np.ndarray, q: float, axis: int = -1) -> np.ndarray:
    if math.isinf(q):
        return np.max(values, axis=axis)
    return np.sum(values**q, axis=axis) ** (1.0 / q)


def besov_from_blocks(block_norms: np.ndarray, js: np.ndarray, s: float, q: float) -> np.ndarray:
    """ell^q over the last axis of ``2^{sj} ||Delta_j f||``."""
    return _lq(np.asarray(block_norms) * 2.0 ** (s * np.asarray(js, float)), q)


def besov_norm(f: SpectralField, idx: BesovIndex, part: DyadicPartition) -> float:
    """Homogeneous Besov norm ``||f||_{B^s_{p,q}}`` over the resolved dyadic range."""
    b = block_lp_norms(f, idx.p, part)
    return float(besov_from_blocks(b, part.js, idx.s, idx.q))


# ---------------------------------------------------------------------------
# space-time norms
# ---------------------------------------------------------------------------
def block_norm_table(traj, p: float, part: DyadicPartition, upto: float | None = None) -> np.ndarray:
    """Table ``B[i, j] = ||Delta_j u(t_i)||_{L^p}`` for samples with ``t_i <= upto``."""
    times = traj.times
    n_use = len(times) if upto is None else int(np.searchsorted(times, upto, side="right"))
    n_use = min(len(times), n_use + 1)  # one sample past the horizon for interpolation
    out = np.empty((n_use, part.js.size))
    g = traj.grid
    if p == 2:
        xi = traj.xi_modes
        for i in range(n_use):
            e = kernels.shell_energy(traj.flat(i), xi, part.j_min, part.j_max)
            out[i] = np.sqrt(e / g.volume)
    else:
        for i in range(n_use):
            out[i] = block_lp_norms(traj.field(i), p, part)
    return out


def _time_integral(times: np.ndarray, y: np.ndarray, horizon: float) -> np.ndarray:
    """Trapezoid of ``y`` (first axis = time) over ``[0, horizon]``, interpolating at the end."""
    t = np.asarray(times, float)
    if horizon > t[-1] * (1 + 1e-12):
        raise ValueError(f"horizon {horizon} exceeds trajectory range {t[-1]}")
    k = int(np.searchsorted(t, horizon, side="right"))  # samples with t <= horizon
    tt = t[:k]
    yy = y[:k]
    if tt[-1] < horizon and k < t.size:
        frac = (horizon - t[k - 1]) / (t[k] - t[k - 1])
        y_end = y[k - 1] + frac * (y[k] - y[k - 1])
        tt = np.append(tt, horizon)
        yy = np.concatenate([yy, y_end[None]], axis=0)
    if tt.size < 2:
        return np.zeros(y.shape[1:])
    return np.trapezoid(yy, tt, axis=0)


def mixed_norm_from_table(times: np.ndarray, table: np.ndarray, js: np.ndarray,
                          spec: MixedNormSpec) -> float:
    """Mixed norm from a block table ``B[i, j]`` sampled at ``times``."""
    s, q, theta = spec.besov.s, spec.besov.q, spec.theta
    times = np.asarray(times, float)[: table.shape[0]]
    weights = 2.0 ** (s * np.asarray(js, float))
    if spec.tilde:
        if math.isinf(theta):
            k = int(np.searchsorted(times, spec.horizon, side="right"))
            per_j = table[:k].max(axis=0)
        else:
            per_j = _time_integral(times, table**theta, spec.horizon) ** (1.0 / theta)
        return float(_lq(per_j * weights, q))
    bes = _lq(table * weights, q, axis=1)
    if math.isinf(theta):
        k = int(np.searchsorted(times, spec.horizon, side="right"))
        return float(bes[:k].max())
    return float(_time_integral(times, bes**theta, spec.horizon) ** (1.0 / theta))


def mixed_norm(traj, spec: MixedNormSpec, part: DyadicPartition) -> float:
    """``L^theta(0,T; B^s_{p,q})`` (plain) or the tilde variant of a trajectory."""
    if spec.horizon > traj.times[-1] * (1 + 1e-12):
        raise ValueError(f"horizon {spec.horizon} exceeds trajectory range {traj.times[-1]}")
    table = block_norm_table(traj, spec.besov.p, part, upto=spec.horizon)
    return mixed_norm_from_table(traj.times, table, part.js, spec)


def horizon_convergence(traj, spec: MixedNormSpec, part: DyadicPartition) -> tuple[float, float, float]:
    """Norm on ``[0, T]`` and ``[0, 2T]`` and their relative change (truncation diagnostic).

    The trajectory must cover ``[0, 2T]`` with ``T = spec.horizon``.
    """
    from dataclasses import replace

    n1 = mixed_norm(traj, spec, part)
    n2 = mixed_norm(traj, replace(spec, horizon=2 * spec.horizon), part)
    return n1, n2, (abs(n2 - n1) / n2 if n2 > 0 else 0.0)


# ---------------------------------------------------------------------------
# product estimate
# ---------------------------------------------------------------------------
def _pad(f: SpectralField, factor: int = 2) -> SpectralField:
    """Zero-pad coefficients onto a grid ``factor`` times finer (same box)."""
    g = f.grid
    big = Grid3(g.n * factor, g.box_length)
    out = np.zeros((f.n_components,) + big.shape, complex)
    k = g.k1d
    keep = np.abs(k) < g.n // 2  # drop the unpaired Nyquist plane
    ib = np.where(keep)[0]
    tb = (k[keep] % big.n)
    out[np.ix_(range(f.n_components), tb, tb, tb)] = f.coeffs[np.ix_(range(f.n_components), ib, ib, ib)]
    return SpectralField(big, out, f.mean_zero)


def product_estimate_ratio(f: SpectralField, g: SpectralField, idx: BesovIndex, r2: float) -> float:
    """``||fg||_{B^s_{r,q}} / (||f||_{B^s_{r2,q}} ||g||_{B^s_{r2,q}})``, ``1/r = 2/r2 - s/3``.

    The pointwise product (the dot product for vector fields) is formed
    without aliasing on a grid twice as fine.  The numerator is measured on
    that grid with its own dyadic range.
    """
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    if idx.s <= 0:
        raise ValueError("product estimate needs s > 0")
    inv_r = 2.0 / r2 - idx.s / 3.0
    if not (0 < inv_r <= 1):
        raise ValueError(f"derived integrability 1/r = {inv_r} outside (0, 1]")
    r = 1.0 / inv_r
    part = build_partition(f.grid)
    den = besov_norm(f, BesovIndex(idx.s, r2, idx.q), part) * besov_norm(g, BesovIndex(idx.s, r2, idx.q), part)
    fp = inverse_transform(_pad(f)).values
    gp = inverse_transform(_pad(g)).values
    prod = np.sum(fp * gp, axis=0)
    big = Grid3(2 * f.grid.n, f.grid.box_length)
    ph = SpectralField(big, _fftn(prod)[None] * big.cell_volume, mean_zero=False)
    ph.coeffs[:, 0, 0, 0] = 0.0  # homogeneous norm ignores the mean
    num = besov_norm(ph, BesovIndex(idx.s, r, idx.q), build_partition(big))
    if num == 0.0:
        return 0.0
    if den == 0.0:
        raise ZeroDivisionError("denominator of the product ratio vanishes")
    return float(num / den)
