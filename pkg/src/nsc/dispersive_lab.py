"""Dispersive-decay checks and rotation sweeps.

Two numerical backends are used:

* the axisymmetric whole-space evaluator (:mod:`nsc.continuum`) for every
  linear dispersive statement (kernel decay, Strichartz scaling, vanishing
  of critical norms), because dispersion does not occur on a fixed torus;
* the periodic solver (:mod:`nsc.mild_solver`) for nonlinear experiments
  (contraction thresholds and large-rotation asymptotics).

Large rotation speeds are handled through the phase time ``sigma = Omega t``:
block norms are computed directly for ``sigma <= sigma_max`` and the
remaining time range is extrapolated with a per-block power law in ``sigma``
times the exact (Parseval) heat decay of the block.  The share of each
reported norm carried by the extrapolated tail is always reported.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import continuum as cont
from .littlewood_paley import (
    BesovIndex,
    MixedNormSpec,
    besov_from_blocks,
    build_partition,
    mixed_norm,
    mixed_norm_from_table,
    profile,
)
from .mild_solver import PicardReport, SolverConfig, linear_trajectory, picard_iterate, simulate
from .spectral_core import SpectralField
from .trajectory import Trajectory

__all__ = [
    "KernelQuery",
    "KernelSeries",
    "FitResult",
    "ContinuumOptions",
    "SweepSpec",
    "StrichartzResult",
    "VanishingResult",
    "ThresholdResult",
    "AsymptoticReport",
    "PreconditionError",
    "oscillatory_kernel",
    "fit_decay",
    "strichartz_exponent",
    "check_strichartz_constraints",
    "existence_constraints",
    "linear_block_table",
    "strichartz_sweep",
    "vanishing_limit_check",
    "threshold_sweep",
    "asymptotic_equivalence",
    "alpha0",
    "alpha_cap",
    "beta0",
]

FIT_RESIDUAL_MAX = 0.15
PAD_TOL = 0.01


class PreconditionError(ValueError):
    """Parameters outside the scope of the estimate being checked."""


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------
@dataclass
class FitResult:
    exponent: float
    log_coefficient: float
    residual: float
    window: tuple[float, float]
    n_points: int = 0

    @property
    def inconclusive(self) -> bool:
        return not (self.residual < FIT_RESIDUAL_MAX)

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "log_coefficient": self.log_coefficient,
            "residual": self.residual,
            "window": list(self.window),
            "n_points": self.n_points,
            "inconclusive": self.inconclusive,
        }


def fit_decay(series, with_log_correction: bool = False) -> FitResult:
    """Least-squares line through ``(log x, log v)``.

    With ``with_log_correction`` the values are first divided by
    ``log(e + x)^{1/2}``.  ``residual`` is the RMS misfit in natural-log units.
    """
    arr = np.asarray(series, float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("series must be an (N, 2) array of (x, value)")
    if arr.shape[0] < 5:
        raise ValueError("need at least 5 points for a decay fit")
    x, v = arr[:, 0], arr[:, 1]
    if np.any(v <= 0) or np.any(x <= 0):
        raise ValueError("decay fits need positive abscissae and values")
    if with_log_correction:
        v = v / np.sqrt(np.log(math.e + x))
    lx, lv = np.log(x), np.log(v)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, lv, rcond=None)
    res = lv - A @ coef
    return FitResult(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res**2))),
                     (float(x.min()), float(x.max())), int(x.size))


# ---------------------------------------------------------------------------
# oscillatory kernel
# ---------------------------------------------------------------------------
@dataclass
class KernelQuery:
    times: Sequence[float]
    pad_factor: float = 4.0
    resolution: int = 64  # points per axis across the t = 0 box

    def validate(self) -> list[str]:
        errs = []
        if self.pad_factor < 4:
            errs.append("pad_factor must be >= 4")
        if int(self.resolution) != self.resolution or self.resolution % 2:
            errs.append("resolution must be an even integer")
        elif self.spacing > math.pi / (1.1 * 2.0):
            errs.append(f"resolution {self.resolution} under-resolves the annulus |xi| <= 2 at pad {self.pad_factor}")
        if any(t < 0 for t in self.times):
            errs.append("kernel times must be nonnegative")
        return errs

    @property
    def spacing(self) -> float:
        return 2.0 * cont.box_half_width(0.0, self.pad_factor) / self.resolution


@dataclass
class KernelSeries:
    times: np.ndarray
    sup: np.ndarray
    sup_padded: np.ndarray
    locations: np.ndarray
    sign: int = 1

    @property
    def pad_change(self) -> np.ndarray:
        return np.abs(self.sup_padded - self.sup) / self.sup_padded

    @property
    def pad_stable(self) -> bool:
        return bool(np.all(self.pad_change < PAD_TOL))

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.times, self.sup])


def oscillatory_kernel(q: KernelQuery, sign: int = 1, check_pad: bool = True) -> KernelSeries:
    """``sup_x |K(t, x)|`` for ``K(t, x) = int exp(i x.xi + sign i t xi_3/|xi|) phi0(|xi|) dxi``."""
    errs = q.validate()
    if errs:
        raise PreconditionError("; ".join(errs))
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    h = q.spacing
    sups, pads, locs = [], [], []
    for t in q.times:
        v, w = cont.kernel_sup(float(t), q.pad_factor, h, sign)
        sups.append(v)
        locs.append(w)
        if check_pad:
            pads.append(cont.kernel_sup(float(t), 2 * q.pad_factor, h, sign)[0])
        else:
            pads.append(v)
    return KernelSeries(np.asarray(q.times, float), np.array(sups), np.array(pads), np.array(locs), sign)


# ---------------------------------------------------------------------------
# linear continuum evaluations
# ---------------------------------------------------------------------------
@dataclass
class ContinuumOptions:
    """Controls for whole-space evaluations of ``T_Omega(t) f``."""

    pad_factor: float = 4.0
    sigma_max: float = 200.0
    n_heat_nodes: int = 36
    n_sigma_nodes: int = 30
    n_tail_nodes: int = 40
    tail_window: float = 4.0  # fit tail on sigma in [sigma_max/tail_window, sigma_max]
    band: tuple[float, float] = (0.5, 2.0)
    a_T: float = 1.0
    a_P: float = 0.7
    dilations: tuple[float, ...] = (1.0,)
    pad_check_nodes: int = 2

    def field(self, lam: float = 1.0) -> cont.AxiField:
        lo, hi = self.band
        return cont.AxiField(cont.radial_bump(lo, hi), self.a_T, self.a_P, lo, hi, lam)

    def heat_horizon(self, lam: float = 1.0, level: float = 1e-6) -> float:
        """Time after which the slowest block has decayed below ``level``: ``-ln(level) / k_min^2``."""
        k_min = self.band[0] * lam
        return -math.log(level) / k_min**2


def _blocks_for(f: cont.AxiField) -> np.ndarray:
    return np.arange(int(math.floor(math.log2(f.k_min))), int(math.ceil(math.log2(f.k_max))) + 1)


def _time_nodes(omega: float, horizon: float, opts: ContinuumOptions, k_min: float) -> tuple[np.ndarray, float]:
    heat_scale = 1.0 / k_min**2
    t_heat = np.concatenate([[0.0], np.geomspace(1e-4 * heat_scale, horizon, opts.n_heat_nodes)])
    t_direct_max = horizon
    nodes = [t_heat]
    if omega > 0:
        sig = np.concatenate([np.linspace(0.0, 4.0, 17)[1:], np.geomspace(4.0, opts.sigma_max, opts.n_sigma_nodes)[1:]])
        # phase time is measured in units of the data scale (sigma = Omega t k_ref/k_min)
        t_sig = sig / omega
        t_direct_max = min(horizon, opts.sigma_max / omega)
        nodes.append(t_sig)
    t = np.unique(np.concatenate(nodes))
    t = t[t <= t_direct_max * (1 + 1e-12)]
    if t[-1] < t_direct_max:
        t = np.append(t, t_direct_max)
    # merge near-duplicates
    keep = np.concatenate([[True], np.diff(t) > 1e-9 * max(t[-1], 1e-300)])
    return t[keep], t_direct_max


@dataclass
class BlockTable:
    times: np.ndarray
    table: np.ndarray
    js: np.ndarray
    n_direct: int
    tail_slopes: np.ndarray
    pad_change: float
    horizon: float

    def mixed_norm(self, theta: float, s: float, q: float, tilde: bool = False) -> float:
        spec = MixedNormSpec(theta, BesovIndex(s, 2.0, q), tilde, self.horizon)
        return mixed_norm_from_table(self.times, self.table, self.js, spec)

    def tail_fraction(self, theta: float, s: float, q: float, tilde: bool = False) -> float:
        """Share of ``||.||^theta`` contributed by extrapolated samples."""
        if self.n_direct >= self.times.size:
            return 0.0
        full = self.mixed_norm(theta, s, q, tilde)
        cut = self.table.copy()
        cut[self.n_direct:] = 0.0
        spec = MixedNormSpec(theta, BesovIndex(s, 2.0, q), tilde, self.horizon)
        part = mixed_norm_from_table(self.times, cut, self.js, spec)
        if full == 0:
            return 0.0
        return float(1.0 - (part / full) ** theta)


def linear_block_table(f: cont.AxiField, omega: float, p: float, horizon: float,
                       opts: ContinuumOptions, js: np.ndarray | None = None) -> BlockTable:
    """``||Delta_j T_Omega(t) f||_{L^p}`` on a time grid covering ``[0, horizon]``.

    Direct evaluation up to phase time ``sigma_max``; beyond, each block is
    continued as ``A_j sigma^{g_j} h_j(t)`` where ``h_j`` is the exact L^2 heat
    decay of the block and ``(A_j, g_j)`` are fitted on the last decade-quarter
    of directly evaluated nodes.
    """
    js = _blocks_for(f) if js is None else np.asarray(js, int)
    t_dir, t_dmax = _time_nodes(omega, horizon, opts, f.k_min)
    if p == 2:  # rotation is an L^2 isometry: the heat nodes are exact everywhere
        t_dir, t_dmax = _time_nodes(0.0, horizon, opts, f.k_min)
    rows = [cont.field_block_lp(f, omega, float(t), js, p, opts.pad_factor) for t in t_dir]
    table = np.array(rows)
    # pad-doubling audit on the last few direct nodes (the largest boxes)
    pad_change = 0.0
    if p != 2 and opts.pad_check_nodes > 0:
        pick = np.unique(np.linspace(1, t_dir.size - 1, opts.pad_check_nodes).round().astype(int))
        for i in pick:
            ref = cont.field_block_lp(f, omega, float(t_dir[i]), js, p, 2 * opts.pad_factor)
            mask = ref > 1e-12 * ref.max()
            if mask.any():
                pad_change = max(pad_change, float(np.max(np.abs(table[i][mask] - ref[mask]) / ref[mask])))
    slopes = np.zeros(js.size)
    times = t_dir
    if t_dmax < horizon * (1 - 1e-12):
        t_tail = np.geomspace(t_dmax, horizon, opts.n_tail_nodes + 1)[1:]
        sig_dir = omega * t_dir
        sel = sig_dir >= opts.sigma_max / opts.tail_window
        h0 = np.array([f.l2_block_sq(lambda r, j=j: profile(r * 2.0 ** (-j)), 0.0) for j in js])

        def heat_env(t: float) -> np.ndarray:
            return np.sqrt(np.array([f.l2_block_sq(lambda r, j=j: profile(r * 2.0 ** (-j)), t) for j in js])
                           / np.where(h0 > 0, h0, 1.0))

        env_dir = np.array([heat_env(float(t)) for t in t_dir[sel]])
        env_tail = np.array([heat_env(float(t)) for t in t_tail])
        tail = np.zeros((t_tail.size, js.size))
        for b in range(js.size):
            y = table[sel, b]
            ok = (y > 0) & (env_dir[:, b] > 0)
            if ok.sum() < 3:
                continue
            lx = np.log(sig_dir[sel][ok])
            ly = np.log(y[ok] / env_dir[ok, b])
            g, c = np.polyfit(lx, ly, 1)
            slopes[b] = g
            tail[:, b] = np.exp(c) * (omega * t_tail) ** g * env_tail[:, b]
        times = np.concatenate([t_dir, t_tail])
        table = np.vstack([table, tail])
    return BlockTable(times, table, js, t_dir.size, slopes, pad_change, horizon)


def _table_job(args) -> BlockTable:
    lam, omega, p, horizon, opts = args
    return linear_block_table(opts.field(lam), omega, p, horizon, opts)


def _run_jobs(jobs: list, n_workers: int) -> list[BlockTable]:
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            return list(ex.map(_table_job, jobs))
    return [_table_job(j) for j in jobs]


# ---------------------------------------------------------------------------
# Strichartz sweep
# ---------------------------------------------------------------------------
def strichartz_exponent(theta: float, p: float) -> float:
    """Predicted rotation exponent ``-1/theta + 3/4 - 3/(2p)``."""
    return -1.0 / theta + 0.75 - 1.5 / p


def check_strichartz_constraints(theta: float, p: float, q: float) -> list[str]:
    """Violations of ``3/4 - 3/(2p) <= 1/theta < min{1/2, 1 - 2/p, 1/q}``."""
    errs = []
    it = 1.0 / theta
    lo = 0.75 - 1.5 / p
    hi = min(0.5, 1.0 - 2.0 / p, 1.0 / q)
    if it < lo - 1e-12:
        errs.append(f"1/theta = {it:.4g} below 3/4 - 3/(2p) = {lo:.4g}")
    if not it < hi:
        errs.append(f"1/theta = {it:.4g} not below min(1/2, 1-2/p, 1/q) = {hi:.4g}")
    return errs


def existence_constraints(s: float, p: float, theta: float, q: float, eps: float = 0.0,
                          mode: str = "existence") -> list[str]:
    """Violations of the ``(s, p, theta, q)`` window for global existence.

    ``mode="existence"`` is the plain window; the two non-critical
    asymptotic modes apply their ``eps``-shifted windows.
    """
    errs = []
    ip, it = 1.0 / p, 1.0 / theta
    s_lo, upper_shift = 0.5, 0.0
    if mode == "theorem-5.1(i)":
        if not 0 <= eps < 1 / 12:
            errs.append(f"eps = {eps} outside [0, 1/12)")
        s_lo, upper_shift = 0.5 + 3 * eps, eps / 4
    elif mode == "theorem-5.1(ii)":
        if not 0 <= eps < 1 / 6:
            errs.append(f"eps = {eps} outside [0, 1/6)")
        s_lo = 0.5 + 1.5 * eps
    elif mode != "existence":
        raise ValueError(f"unknown constraint set {mode!r}")
    if not (s_lo < s < 0.75):
        errs.append(f"s = {s} outside ({s_lo:.4g}, 3/4)")
    if not (1 / 3 + s / 9 < ip < 2 / 3 - s / 3):
        errs.append(f"1/p = {ip:.4g} outside (1/3 + s/9, 2/3 - s/3) = ({1/3 + s/9:.4g}, {2/3 - s/3:.4g})")
    lo, hi = s / 2 - ip / 2, 0.625 - 1.5 * ip + s / 4 - upper_shift
    if not (lo < it < hi):
        errs.append(f"1/theta = {it:.4g} outside (s/2 - 1/(2p), 5/8 - 3/(2p) + s/4) = ({lo:.4g}, {hi:.4g})")
    if it < 0.75 - 1.5 * ip - 1e-12:
        errs.append(f"1/theta = {it:.4g} below 3/4 - 3/(2p) = {0.75 - 1.5 * ip:.4g}")
    if math.isinf(q) or not it < min(1 - 2 * ip, 1.0 / q):
        errs.append(f"1/theta = {it:.4g} not below min(1 - 2/p, 1/q) or q infinite")
    return errs


@dataclass
class SweepSpec:
    omegas: Sequence[float]
    initial_data: dict = field(default_factory=dict)
    norm_spec: MixedNormSpec | None = None
    solver: SolverConfig | None = None
    continuum: ContinuumOptions = field(default_factory=ContinuumOptions)
    jobs: int = 1

    def __post_init__(self) -> None:
        om = np.asarray(self.omegas, float)
        if om.ndim != 1 or om.size == 0:
            raise ValueError("omegas must be a non-empty list")
        if np.any(om <= 0) or np.any(np.diff(om) <= 0):
            raise ValueError("omegas must be positive and strictly increasing")


@dataclass
class StrichartzResult:
    omegas: np.ndarray
    norms: np.ndarray
    fit: FitResult
    predicted: float
    members: np.ndarray  # ratio[omega, dilation]
    dilations: np.ndarray
    tail_fraction: float
    pad_change: float

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.norms) <= 1e-12 * self.norms[:-1]))

    def rows(self) -> list[tuple]:
        return [(float(o), float(n)) for o, n in zip(self.omegas, self.norms)]


def strichartz_sweep(spec: SweepSpec, tables: dict | None = None) -> StrichartzResult:
    """Rotation scaling of ``||T_Omega f||_{L^theta(0,T; B^s_{p,q})} / ||f||_{B^s_{2,q}}``.

    For each ``Omega`` the reported value is the largest normalised ratio
    over the dilation family ``f_lam`` (``lam`` in ``continuum.dilations``),
    i.e. a sampled operator norm; each member uses the horizon of its own
    heat scale.  ``tables`` may carry precomputed block tables keyed by
    ``(lam, omega)`` to share work between exponent configurations with the
    same ``p``.
    """
    ns = spec.norm_spec
    if ns is None:
        raise ValueError("strichartz_sweep needs a norm_spec")
    b = ns.besov
    errs = check_strichartz_constraints(ns.theta, b.p, b.q)
    if errs:
        raise PreconditionError("; ".join(errs))
    opts = spec.continuum
    lams = np.asarray(opts.dilations, float)
    omegas = np.asarray(spec.omegas, float)
    jobs, keys = [], []
    for om in omegas:
        for lam in lams:
            key = (float(lam), float(om))
            if tables is not None and key in tables:
                continue
            keys.append(key)
            jobs.append((float(lam), float(om), b.p, opts.heat_horizon(lam), opts))
    done = dict(zip(keys, _run_jobs(jobs, spec.jobs)))
    if tables is not None:
        tables.update(done)
        done = tables
    ratios = np.zeros((omegas.size, lams.size))
    tails = []
    pads = []
    for i, om in enumerate(omegas):
        for k, lam in enumerate(lams):
            tab = done[(float(lam), float(om))]
            f = opts.field(lam)
            h0 = np.array([math.sqrt(f.l2_block_sq(lambda r, j=j: profile(r * 2.0 ** (-j)), 0.0)) for j in tab.js])
            den = float(besov_from_blocks(h0, tab.js, b.s, b.q))
            num = tab.mixed_norm(ns.theta, b.s, b.q, ns.tilde)
            ratios[i, k] = num / den
            tails.append(tab.tail_fraction(ns.theta, b.s, b.q, ns.tilde))
            pads.append(tab.pad_change)
    norms = ratios.max(axis=1)
    fit = fit_decay(np.column_stack([omegas, norms])) if omegas.size >= 5 else _short_fit(omegas, norms)
    best = ratios.argmax(axis=1)
    tail_at_best = max(tails[i * lams.size + best[i]] for i in range(omegas.size))
    return StrichartzResult(omegas, norms, fit, strichartz_exponent(ns.theta, b.p), ratios, lams,
                            float(tail_at_best), float(max(pads) if pads else 0.0))


def _short_fit(x: np.ndarray, v: np.ndarray) -> FitResult:
    lx, lv = np.log(x), np.log(v)
    if x.size < 2:
        return FitResult(float("nan"), float("nan"), float("inf"), (float(x[0]), float(x[-1])), int(x.size))
    g, c = np.polyfit(lx, lv, 1)
    res = float(np.sqrt(np.mean((lv - (g * lx + c)) ** 2)))
    return FitResult(float(g), float(c), res, (float(x.min()), float(x.max())), int(x.size))


# ---------------------------------------------------------------------------
# critical vanishing
# ---------------------------------------------------------------------------
@dataclass
class VanishingResult:
    omegas: np.ndarray
    norms: np.ndarray
    ratio: float
    eventually_monotone: bool
    verdict: str
    tail_fraction: np.ndarray
    pad_change: float

    def rows(self) -> list[tuple]:
        return [(float(o), float(n)) for o, n in zip(self.omegas, self.norms)]


def _eventually_monotone(v: np.ndarray) -> bool:
    half = v[len(v) // 2:]
    return bool(np.all(np.diff(half) <= 1e-12 * np.abs(half[:-1])))


def vanishing_limit_check(q: float, omegas: Sequence[float], opts: ContinuumOptions | None = None,
                          horizon: float | None = None, jobs: int = 1,
                          amplitude: float = 1.0) -> VanishingResult:
    """``||T_Omega f||_{L^4(0,T; B^{1/2}_{3,q})}`` along ``omegas`` for fixed band-limited ``f``.

    Verdict ``consistent`` iff the last value is below 10% of the first and
    the second half of the sequence is non-increasing.
    """
    if not q < 4:
        raise PreconditionError("vanishing of the critical norm is only claimed for q < 4")
    opts = opts or ContinuumOptions()
    omegas = np.asarray(omegas, float)
    T = horizon if horizon is not None else opts.heat_horizon()
    if amplitude == 0.0:
        z = np.zeros(omegas.size)
        return VanishingResult(omegas, z, 0.0, True, "consistent", z, 0.0)
    tabs = _run_jobs([(1.0, float(om), 3.0, T, opts) for om in omegas], jobs)
    norms = np.array([abs(amplitude) * t.mixed_norm(4.0, 0.5, q) for t in tabs])
    tails = np.array([t.tail_fraction(4.0, 0.5, q) for t in tabs])
    ratio = float(norms[-1] / norms[0]) if norms[0] > 0 else 0.0
    mono = _eventually_monotone(norms)
    verdict = "consistent" if (ratio < 0.1 and mono) else "inconsistent"
    return VanishingResult(omegas, norms, ratio, mono, verdict, tails,
                           float(max(t.pad_change for t in tabs)))


# ---------------------------------------------------------------------------
# threshold sweep (torus, nonlinear)
# ---------------------------------------------------------------------------
@dataclass
class ThresholdResult:
    amplitudes: np.ndarray
    omega_star: np.ndarray  # nan where no contractive omega was found (open upper bound)
    reports: list
    slope: float
    predicted_slope: float

    def rows(self) -> list[tuple]:
        return [(float(a), float(o)) for a, o in zip(self.amplitudes, self.omega_star)]


def _picard_job(args) -> PicardReport:
    u0, cfg, om = args
    return picard_iterate(u0, cfg, om, keep_solution=False)


def threshold_sweep(spec: SweepSpec, u0_shape: SpectralField, amplitudes: Sequence[float]) -> ThresholdResult:
    """Smallest sweep ``Omega`` giving a contractive, converged Picard run, per amplitude.

    ``u0_shape`` must have unit ``B^s_{2,q}`` norm (``s`` from the norm spec);
    data for amplitude ``A`` is ``A * u0_shape``.  The log-log slope of
    ``Omega*`` against ``A`` is reported next to the sufficient-condition
    slope ``1/(s/2 - 1/4)``; it is not asserted.
    """
    cfg = spec.solver
    if cfg is None:
        raise ValueError("threshold_sweep needs a solver config")
    ns = cfg.norm_spec
    s = ns.besov.s
    errs = existence_constraints(s, ns.besov.p, ns.theta, ns.besov.q)
    if errs:
        raise PreconditionError("; ".join(errs))
    omegas = np.asarray(spec.omegas, float)
    amps = np.asarray(amplitudes, float)
    stars = np.full(amps.size, np.nan)
    reports = []
    for i, A in enumerate(amps):
        row = []
        for om in omegas:
            rep = _picard_job((u0_shape * A, cfg, float(om)))
            row.append(rep)
            if rep.converged and rep.contractive:
                stars[i] = om
                break
        reports.append(row)
    ok = np.isfinite(stars) & (amps > 0)
    slope = float("nan")
    if ok.sum() >= 2 and np.ptp(np.log(stars[ok])) > 0:
        slope = float(np.polyfit(np.log(amps[ok]), np.log(stars[ok]), 1)[0])
    return ThresholdResult(amps, stars, reports, slope, 1.0 / (s / 2 - 0.25))


# ---------------------------------------------------------------------------
# asymptotics (torus, nonlinear)
# ---------------------------------------------------------------------------
def alpha0(theta: float, p: float, s: float) -> float:
    return -1.0 / theta + 0.5 - 1.5 / p + s / 2.0


def beta0(theta: float, p: float) -> float:
    return 1.0 / theta - 0.75 + 1.5 / p


@dataclass
class AsymptoticReport:
    mode: str
    alpha: float
    omegas: np.ndarray
    solution_diff: np.ndarray      # ||u - v||
    linear_diff: np.ndarray        # ||T (u0 - v0)||
    nonlinear_diff: np.ndarray     # ||B(u,u) - B(v,v)||
    fit: FitResult | None
    predicted: float
    equivalence_constant: float    # max ||u - v|| / ||T(u0 - v0)||
    excluded: list
    joint_verdict: str = ""

    @property
    def weighted_nonlinear(self) -> np.ndarray:
        return self.omegas**self.alpha * self.nonlinear_diff

    def rows(self) -> list[tuple]:
        return [(float(o), float(a), float(b), float(c), float(d))
                for o, a, b, c, d in zip(self.omegas, self.solution_diff, self.linear_diff,
                                         self.nonlinear_diff, self.weighted_nonlinear)]


def alpha_cap(mode: str, theta: float, p: float, s: float, eps: float) -> float:
    if mode == "theorem-5.1(i)":
        return 2 * beta0(theta, p)
    if mode == "theorem-5.1(ii)":
        return alpha0(theta, p, s) + 2 * beta0(theta, p) - eps / 2
    if mode == "critical":
        return math.inf
    raise ValueError(f"unknown asymptotic mode {mode!r}")


def _simulate_job(args) -> Trajectory:
    u0, cfg, om = args
    return simulate(u0, cfg, om)


def asymptotic_equivalence(u0: SpectralField, v0: SpectralField | None, alpha: float, mode: str,
                           spec: SweepSpec, eps: float = 0.0) -> AsymptoticReport:
    """Weighted difference norms of solutions, linear parts and Duhamel parts along the sweep.

    Norms are ``spec.solver.norm_spec`` (non-critical modes) or ``L^4(0,T; B^{1/2}_{3,q})``
    (``critical``).  The Duhamel part is recovered from the time-stepped
    solution as ``B(u,u) = T(.) u0 - u``.  Runs flagged as blowup are
    excluded from the fit.
    """
    cfg = spec.solver
    if cfg is None:
        raise ValueError("asymptotic_equivalence needs a solver config")
    ns = cfg.norm_spec
    b = ns.besov
    cap = alpha_cap(mode, ns.theta, b.p, b.s, eps)
    if mode == "critical":
        if alpha < 0:
            raise PreconditionError("critical mode needs alpha >= 0")
        norm = MixedNormSpec(4.0, BesovIndex(0.5, 3.0, b.q), False, ns.horizon)
        predicted = float("nan")
    else:
        errs = existence_constraints(b.s, b.p, ns.theta, b.q, eps, mode)
        if not alpha < cap:
            errs.append(f"alpha = {alpha} must be below {cap:.4g}")
        if errs:
            raise PreconditionError("; ".join(errs))
        norm = ns
        predicted = -2 * beta0(ns.theta, b.p) if mode == "theorem-5.1(i)" else -cap + alpha
    part = build_partition(u0.grid)
    omegas = np.asarray(spec.omegas, float)
    zero = v0 is None or not np.any(v0.coeffs)
    jobs = [(u0, cfg, float(om)) for om in omegas]
    if not zero:
        jobs += [(v0, cfg, float(om)) for om in omegas]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as ex:
            trajs = list(ex.map(_simulate_job, jobs))
    else:
        trajs = [_simulate_job(j) for j in jobs]
    n = omegas.size
    sol, lin, nl = np.zeros(n), np.zeros(n), np.zeros(n)
    excluded = []
    for i, om in enumerate(omegas):
        tu = trajs[i]
        tv = None if zero else trajs[n + i]
        if tu.flags.get("blowup") or (tv is not None and tv.flags.get("blowup")):
            excluded.append(float(om))
            sol[i] = lin[i] = nl[i] = np.nan
            continue
        lu = linear_trajectory(u0, tu.times, om, compact=tu.compact)
        d_sol = tu.data.copy()
        d_lin = lu.data.copy()
        if tv is not None:
            lv = linear_trajectory(v0, tv.times, om, compact=tv.compact)
            d_sol -= tv.data
            d_lin -= lv.data
            d_nl = (lu.data - tu.data) - (lv.data - tv.data)
        else:
            d_nl = lu.data - tu.data

        def mk(d):
            return Trajectory(tu.grid, tu.times, d, om, tu.mode_index)

        sol[i] = mixed_norm(mk(d_sol), norm, part)
        lin[i] = mixed_norm(mk(d_lin), norm, part)
        nl[i] = mixed_norm(mk(d_nl), norm, part)
    good = np.isfinite(nl) & (nl > 0)
    fit = None
    if good.sum() >= 5:
        fit = fit_decay(np.column_stack([omegas[good], nl[good]]))
    elif good.sum() >= 2:
        fit = _short_fit(omegas[good], nl[good])
    with np.errstate(divide="ignore", invalid="ignore"):
        rat = np.where(lin > 0, sol / lin, np.where(sol > 0, np.inf, 0.0))
    c = float(np.nanmax(rat)) if np.any(np.isfinite(rat)) else float("nan")
    verdict = ""
    if mode == "critical":
        w = omegas**alpha
        a, bb = (w * sol)[good], (w * lin)[good]
        if a.size >= 2 and a[0] > 0 and bb[0] > 0:
            joint = (a[-1] / a[0] < 0.1 and bb[-1] / bb[0] < 0.1
                     and _eventually_monotone(a) and _eventually_monotone(bb))
            verdict = "consistent" if joint else "inconsistent"
        else:
            verdict = "consistent" if not np.any(sol) and not np.any(lin) else "inconclusive"
    return AsymptoticReport(mode, alpha, omegas, sol, lin, nl, fit, predicted, c, excluded, verdict)
