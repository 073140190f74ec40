"""Duhamel bilinear operator, exponential time stepping and Picard iteration.

The rotating system ``u_t - Lap u + Omega e3 x u + grad p + div(u (x) u) = 0``
has the mild form

    u(t) = T(t) u0 - B(u, u)(t),   B(u, v)(t) = int_0^t T(t - s) P div(u (x) v)(s) ds,

with ``T`` the Stokes-Coriolis semigroup.  ``F(u) = P div(u (x) u)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coriolis_semigroup import SemigroupParams, apply_semigroup, apply_semigroup_flat
from .littlewood_paley import (
    BesovIndex,
    DyadicPartition,
    MixedNormSpec,
    besov_norm,
    build_partition,
    mixed_norm,
)
from .spectral_core import (
    DIV_TOL,
    Grid3,
    SpectralField,
    divergence_residual,
    nonlinear_term,
)
from .trajectory import Trajectory

__all__ = [
    "Trajectory",
    "SolverConfig",
    "PicardReport",
    "ConsistencyReport",
    "fixed_point_consistency",
    "NumericalFailure",
    "bilinear_form",
    "bilinear_all",
    "step",
    "simulate",
    "linear_trajectory",
    "picard_iterate",
    "energy",
    "dissipation_rate",
]


class NumericalFailure(RuntimeError):
    """Non-finite coefficients or flagged blowup."""


@dataclass
class SolverConfig:
    dt: float
    horizon: float
    grid: Grid3
    blowup_threshold: float | None = None  # absolute Besov bound; None -> 1e6 x initial
    picard_max_iters: int = 8
    picard_tol: float = 1e-8
    norm_spec: MixedNormSpec | None = None
    save_every: int = 1
    nonlinear: bool = True

    def __post_init__(self) -> None:
        errs = self.validate()
        if errs:
            raise ValueError("; ".join(errs))
        if self.norm_spec is None:
            self.norm_spec = MixedNormSpec(2.0, BesovIndex(0.5, 2.0, 2.0), False, self.horizon)

    def validate(self) -> list[str]:
        errs = []
        if not self.dt > 0:
            errs.append("dt must be positive")
        if not self.horizon > 0:
            errs.append("horizon must be positive")
        elif self.dt > self.horizon:
            errs.append("dt must not exceed horizon")
        if self.blowup_threshold is not None and not self.blowup_threshold > 0:
            errs.append("blowup_threshold must be positive")
        if int(self.picard_max_iters) < 0:
            errs.append("picard_max_iters must be >= 0")
        if not self.picard_tol > 0:
            errs.append("picard_tol must be positive")
        if int(self.save_every) < 1:
            errs.append("save_every must be >= 1")
        return errs

    @property
    def n_steps(self) -> int:
        """Number of steps; the step is shrunk so that it divides the horizon."""
        return max(1, int(math.ceil(self.horizon / self.dt - 1e-9)))

    @property
    def dt_effective(self) -> float:
        return self.horizon / self.n_steps


@dataclass
class PicardReport:
    iterate_norms: np.ndarray
    difference_norms: np.ndarray
    contraction_factors: np.ndarray
    converged: bool
    iterations_used: int
    contractive: bool = False
    non_contractive_flag: bool = False
    omega: float = 0.0
    solution: Trajectory | None = field(default=None, repr=False)

    @property
    def terminal_kappa(self) -> float:
        k = self.contraction_factors
        return float(k[-1]) if k.size else float("nan")

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "iterate_norms": [float(x) for x in self.iterate_norms],
            "difference_norms": [float(x) for x in self.difference_norms],
            "contraction_factors": [float(x) for x in self.contraction_factors],
            "converged": bool(self.converged),
            "contractive": bool(self.contractive),
            "non_contractive_flag": bool(self.non_contractive_flag),
            "iterations_used": int(self.iterations_used),
        }


# ---------------------------------------------------------------------------
# energy bookkeeping
# ---------------------------------------------------------------------------
def energy(u: SpectralField) -> float:
    """Kinetic energy ``1/2 ||u||_2^2``."""
    return 0.5 * u.norm_l2() ** 2


def dissipation_rate(u: SpectralField) -> float:
    """``||grad u||_2^2``."""
    p = np.sum(np.abs(u.coeffs) ** 2, axis=0)
    return float(np.sum(u.grid.xi_sq * p) / u.grid.volume)


def _step_dissipation(p0: np.ndarray, p1: np.ndarray, xi_sq: np.ndarray, dt: float, volume: float) -> float:
    """``int ||grad u||^2`` over one step, exponentially fitted per mode.

    Each mode's power is assumed to evolve like ``exp(-c t)`` between the two
    samples, giving the logarithmic mean ``(A - B) / ln(A / B)``; this is
    exact for the linear part of the flow.
    """
    a = p0
    b = p1
    lm = np.empty_like(a)
    both = (a > 0) & (b > 0)
    ratio = np.ones_like(a)
    ratio[both] = a[both] / b[both]
    close = both & (np.abs(ratio - 1.0) < 1e-6)
    far = both & ~close
    lm[far] = (a[far] - b[far]) / np.log(ratio[far])
    lm[close] = 0.5 * (a[close] + b[close])
    lm[~both] = 0.0
    return float(dt * np.sum(xi_sq * lm) / volume)


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------
def _F(u: SpectralField) -> SpectralField:
    return nonlinear_term(u, u)


def step(u_n: SpectralField, dt: float, omega: float, nonlinear: bool = True) -> SpectralField:
    """One exponential-trapezoid (ETD-RK2) step with the exact semigroup.

    ``a = E u - dt E F(u)``;  ``u_new = E u - dt/2 [E F(u) + F(a)]`` with ``E = T(dt)``.
    """
    sp = SemigroupParams(omega, dt)
    eu = apply_semigroup(u_n, sp, auto_project=False)
    if not nonlinear:
        return eu
    fu = _F(u_n)
    efu = apply_semigroup(fu, sp)
    a = eu - efu * dt
    fa = _F(a)
    out = eu - (efu + fa) * (0.5 * dt)
    if not np.all(np.isfinite(out.coeffs)):
        raise NumericalFailure("non-finite coefficients after step")
    return out.with_coeffs(out.coeffs, divergence_free=True)


def simulate(u0: SpectralField, cfg: SolverConfig, omega: float) -> Trajectory:
    """Time-step ``u0`` on ``[0, horizon]`` and record diagnostics per step.

    ``traj.flags`` holds ``blowup`` (bool), ``t_end``, and per-step arrays
    ``energy``, ``dissipation``, ``residual`` (energy-balance residual per unit
    time) and ``div_residual``, plus ``besov`` (the monitored norm).
    """
    if divergence_residual(u0) > DIV_TOL:
        raise ValueError("initial data must be divergence-free")
    if abs(u0.coeffs[:, 0, 0, 0]).max() > 0:
        raise ValueError("initial data must be mean-zero")
    g = cfg.grid
    if u0.grid != g:
        raise ValueError("initial data grid differs from solver grid")
    ns = cfg.n_steps
    dt = cfg.dt_effective
    part = build_partition(g)
    mon = BesovIndex(cfg.norm_spec.besov.s, 2.0, cfg.norm_spec.besov.q)
    b0 = besov_norm(u0, mon, part)
    threshold = cfg.blowup_threshold if cfg.blowup_threshold is not None else 1e6 * max(b0, 1e-300)

    save = int(cfg.save_every)
    n_saved = ns // save + (1 if ns % save else 0) + 1
    times = np.empty(n_saved)
    outside = ~g.dealias_mask
    compact = not np.any(u0.coeffs[:, outside])
    traj = Trajectory.empty(g, np.arange(n_saved, dtype=float), omega, compact)

    en = np.empty(ns + 1)
    dis = np.empty(ns + 1)
    res = np.zeros(ns)
    div = np.empty(ns + 1)
    bes = np.empty(ns + 1)

    u = u0
    p_prev = np.sum(np.abs(u.coeffs) ** 2, axis=0)
    en[0] = energy(u)
    dis[0] = dissipation_rate(u)
    div[0] = divergence_residual(u)
    bes[0] = b0
    times[0] = 0.0
    traj.set_flat(0, traj.pack(u))
    k_saved = 1
    blowup = False
    last = 0
    for n in range(1, ns + 1):
        try:
            u = step(u, dt, omega, cfg.nonlinear)
        except NumericalFailure:
            blowup = True
            break
        p_now = np.sum(np.abs(u.coeffs) ** 2, axis=0)
        en[n] = 0.5 * float(p_now.sum()) / g.volume
        dis[n] = float(np.sum(g.xi_sq * p_now)) / g.volume
        diss = _step_dissipation(p_prev, p_now, g.xi_sq, dt, g.volume)
        res[n - 1] = abs(en[n] - en[n - 1] + diss) / dt
        div[n] = divergence_residual(u)
        bes[n] = besov_norm(u, mon, part)
        p_prev = p_now
        last = n
        if n % save == 0 or n == ns:
            times[k_saved] = n * dt
            traj.set_flat(k_saved, traj.pack(u))
            k_saved += 1
        if not math.isfinite(bes[n]) or bes[n] > threshold:
            blowup = True
            break
    if k_saved < n_saved:
        traj = Trajectory(g, times[:k_saved], traj.data[:k_saved].copy(), omega, traj.mode_index)
    else:
        traj.times = times
    stop = last + 1
    traj.flags.update(
        blowup=blowup,
        t_end=last * dt,
        dt=dt,
        step_times=np.arange(stop) * dt,
        energy=en[:stop],
        dissipation=dis[:stop],
        residual=res[:last],
        div_residual=div[:stop],
        besov=bes[:stop],
    )
    return traj


def linear_trajectory(u0: SpectralField, times: np.ndarray, omega: float,
                      compact: bool | None = None) -> Trajectory:
    """Samples of ``T(t) u0`` at the given times (exact semigroup)."""
    if compact is None:
        compact = not np.any(u0.coeffs[:, ~u0.grid.dealias_mask])
    traj = Trajectory.empty(u0.grid, times, omega, compact)
    c0 = traj.pack(u0)
    xi = traj.xi_modes
    for i, t in enumerate(traj.times):
        traj.set_flat(i, apply_semigroup_flat(c0, xi, omega, t))
    return traj


# ---------------------------------------------------------------------------
# Duhamel operator
# ---------------------------------------------------------------------------
def _check_pair(u: Trajectory, v: Trajectory) -> None:
    if u.grid != v.grid:
        raise ValueError("trajectories live on different grids")
    if u.omega != v.omega:
        raise ValueError("trajectories carry different rotation speeds")
    if u.times.shape != v.times.shape or not np.allclose(u.times, v.times, rtol=1e-12, atol=0):
        raise ValueError("trajectories must share one time grid")


def _nonlinear_samples(u: Trajectory, v: Trajectory, upto: int) -> list[np.ndarray]:
    out = []
    for i in range(upto):
        fu = u.field(i)
        fv = fu if v is u else v.field(i)
        out.append(u.pack(nonlinear_term(fu, fv)))
    return out


def bilinear_form(u: Trajectory, v: Trajectory, t: float) -> SpectralField:
    """``B(u, v)(t)`` by the composite trapezoid rule on the trajectory grid.

    When ``t`` falls between samples the integrand is linearly interpolated
    at ``t`` for the last partial interval.
    """
    _check_pair(u, v)
    if t < 0 or t > u.times[-1] * (1 + 1e-12):
        raise ValueError(f"t = {t} outside trajectory range [0, {u.times[-1]}]")
    if t == 0:
        return u.expand(np.zeros_like(u.flat(0)))
    k_exact = u.index_of(t)
    if k_exact is not None:
        G = _nonlinear_samples(u, v, k_exact + 1)
        nodes = u.times[: k_exact + 1].copy()
        nodes[-1] = t
        vals = G
    else:
        k = int(np.searchsorted(u.times, t, side="right"))
        G = _nonlinear_samples(u, v, k + 1)
        frac = (t - u.times[k - 1]) / (u.times[k] - u.times[k - 1])
        nodes = np.append(u.times[:k], t)
        vals = G[:k] + [G[k - 1] + frac * (G[k] - G[k - 1])]
    xi = u.xi_modes
    acc = np.zeros_like(vals[0])
    for i in range(len(nodes)):
        w = 0.5 * ((nodes[i] - nodes[i - 1]) if i > 0 else 0.0) + 0.5 * (
            (nodes[i + 1] - nodes[i]) if i + 1 < len(nodes) else 0.0)
        if w == 0.0:
            continue
        acc += w * apply_semigroup_flat(vals[i], xi, u.omega, t - nodes[i])
    return u.expand(acc)


def bilinear_all(u: Trajectory, v: Trajectory, G: list[np.ndarray] | None = None,
                 method: str = "auto") -> Trajectory:
    """``B(u, v)(t_i)`` at every sample time.

    ``method="recursive"`` (uniform grids) uses ``A_m = T(h) A_{m-1} + h G_m``,
    ``C_m = T(h) C_{m-1}`` with ``C_0 = G_0``, and ``S_m = A_m - h/2 (G_m - C_m)``,
    which is the composite trapezoid rule in O(n) semigroup applications.
    ``method="direct"`` evaluates the trapezoid sums independently (O(n^2)).
    """
    _check_pair(u, v)
    n = len(u)
    if G is None:
        G = _nonlinear_samples(u, v, n)
    xi = u.xi_modes
    om = u.omega
    out = Trajectory(u.grid, u.times.copy(), np.zeros_like(u.data), om, u.mode_index)
    if method == "auto":
        method = "recursive" if u.is_uniform() else "direct"
    if method == "recursive":
        if not u.is_uniform():
            raise ValueError("recursive quadrature needs a uniform time grid")
        if n == 1:
            return out
        h = float(u.times[1] - u.times[0])
        A = np.zeros_like(G[0])
        C = G[0].copy()
        for m in range(1, n):
            A = apply_semigroup_flat(A, xi, om, h) + h * G[m]
            C = apply_semigroup_flat(C, xi, om, h)
            out.set_flat(m, A - 0.5 * h * (G[m] - C))
        return out
    if method != "direct":
        raise ValueError(f"unknown quadrature method {method!r}")
    t = u.times
    for m in range(1, n):
        acc = np.zeros_like(G[0])
        for i in range(m + 1):
            w = 0.5 * ((t[i] - t[i - 1]) if i > 0 else 0.0) + 0.5 * ((t[i + 1] - t[i]) if i < m else 0.0)
            acc += w * apply_semigroup_flat(G[i], xi, om, t[m] - t[i])
        out.set_flat(m, acc)
    return out


# ---------------------------------------------------------------------------
# Picard iteration
# ---------------------------------------------------------------------------
def picard_iterate(u0: SpectralField, cfg: SolverConfig, omega: float,
                   part: DyadicPartition | None = None, keep_solution: bool = True) -> PicardReport:
    """Iterate ``u^{k+1} = T(.) u0 - B(u^k, u^k)`` on the uniform grid of step ``dt``.

    ``difference_norms[k] = ||u^{k+1} - u^k||`` and ``iterate_norms[k] =
    ||u^k||`` in ``cfg.norm_spec``.  Convergence: difference norm at most
    ``picard_tol`` times the norm of the new iterate.  Three consecutive
    growing differences flag the run as non-contractive and stop it.
    """
    if divergence_residual(u0) > DIV_TOL:
        raise ValueError("initial data must be divergence-free")
    if u0.grid != cfg.grid:
        raise ValueError("initial data grid differs from solver grid")
    part = part or build_partition(cfg.grid)
    spec = cfg.norm_spec
    ns = cfg.n_steps
    times = np.linspace(0.0, cfg.horizon, ns + 1)
    lin = linear_trajectory(u0, times, omega)

    def nrm(tr: Trajectory) -> float:
        return mixed_norm(tr, spec, part)

    n0 = nrm(lin)
    iterate_norms = [n0]
    diffs: list[float] = []
    kappas: list[float] = []
    if n0 == 0.0:
        return PicardReport(np.array(iterate_norms), np.zeros(0), np.zeros(0), True, 0,
                            True, False, omega, lin if keep_solution else None)
    cur = lin
    converged = False
    flagged = False
    used = 0
    for k in range(int(cfg.picard_max_iters)):
        B = bilinear_all(cur, cur)
        nxt = Trajectory(cur.grid, times, lin.data - B.data, omega, lin.mode_index)
        del B
        if not np.all(np.isfinite(nxt.data)):
            flagged = True
            break
        diff = Trajectory(cur.grid, times, nxt.data - cur.data, omega, lin.mode_index)
        d = nrm(diff)
        del diff
        nn = nrm(nxt)
        used = k + 1
        if diffs and diffs[-1] > cfg.picard_tol * iterate_norms[-1]:
            kappas.append(d / diffs[-1])
        diffs.append(d)
        iterate_norms.append(nn)
        cur = nxt
        if d <= cfg.picard_tol * nn:
            converged = True
            break
        if len(diffs) >= 4 and diffs[-1] > diffs[-2] > diffs[-3] > diffs[-4]:
            flagged = True
            break
        if not math.isfinite(nn) or nn > 1e6 * n0:
            flagged = True
            break
    kap = np.asarray(kappas)
    contractive = (not flagged) and bool(np.all(kap[1:] < 1.0)) if kap.size > 1 else (not flagged and bool(np.all(kap < 1.0)))
    return PicardReport(np.asarray(iterate_norms), np.asarray(diffs), kap, converged, used,
                        contractive, flagged, omega, cur if keep_solution else None)


# ---------------------------------------------------------------------------
# fixed-point consistency
# ---------------------------------------------------------------------------
@dataclass
class ConsistencyReport:
    """Picard limit versus time-stepped solution at the horizon.

    ``mismatch`` is the Besov norm of ``u_picard(T) - u_step(T)``;
    ``bound`` is the combined error estimate: second-order Richardson
    estimates ``||X_dt(T) - X_2dt(T)|| / 3`` of both paths plus the
    remaining Picard iteration error ``d_last * kappa / (1 - kappa)``.
    """

    omega: float
    picard_norm: float
    step_norm: float
    mismatch: float
    richardson_picard: float
    richardson_step: float
    iteration_error: float
    picard: PicardReport = field(repr=False, default=None)

    @property
    def bound(self) -> float:
        return self.richardson_picard + self.richardson_step + self.iteration_error

    @property
    def consistent(self) -> bool:
        return self.mismatch <= self.bound

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "picard_terminal_norm": self.picard_norm,
            "step_terminal_norm": self.step_norm,
            "mismatch": self.mismatch,
            "richardson_picard": self.richardson_picard,
            "richardson_step": self.richardson_step,
            "iteration_error": self.iteration_error,
            "bound": self.bound,
            "consistent": self.consistent,
        }


def _terminal(tr: Trajectory) -> SpectralField:
    return tr.field(len(tr.times) - 1)


def fixed_point_consistency(u0: SpectralField, cfg: SolverConfig, omega: float,
                            report: PicardReport | None = None) -> ConsistencyReport:
    """Compare the converged Picard iterate with ``simulate`` at ``t = horizon``.

    Both paths are also run with step ``2 dt`` to estimate their
    discretisation errors.  The comparison norm is ``B^s_{p,q}`` of
    ``cfg.norm_spec``.  Pass ``report`` to reuse an existing Picard run
    (it must hold its solution).
    """
    part = build_partition(cfg.grid)
    idx = cfg.norm_spec.besov
    coarse = SolverConfig(2 * cfg.dt_effective, cfg.horizon, cfg.grid, cfg.blowup_threshold,
                          cfg.picard_max_iters, cfg.picard_tol, cfg.norm_spec, 1, cfg.nonlinear)
    if report is None or report.solution is None:
        report = picard_iterate(u0, cfg, omega, part)
    if not report.converged:
        raise NumericalFailure("Picard iteration did not converge; no limit to compare")
    rep2 = picard_iterate(u0, coarse, omega, part)
    s1 = simulate(u0, cfg, omega)
    s2 = simulate(u0, coarse, omega)
    if s1.flags["blowup"] or s2.flags["blowup"]:
        raise NumericalFailure("time-stepped solution blew up")
    p1, p2 = _terminal(report.solution), _terminal(rep2.solution)
    q1, q2 = _terminal(s1), _terminal(s2)

    def nb(f: SpectralField) -> float:
        return besov_norm(f, idx, part)

    kap = report.contraction_factors
    k_last = float(kap[-1]) if kap.size else 0.0
    d_last = float(report.difference_norms[-1]) if report.difference_norms.size else 0.0
    it_err = d_last * k_last / (1.0 - k_last) if k_last < 1 else math.inf
    return ConsistencyReport(
        omega=omega,
        picard_norm=nb(p1),
        step_norm=nb(q1),
        mismatch=nb(p1 - q1),
        richardson_picard=nb(p1 - p2) / 3.0,
        richardson_step=nb(q1 - q2) / 3.0,
        iteration_error=it_err,
        picard=report,
    )
