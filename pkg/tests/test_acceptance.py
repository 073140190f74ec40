"""Acceptance criteria 1-10, each at its stated tolerance and runtime budget.

Every test prints one ``PASS``/``FAIL`` line (also repeated in the pytest
terminal summary) and then asserts the same condition.
"""
import json
import math
import time

import numpy as np
import pytest
import yaml

from conftest import random_field
from nsc.cli import main as nsc_main
from nsc.coriolis_semigroup import SemigroupParams, apply_semigroup, apply_semigroup_decomposed, heat
from nsc.dispersive_lab import (
    ContinuumOptions,
    KernelQuery,
    SweepSpec,
    asymptotic_equivalence,
    beta0,
    fit_decay,
    oscillatory_kernel,
    strichartz_exponent,
    strichartz_sweep,
    vanishing_limit_check,
)
from nsc.experiments import strichartz_verdict
from nsc.initial_data import generate_initial_data, taylor_green
from nsc.littlewood_paley import BesovIndex, DyadicPartition, MixedNormSpec, besov_norm, build_partition, mixed_norm
from nsc.mild_solver import SolverConfig, fixed_point_consistency, linear_trajectory, picard_iterate, simulate
from nsc.spectral_core import Grid3

pytestmark = pytest.mark.slow


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


# ---------------------------------------------------------------------------
# 1. representation equivalence
# ---------------------------------------------------------------------------
def test_criterion_01_representation_equivalence(acceptance_report):
    g = Grid3(32)
    t = 0.05
    worst = 0.0
    with Timer() as tm:
        for seed in range(20):
            f = random_field(g, seed)
            for phase in (0.1, 1.0, 10.0):
                sp = SemigroupParams(phase / t, t)
                a = apply_semigroup(f, sp)
                b = apply_semigroup_decomposed(f, sp)
                worst = max(worst, (a - b).norm_l2() / a.norm_l2())
    ok = worst < 1e-12 and tm.elapsed < 10
    acceptance_report(1, ok, f"max relative difference {worst:.2e} (< 1e-12), {tm.elapsed:.1f}s (< 10s)")
    assert ok


# ---------------------------------------------------------------------------
# 2. semigroup law and zero-rotation reduction
# ---------------------------------------------------------------------------
def test_criterion_02_semigroup_law(acceptance_report):
    g = Grid3(32)
    worst = 0.0
    exact = True
    with Timer() as tm:
        for seed, (om, t, s) in enumerate([(1.0, 0.1, 0.2), (30.0, 0.05, 0.01), (1e3, 0.3, 0.02), (-7.0, 0.0, 0.4)]):
            f = random_field(g, seed)
            ab = apply_semigroup(apply_semigroup(f, SemigroupParams(om, s)), SemigroupParams(om, t))
            direct = apply_semigroup(f, SemigroupParams(om, t + s))
            worst = max(worst, (ab - direct).norm_l2() / f.norm_l2())
            exact &= bool(np.array_equal(apply_semigroup(f, SemigroupParams(0.0, t + s)).coeffs,
                                         heat(f, t + s).coeffs))
    ok = worst < 1e-12 and exact and tm.elapsed < 5
    acceptance_report(2, ok, f"composition error {worst:.2e} (< 1e-12), Omega=0 equals heat per mode: {exact}, "
                             f"{tm.elapsed:.1f}s (< 5s)")
    assert ok


# ---------------------------------------------------------------------------
# 3. energy audit
# ---------------------------------------------------------------------------
def test_criterion_03_energy_audit(acceptance_report):
    g = Grid3(32)
    u0 = taylor_green(g)
    with Timer() as tm:
        tr = simulate(u0, SolverConfig(0.001, 1.0, g, save_every=1000), 10.0)
        e0 = tr.flags["energy"][0]
        res = float(tr.flags["residual"].max() / e0)
        lin = [simulate(u0, SolverConfig(0.01, 1.0, g, save_every=100, nonlinear=False), om).flags["energy"]
               for om in (0.0, 10.0, 1e3)]
        work = max(float(np.max(np.abs(e - lin[0]) / lin[0])) for e in lin[1:])
    ok = res < 1e-6 and work < 1e-8 and not tr.flags["blowup"] and tm.elapsed < 60
    acceptance_report(3, ok, f"energy-balance residual {res:.2e} of E0 per unit time (< 1e-6), Coriolis work "
                             f"{work:.1e} (< 1e-8), {tm.elapsed:.1f}s (< 60s)")
    assert ok


# ---------------------------------------------------------------------------
# 4. Besov machinery
# ---------------------------------------------------------------------------
def test_criterion_04_besov_machinery(acceptance_report):
    with Timer() as tm:
        g = Grid3(32)
        part = build_partition(g)
        r = np.concatenate([g.xi_abs[g.xi_abs > 0], np.geomspace(1e-3, 1e3, 5001)])
        pou = float(np.max(np.abs(DyadicPartition(-20, 20).partition_sum(r) - 1.0)))
        pou = max(pou, float(np.max(np.abs(part.partition_sum(g.xi_abs[g.xi_abs > 0]) - 1.0))))
        g8 = Grid3(8)
        p8 = build_partition(g8)
        rng = np.random.default_rng(0)
        chain_ok = 0
        for seed in range(100):
            f = random_field(g8, seed)
            s, p = float(rng.uniform(-1, 1)), float(rng.choice([1.0, 1.5, 2.0, 3.0, 6.0, math.inf]))
            vals = [besov_norm(f, BesovIndex(s, p, q), p8) for q in (1.0, 1.5, 2.0, 4.0, math.inf)]
            chain_ok += all(b <= a for a, b in zip(vals, vals[1:]))
        emb_ok = 0
        idx = BesovIndex(0.3, 2.5, 2.0)
        for seed in range(20):
            f = random_field(g8, 100 + seed)
            tr = linear_trajectory(f, np.linspace(0, 1, 9), float(rng.uniform(0, 20)))
            tr.data *= rng.uniform(0.2, 2.0, size=(9, 1, 1))
            ok_pair = True
            for theta in (1.5, 4.0):
                plain = mixed_norm(tr, MixedNormSpec(theta, idx, False, 1.0), p8)
                tilde = mixed_norm(tr, MixedNormSpec(theta, idx, True, 1.0), p8)
                ok_pair &= (tilde <= plain * (1 + 1e-12)) if theta < idx.q else (plain <= tilde * (1 + 1e-12))
            emb_ok += ok_pair
    ok = pou < 1e-10 and chain_ok == 100 and emb_ok == 20 and tm.elapsed < 30
    acceptance_report(4, ok, f"partition-of-unity error {pou:.1e} (< 1e-10), l^q chain {chain_ok}/100, "
                             f"Minkowski embeddings {emb_ok}/20, {tm.elapsed:.1f}s (< 30s)")
    assert ok


# ---------------------------------------------------------------------------
# 5. dispersive kernel decay
# ---------------------------------------------------------------------------
def test_criterion_05_kernel_decay(acceptance_report):
    times = [1, 1.5, 2, 3, 4, 6, 8, 12, 16, 24, 32, 40, 50]
    with Timer() as tm:
        series = oscillatory_kernel(KernelQuery(times, pad_factor=4.0, resolution=64), +1, check_pad=True)
        fit = fit_decay(series.as_array(), with_log_correction=True)
    pad = float(series.pad_change.max())
    ok = -0.6 <= fit.exponent <= -0.4 and pad < 0.01 and tm.elapsed < 300
    acceptance_report(5, ok, f"fitted exponent {fit.exponent:.4f} (in [-0.6, -0.4]; predicted -0.5), fit residual "
                             f"{fit.residual:.3f}, pad change {pad:.2e} (< 1e-2), {tm.elapsed:.0f}s (< 300s)")
    assert ok


# ---------------------------------------------------------------------------
# 6. Strichartz rotation scaling
# ---------------------------------------------------------------------------
def test_criterion_06_strichartz_scaling(acceptance_report):
    omegas = [1, 10, 100, 1000, 10000]
    opts = ContinuumOptions(dilations=(0.25, 1, 4, 16, 64, 256))
    tables: dict = {}
    with Timer() as tm:
        interior = strichartz_sweep(SweepSpec(omegas, norm_spec=MixedNormSpec(2.2, BesovIndex(0.6, 4.0, 2.0), False, 1.0),
                                              continuum=opts), tables)
        boundary = strichartz_sweep(SweepSpec(omegas, norm_spec=MixedNormSpec(8 / 3, BesovIndex(0.6, 4.0, 2.0), False,
                                                                              1.0), continuum=opts), tables)
    pred = strichartz_exponent(2.2, 4.0)
    a_i, a_b = interior.fit.exponent, boundary.fit.exponent
    v_i = strichartz_verdict(a_i, pred, interior.fit.residual, interior.pad_change)
    v_b = strichartz_verdict(a_b, 0.0, boundary.fit.residual, boundary.pad_change)
    ok = (abs(a_b) <= 0.02 and a_i < 0 and abs(a_i - pred) <= 0.5 * abs(pred)
          and v_i == v_b == "consistent" and tm.elapsed < 600)
    acceptance_report(6, ok, f"boundary exponent {a_b:+.4f} (|a| <= 0.02), interior exponent {a_i:+.4f} "
                             f"(negative, within 50% of {pred:.4f}), tail share {interior.tail_fraction:.1e}, "
                             f"pad change {interior.pad_change:.1e}, {tm.elapsed:.0f}s (< 600s)")
    assert ok


# ---------------------------------------------------------------------------
# 7. critical vanishing
# ---------------------------------------------------------------------------
def test_criterion_07_critical_vanishing(acceptance_report):
    omegas = [10.0**k for k in range(8)]
    with Timer() as tm:
        res = vanishing_limit_check(2.0, omegas, ContinuumOptions())
    ok = res.ratio < 0.1 and tm.elapsed < 300
    acceptance_report(7, ok, f"norm ratio Omega=1e7 / Omega=1 is {res.ratio:.4f} (< 0.1), eventually monotone "
                             f"{res.eventually_monotone}, max tail share {res.tail_fraction.max():.2f}, "
                             f"{tm.elapsed:.0f}s (< 300s)")
    assert ok


# ---------------------------------------------------------------------------
# 8. contraction behaviour
# ---------------------------------------------------------------------------
def _moderate_data(g: Grid3, amplitude: float):
    return generate_initial_data(g, {"kind": "random-band-limited", "j_lo": 1, "j_hi": 2, "amplitude": amplitude},
                                 seed=7, s=0.6, q=2.0)


NORM = MixedNormSpec(7.5, BesovIndex(0.6, 2.4, 2.0), False, 1.0)


def test_criterion_08_contraction(acceptance_report):
    g = Grid3(24)
    u0 = _moderate_data(g, 50.0)
    cfg = SolverConfig(0.002, 1.0, g, picard_max_iters=12, picard_tol=1e-8, norm_spec=NORM)
    omegas = [0.1, 1.0, 10.0, 100.0]
    with Timer() as tm:
        reps = [picard_iterate(u0, cfg, om, keep_solution=(om == omegas[-1])) for om in omegas]
        top = reps[-1]
        rc = fixed_point_consistency(u0, cfg, omegas[-1], top) if top.converged else None
    kap = [r.terminal_kappa for r in reps]
    mono = all(b <= a for a, b in zip(kap, kap[1:]))
    top_ok = top.converged and top.contractive and top.terminal_kappa < 1 and top.iterations_used <= 8
    cons = rc is not None and rc.consistent
    ok = mono and top_ok and cons and tm.elapsed < 600
    detail = (f"terminal kappa {', '.join(f'{k:.4f}' for k in kap)} over Omega 0.1..100 (non-increasing: {mono}); "
              f"top: {top.iterations_used} iterations (<= 8), converged {top.converged}; ")
    detail += (f"Picard vs time stepping {rc.mismatch:.1e} <= error bound {rc.bound:.1e}" if rc is not None
               else "no converged limit to compare")
    acceptance_report(8, ok, detail + f", {tm.elapsed:.0f}s (< 600s)")
    assert ok


# ---------------------------------------------------------------------------
# 9. asymptotics
# ---------------------------------------------------------------------------
def test_criterion_09_asymptotics(acceptance_report):
    g = Grid3(24)
    u0 = _moderate_data(g, 50.0)
    cfg = SolverConfig(0.002, 1.0, g, norm_spec=NORM)
    spec = SweepSpec([1.0, 4.0, 16.0, 64.0, 256.0], solver=cfg)
    with Timer() as tm:
        rep = asymptotic_equivalence(u0, None, 0.0, "theorem-5.1(i)", spec)
        crit = asymptotic_equivalence(u0, None, 0.0, "critical", spec)
    bound = -2 * beta0(NORM.theta, NORM.besov.p) + 0.05
    a = rep.fit.exponent
    decay_ok = a <= bound and not rep.fit.inconclusive and not rep.excluded
    crit_ok = crit.joint_verdict == "consistent"
    ok = decay_ok and crit_ok and tm.elapsed < 600
    lin = crit.linear_diff
    acceptance_report(9, ok, f"weighted nonlinear exponent {a:.4f} (<= {bound:.4f}, fit residual "
                             f"{rep.fit.residual:.3f}); critical joint trend {crit.joint_verdict} (linear norm "
                             f"{lin[0]:.3g} -> {lin[-1]:.3g}, solution norm {crit.solution_diff[0]:.3g} -> "
                             f"{crit.solution_diff[-1]:.3g}), {tm.elapsed:.0f}s (< 600s)")
    assert ok


# ---------------------------------------------------------------------------
# 10. determinism
# ---------------------------------------------------------------------------
def test_criterion_10_determinism(acceptance_report, tmp_path):
    cfgs = {
        "simulate": {"experiment": "simulate", "seed": 3, "grid": {"n": 16},
                     "solver": {"dt": 0.01, "horizon": 0.1},
                     "norm": {"theta": 2, "s": 0.5, "p": 2, "q": 2},
                     "initial_data": {"kind": "random-band-limited", "j_lo": 0, "j_hi": 2, "amplitude": 5.0},
                     "omegas": [0.0, 10.0]},
        "picard": {"experiment": "picard", "seed": 3, "grid": {"n": 16},
                   "solver": {"dt": 0.02, "horizon": 0.2, "picard_max_iters": 4},
                   "norm": {"theta": 7.5, "s": 0.6, "p": 2.4, "q": 2},
                   "initial_data": {"kind": "random-band-limited", "j_lo": 1, "j_hi": 2, "amplitude": 5.0},
                   "omegas": [1.0, 10.0]},
    }
    same = []
    with Timer() as tm:
        for name, cfg in cfgs.items():
            p = tmp_path / f"{name}.yaml"
            p.write_text(yaml.safe_dump(cfg))
            for run in ("a", "b"):
                assert nsc_main([name, "--config", str(p), "--output-dir", str(tmp_path / name / run)]) == 0
            csvs = json.loads((tmp_path / name / "a" / "manifest.json").read_text())["outputs"]
            csvs = [c for c in csvs if c.endswith(".csv")]
            same += [(tmp_path / name / "a" / c).read_bytes() == (tmp_path / name / "b" / c).read_bytes() for c in csvs]
    ok = bool(same) and all(same)
    acceptance_report(10, ok, f"{sum(same)}/{len(same)} CSV outputs byte-identical across reruns, {tm.elapsed:.1f}s")
    assert ok
