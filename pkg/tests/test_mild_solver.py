import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsc.coriolis_semigroup import SemigroupParams, apply_semigroup
from nsc.initial_data import random_band_limited
from nsc.littlewood_paley import BesovIndex, MixedNormSpec, build_partition, mixed_norm
from nsc.mild_solver import (
    NumericalFailure,
    SolverConfig,
    bilinear_all,
    bilinear_form,
    fixed_point_consistency,
    linear_trajectory,
    picard_iterate,
    simulate,
    step,
)
from nsc.spectral_core import Grid3, SpectralField, divergence_residual, nonlinear_term
from nsc.trajectory import Trajectory

G16 = Grid3(16)


@pytest.fixture(scope="module")
def u0():
    return random_band_limited(G16, 3, 0, 2) * 5.0


def _last(tr):
    return tr.field(len(tr.times) - 1)


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------
def test_config_validation_lists_errors():
    with pytest.raises(ValueError) as ei:
        SolverConfig(-1.0, 0.0, G16, picard_tol=0.0, save_every=0)
    msg = str(ei.value)
    for frag in ("dt", "horizon", "picard_tol", "save_every"):
        assert frag in msg


def test_step_shrinks_to_divide_horizon():
    cfg = SolverConfig(0.3, 1.0, G16)
    assert cfg.n_steps == 4 and cfg.dt_effective == pytest.approx(0.25)


# ---------------------------------------------------------------------------
# one step
# ---------------------------------------------------------------------------
def test_step_of_zero_is_zero():
    z = SpectralField.zeros(G16)
    assert np.abs(step(z, 0.01, 5.0).coeffs).max() == 0


def test_linear_step_is_semigroup(u0):
    a = step(u0, 0.02, 4.0, nonlinear=False)
    b = apply_semigroup(u0, SemigroupParams(4.0, 0.02))
    assert (a - b).norm_l2() == 0


def test_nonlinear_correction_is_quadratic(u0):
    d = [(step(u0 * e, 0.01, 2.0) - step(u0 * e, 0.01, 2.0, False)).norm_l2() for e in (1e-2, 5e-3)]
    assert d[0] / d[1] == pytest.approx(4.0, rel=0.01)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------
def test_second_order_in_dt(u0):
    outs = [_last(simulate(u0, SolverConfig(dt, 0.2, G16), 3.0)) for dt in (0.02, 0.01, 0.005)]
    e1, e2 = (outs[0] - outs[1]).norm_l2(), (outs[1] - outs[2]).norm_l2()
    assert e1 / e2 == pytest.approx(4.0, rel=0.1)


def test_simulate_zero_stays_zero():
    tr = simulate(SpectralField.zeros(G16), SolverConfig(0.01, 0.05, G16), 1.0)
    assert np.abs(tr.data).max() == 0 and not tr.flags["blowup"]


def test_tiny_amplitude_is_linear(u0):
    v = u0 * 1e-8
    tr = simulate(v, SolverConfig(0.01, 0.1, G16), 2.0)
    lin = apply_semigroup(v, SemigroupParams(2.0, 0.1))
    assert (_last(tr) - lin).norm_l2() <= 1e-6 * lin.norm_l2()


def test_energy_audit_and_invariants(u0):
    tr = simulate(u0, SolverConfig(0.005, 0.2, G16), 3.0)
    f = tr.flags
    assert np.all(np.diff(f["energy"]) <= 0)
    assert f["residual"].max() <= 1e-3 * f["dissipation"].max()
    assert f["div_residual"].max() < 1e-12
    assert all(tr.field(i).is_hermitian(1e-12) for i in range(len(tr.times)))
    assert tr.times[-1] == pytest.approx(0.2) and not f["blowup"]


def test_save_every_subsamples(u0):
    full = simulate(u0, SolverConfig(0.01, 0.1, G16), 1.0)
    sub = simulate(u0, SolverConfig(0.01, 0.1, G16, save_every=3), 1.0)
    assert np.allclose(sub.times, [0.0, 0.03, 0.06, 0.09, 0.1])
    assert np.array_equal(sub.data[-1], full.data[-1])


def test_simulate_input_checks(u0):
    cfg = SolverConfig(0.01, 0.05, G16)
    bad = u0.copy()
    bad.coeffs[0, 1, 0, 0] += 1.0  # divergence along xi_1
    with pytest.raises(ValueError):
        simulate(bad, cfg, 1.0)
    with pytest.raises(ValueError):
        simulate(random_band_limited(Grid3(8), 0, 0, 1), cfg, 1.0)


def test_blowup_flagged(u0):
    tr = simulate(u0 * 1e4, SolverConfig(0.05, 0.5, G16, blowup_threshold=1e5), 0.0)
    assert tr.flags["blowup"] and tr.flags["t_end"] < 0.5


# ---------------------------------------------------------------------------
# Duhamel operator
# ---------------------------------------------------------------------------
def _lin(u0, n, T=0.2, om=2.0):
    return linear_trajectory(u0, np.linspace(0, T, n + 1), om)


def test_bilinear_zero_cases(u0):
    tr = _lin(u0, 8)
    zero = linear_trajectory(SpectralField.zeros(G16), tr.times, 2.0)
    assert np.abs(bilinear_form(tr, tr, 0.0).coeffs).max() == 0
    assert np.abs(bilinear_form(tr, zero, 0.2).coeffs).max() == 0


def test_bilinear_recursive_matches_direct_and_pointwise(u0):
    tr = _lin(u0, 6)
    rec = bilinear_all(tr, tr, method="recursive")
    direct = bilinear_all(tr, tr, method="direct")
    scale = np.abs(direct.data).max()
    assert np.abs(rec.data - direct.data).max() <= 1e-12 * scale
    pt = bilinear_form(tr, tr, float(tr.times[4]))
    assert (pt - rec.field(4)).norm_l2() <= 1e-12 * pt.norm_l2()


def test_bilinear_trapezoid_second_order(u0):
    vals = [_last(bilinear_all(tr, tr)) for tr in (_lin(u0, n) for n in (8, 16, 32))]
    r = (vals[0] - vals[1]).norm_l2() / (vals[1] - vals[2]).norm_l2()
    assert r == pytest.approx(4.0, rel=0.1)


def test_bilinear_off_grid_time(u0):
    tr = _lin(u0, 8)
    out = bilinear_form(tr, tr, 0.11)
    assert out.norm_l2() > 0 and divergence_residual(out) < 1e-12
    with pytest.raises(ValueError):
        bilinear_form(tr, tr, 0.5)


def test_bilinear_first_interval_trapezoid(u0):
    tr = _lin(u0, 4)
    h = float(tr.times[1])
    F0 = nonlinear_term(u0, u0)
    F1 = nonlinear_term(tr.field(1), tr.field(1))
    expect = (apply_semigroup(F0, SemigroupParams(2.0, h)) + F1) * (0.5 * h)
    assert (bilinear_form(tr, tr, h) - expect).norm_l2() <= 1e-12 * expect.norm_l2()


def test_bilinear_pair_checks(u0):
    a = _lin(u0, 4)
    with pytest.raises(ValueError):
        bilinear_all(a, _lin(u0, 4, om=3.0))
    with pytest.raises(ValueError):
        bilinear_all(a, _lin(u0, 5))


# ---------------------------------------------------------------------------
# Picard
# ---------------------------------------------------------------------------
SPEC = MixedNormSpec(4.0, BesovIndex(0.6, 2.4, 2.0), False, 0.2)


def test_picard_zero_data():
    rep = picard_iterate(SpectralField.zeros(G16), SolverConfig(0.02, 0.2, G16, norm_spec=SPEC), 1.0)
    assert rep.converged and rep.iterations_used == 0 and rep.iterate_norms[0] == 0


@pytest.fixture(scope="module")
def picard_run(u0):
    cfg = SolverConfig(0.01, 0.2, G16, picard_max_iters=12, picard_tol=1e-10, norm_spec=SPEC)
    return cfg, picard_iterate(u0, cfg, 2.0)


def test_picard_report_invariants(picard_run):
    cfg, rep = picard_run
    d = rep.difference_norms
    assert rep.converged and rep.contractive and not rep.non_contractive_flag
    assert len(rep.iterate_norms) == rep.iterations_used + 1 == d.size + 1
    assert d[-1] <= cfg.picard_tol * rep.iterate_norms[-1]
    # kappa_k = d_k / d_{k-1}
    assert np.allclose(rep.contraction_factors, d[1:1 + rep.contraction_factors.size] / d[:rep.contraction_factors.size])
    assert np.all(rep.contraction_factors < 1)


def test_picard_limit_is_a_fixed_point(u0, picard_run):
    cfg, rep = picard_run
    u = rep.solution
    lin = linear_trajectory(u0, u.times, 2.0)
    resid = Trajectory(G16, u.times, lin.data - bilinear_all(u, u).data - u.data, 2.0, u.mode_index)
    part = build_partition(G16)
    assert mixed_norm(resid, SPEC, part) <= 1e-8 * mixed_norm(u, SPEC, part)


def test_picard_agrees_with_time_stepping(u0, picard_run):
    cfg, rep = picard_run
    rc = fixed_point_consistency(u0, cfg, 2.0, rep)
    assert rc.consistent and rc.mismatch <= rc.bound
    assert rc.mismatch < 1e-2 * rc.picard_norm


def test_picard_large_data_flagged():
    big = random_band_limited(G16, 3, 0, 2) * 2000.0
    rep = picard_iterate(big, SolverConfig(0.02, 0.2, G16, picard_max_iters=8, norm_spec=SPEC), 0.0)
    assert not rep.converged and not rep.contractive
