import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from nsc.coriolis_semigroup import (
    NotDivergenceFree,
    SemigroupParams,
    apply_semigroup,
    apply_semigroup_decomposed,
    heat,
    heat_smoothing_envelope,
    riesz_matrix_apply,
    skew_symbol,
    wave_operator,
)
from nsc.spectral_core import Grid3, SpectralField, divergence_residual


def _rel(a: SpectralField, b: SpectralField) -> float:
    return (a - b).norm_l2() / max(b.norm_l2(), 1e-300)


def test_hand_example_single_mode():
    """f = e1 e^{i kappa x3}: T f = exp(-kappa^2 t) (cos Omega t, -sin Omega t, 0)."""
    g = Grid3(8, 2.0)
    kappa = 2 * math.pi / g.box_length
    f = SpectralField.zeros(g)
    idx = g.mode_index((0, 0, 1))
    f.coeffs[(0,) + idx] = 1.0
    om, t = 3.0, 0.2
    out = apply_semigroup(f, SemigroupParams(om, t))
    expect = math.exp(-kappa**2 * t) * np.array([math.cos(om * t), -math.sin(om * t), 0.0])
    assert np.allclose(out.coeffs[(slice(None),) + idx], expect, atol=1e-15, rtol=1e-13)
    rest = out.coeffs.copy()
    rest[(slice(None),) + idx] = 0
    assert np.abs(rest).max() == 0


def test_zero_rotation_equals_heat(grid16):
    f = random_field(grid16, 1)
    assert _rel(apply_semigroup(f, SemigroupParams(0.0, 0.3)), heat(f, 0.3)) < 1e-15


def test_time_zero_identity(grid16):
    f = random_field(grid16, 2)
    assert _rel(apply_semigroup(f, SemigroupParams(7.0, 0.0)), f) < 1e-15


@given(st.integers(0, 2**31 - 1), st.floats(-100, 100), st.floats(0, 1))
def test_decomposed_agrees_with_closed_form(seed, om, t):
    g = Grid3(8)
    f = random_field(g, seed)
    sp = SemigroupParams(om, t)
    a = apply_semigroup(f, sp)
    b = apply_semigroup_decomposed(f, sp)
    assert (a - b).norm_l2() <= 1e-12 * max(f.norm_l2(), 1e-300)


@given(st.integers(0, 2**31 - 1), st.floats(-50, 50), st.floats(0, 0.5), st.floats(0, 0.5))
def test_semigroup_law(seed, om, t, s):
    g = Grid3(8)
    f = random_field(g, seed)
    ab = apply_semigroup(apply_semigroup(f, SemigroupParams(om, s)), SemigroupParams(om, t))
    direct = apply_semigroup(f, SemigroupParams(om, t + s))
    assert (ab - direct).norm_l2() <= 1e-12 * f.norm_l2()


@given(st.integers(0, 2**31 - 1), st.floats(-1e4, 1e4), st.floats(0, 0.3))
def test_l2_norm_equals_heat_norm(seed, om, t):
    g = Grid3(8)
    f = random_field(g, seed)
    a = apply_semigroup(f, SemigroupParams(om, t)).norm_l2()
    assert a == pytest.approx(heat(f, t).norm_l2(), rel=1e-12)


def test_output_divergence_free(grid16):
    f = random_field(grid16, 5)
    assert divergence_residual(apply_semigroup(f, SemigroupParams(40.0, 0.1))) < 1e-12


def test_wave_operators_inverse(grid16):
    f = random_field(grid16, 3)
    back = wave_operator(wave_operator(f, 2.7, +1), 2.7, -1)
    assert _rel(back, f) < 1e-15
    with pytest.raises(ValueError):
        wave_operator(f, 1.0, 0)


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_skew_symbol_identities(xi):
    xi = np.asarray(xi)
    R = skew_symbol(xi)
    n = xi / np.linalg.norm(xi)
    assert np.allclose(R.T, -R, atol=1e-15)
    assert np.allclose(R @ xi, 0, atol=1e-12)
    # R^2 = -(I - n n^T): minus the identity on the plane orthogonal to xi, zero along xi
    assert np.allclose(R @ R, -(np.eye(3) - np.outer(n, n)), atol=1e-12)
    v = np.array([0.3, -1.1, 0.7])
    assert np.allclose(R @ v, np.cross(v, n), atol=1e-12)


def test_skew_symbol_zero_mode():
    assert np.all(skew_symbol(np.zeros(3)) == 0)


def test_riesz_matrix_has_symbol_minus_i_R(grid16):
    f = random_field(grid16, 4)
    out = riesz_matrix_apply(f)
    R = skew_symbol(np.stack(np.broadcast_arrays(*grid16.xi)))
    expect = -1j * np.einsum("ij...,j...->i...", R, f.coeffs)
    assert np.abs(out.coeffs - expect).max() <= 1e-13 * np.abs(f.coeffs).max()


def test_not_divergence_free_rejected(grid16):
    f = random_field(grid16, 6, project=False)
    with pytest.raises(NotDivergenceFree):
        apply_semigroup(f, SemigroupParams(1.0, 0.1))
    out = apply_semigroup(f, SemigroupParams(1.0, 0.1), auto_project=True)
    assert divergence_residual(out) < 1e-12


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        SemigroupParams(1.0, -0.1)


@pytest.mark.parametrize("ds", [0.5, 1.0, 1.5])
def test_heat_smoothing_envelope_exponent(ds):
    """sup_j ||e^{t Lap} f_j||_{B^{s+ds}} / ||f_j||_{B^s} ~ t^{-ds/2}, exponent within 10%."""
    times = np.geomspace(1e-3, 0.3, 25)
    env = heat_smoothing_envelope(Grid3(64), 0.5, 0.5 + ds, times, seed=0)
    slope = np.polyfit(np.log(env[:, 0]), np.log(env[:, 1]), 1)[0]
    assert abs(slope - (-ds / 2)) <= 0.1 * ds / 2
