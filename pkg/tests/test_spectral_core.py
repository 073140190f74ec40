import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_field
from nsc.spectral_core import (
    HEADER_BYTES,
    Grid3,
    PhysicalField,
    SpectralField,
    dealias,
    divergence_residual,
    forward_transform,
    inner_product,
    inverse_transform,
    leray_project,
    nonlinear_term,
    read_snapshot,
    riesz_transform,
    write_snapshot,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid3(15)
    with pytest.raises(ValueError):
        Grid3(6)
    with pytest.raises(ValueError):
        Grid3(16, -1.0)


def test_wavevector_convention():
    g = Grid3(8, 4.0)
    assert g.k1d.min() == -4 and g.k1d.max() == 3
    assert np.allclose(g.xi1d, 2 * np.pi / 4.0 * g.k1d)


def test_constant_field_transform():
    g = Grid3(8, 3.0)
    u = forward_transform(PhysicalField(g, np.full((1,) + g.shape, 2.5)))
    assert u.coeffs[0, 0, 0, 0] == pytest.approx(2.5 * 3.0**3, rel=1e-14)
    rest = np.abs(u.coeffs[0]).copy()
    rest[0, 0, 0] = 0
    assert rest.max() < 1e-12


def test_cosine_transform():
    g = Grid3(8, 2.0)
    x = np.broadcast_to(g.x[0], g.shape)
    u = forward_transform(PhysicalField(g, np.cos(2 * np.pi / g.box_length * x)[None]))
    ip, im = g.mode_index((1, 0, 0)), g.mode_index((-1, 0, 0))
    half = 0.5 * g.volume
    assert u.coeffs[(0,) + ip] == pytest.approx(half, rel=1e-13)
    assert u.coeffs[(0,) + im] == pytest.approx(half, rel=1e-13)
    c = np.abs(u.coeffs[0]).copy()
    c[ip] = c[im] = 0
    assert c.max() < 1e-12


@given(st.integers(0, 2**31 - 1), st.sampled_from([8, 12, 16]), st.floats(0.5, 20.0))
def test_round_trip(seed, n, L):
    g = Grid3(n, L)
    v = np.random.default_rng(seed).standard_normal((3,) + g.shape)
    back = inverse_transform(forward_transform(PhysicalField(g, v))).values
    assert np.abs(back - v).max() <= 1e-12 * np.abs(v).max()


def test_leray_single_modes():
    g = Grid3(8)
    idx = g.mode_index((1, 0, 0))
    u = SpectralField.zeros(g)
    u.coeffs[(0,) + idx] = 1.0
    assert np.abs(leray_project(u).coeffs).max() == 0.0
    v = SpectralField.zeros(g)
    v.coeffs[(1,) + idx] = 1.0
    assert np.array_equal(leray_project(v).coeffs, v.coeffs)


@given(st.integers(0, 2**31 - 1))
def test_leray_properties(seed):
    g = Grid3(12)
    u = random_field(g, seed, project=False)
    p = leray_project(u)
    assert divergence_residual(p) < 1e-12
    pp = leray_project(p)
    assert np.abs(pp.coeffs - p.coeffs).max() <= 1e-12 * np.abs(u.coeffs).max()
    # zero mode untouched
    w = u.copy()
    w.coeffs[:, 0, 0, 0] = [1.0, 2.0, 3.0]
    assert np.array_equal(leray_project(w).coeffs[:, 0, 0, 0], w.coeffs[:, 0, 0, 0])


def test_riesz_single_mode_and_zero_mode():
    g = Grid3(8)
    f = SpectralField.zeros(g, 1)
    idx = g.mode_index((2, 0, 0))
    f.coeffs[(0,) + idx] = 1.0
    f.coeffs[0, 0, 0, 0] = 5.0
    r = riesz_transform(f, 0)
    assert r.coeffs[(0,) + idx] == pytest.approx(-1j)
    assert r.coeffs[0, 0, 0, 0] == 0.0


@given(st.integers(0, 2**31 - 1))
def test_riesz_sum_of_squares(seed):
    g = Grid3(8)
    rng = np.random.default_rng(seed)
    f = forward_transform(PhysicalField(g, rng.standard_normal((1,) + g.shape)))
    f.coeffs[:, 0, 0, 0] = 0
    total = sum(riesz_transform(riesz_transform(f, i), i).coeffs for i in range(3))
    assert np.abs(total + f.coeffs).max() <= 1e-12 * np.abs(f.coeffs).max()


def test_riesz_consistency_with_rotation():
    """(1/2)[(I - iR)e^{i phi} + (I + iR)e^{-i phi}] = cos(phi) I + sin(phi) R for 100 random (xi, phi)."""
    from nsc.coriolis_semigroup import skew_symbol

    rng = np.random.default_rng(3)
    for _ in range(100):
        xi = rng.standard_normal(3)
        phi = rng.uniform(-10, 10)
        R = skew_symbol(xi)
        lhs = 0.5 * ((np.eye(3) - 1j * R) * np.exp(1j * phi) + (np.eye(3) + 1j * R) * np.exp(-1j * phi))
        rhs = np.cos(phi) * np.eye(3) + np.sin(phi) * R
        assert np.abs(lhs - rhs).max() < 1e-13


def test_nonlinear_zero_and_grid_mismatch(grid16):
    u = random_field(grid16, 1, band=(1, 4))
    z = SpectralField.zeros(grid16)
    assert np.abs(nonlinear_term(u, z).coeffs).max() == 0.0
    with pytest.raises(ValueError):
        nonlinear_term(u, random_field(Grid3(8), 1))


def test_nonlinear_support_matches_convolution():
    """Output modes are sums of input modes: brute-force check on a few-mode field."""
    g = Grid3(16)
    rng = np.random.default_rng(5)
    ks = [(1, 0, 0), (0, 2, 1), (1, -1, 2), (-2, 1, 0)]
    u = SpectralField.zeros(g)
    for k in ks:
        a = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        u.coeffs[(slice(None),) + g.mode_index(k)] += a
        u.coeffs[(slice(None),) + g.mode_index(tuple(-np.array(k)))] += a.conj()
    u = leray_project(u)
    out = nonlinear_term(u, u)
    allowed = set()
    for a in ks + [tuple(-np.array(k)) for k in ks]:
        for b in ks + [tuple(-np.array(k)) for k in ks]:
            allowed.add(tuple(np.array(a) + np.array(b)))
    mag = np.abs(out.coeffs).max(axis=0)
    nz = np.argwhere(mag > 1e-12 * mag.max())
    for i in nz:
        k = tuple(int(g.k1d[j]) for j in i)
        assert k in allowed


@given(st.integers(0, 2**31 - 1))
def test_nonlinear_energy_cancellation(seed):
    g = Grid3(16)
    u = dealias(random_field(g, seed))
    f = nonlinear_term(u, u)
    assert abs(inner_product(f, u)) <= 1e-10 * inner_product(u, u)
    assert divergence_residual(f) < 1e-12
    assert f.is_hermitian(1e-12)


def test_nonlinear_matches_physical_quadrature():
    """P div(u u) paired with a test field equals -<u u : grad w> computed in physical space."""
    g = Grid3(16)
    u = dealias(random_field(g, 11, band=(1, 3)))
    w = dealias(random_field(g, 12, band=(1, 3)))
    f = nonlinear_term(u, u)
    uu = inverse_transform(u).values
    grad_w = np.stack([inverse_transform(w.with_coeffs(1j * g.xi[i] * w.coeffs)).values for i in range(3)])
    # <div(u u), w> = -sum_ij int u_i u_j d_i w_j
    val = -np.einsum("ix,jx,ijx->", uu.reshape(3, -1), uu.reshape(3, -1), grad_w.reshape(3, 3, -1)) * g.cell_volume
    assert inner_product(f, w) == pytest.approx(val, rel=1e-10, abs=1e-12)


def test_dealias_rule():
    g = Grid3(24)
    k = np.abs(g.k1d)
    kept = k[np.isin(np.arange(24), np.unique(np.nonzero(g.dealias_mask)[0]))]
    assert kept.max() == 7  # 3|k| < n


def test_snapshot_round_trip(tmp_path, grid16):
    u = random_field(grid16, 2)
    p = tmp_path / "u.nscf"
    write_snapshot(u, p)
    raw = p.read_bytes()
    assert len(raw) == HEADER_BYTES + 8 * 3 * 16**3
    magic, version, n, ncomp, box = struct.unpack_from("<4sIIId", raw, 0)
    assert (magic, version, n, ncomp) == (b"NSCF", 1, 16, 3)
    assert box == pytest.approx(2 * np.pi)
    assert raw[struct.calcsize("<4sIIId"):HEADER_BYTES] == b"\x00" * (HEADER_BYTES - struct.calcsize("<4sIIId"))
    v = read_snapshot(p)
    assert np.abs(v.coeffs - u.coeffs).max() <= 1e-6 * np.abs(u.coeffs).max()
    # interleaved complex64, component-major, FFT storage order
    first = np.frombuffer(raw, "<f4", count=2, offset=HEADER_BYTES)
    assert first[0] == np.float32(u.coeffs[0, 0, 0, 0].real)


def test_snapshot_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.nscf"
    p.write_bytes(b"XXXX" + b"\x00" * 80)
    with pytest.raises(ValueError):
        read_snapshot(p)
    p.write_bytes(b"NSC")
    with pytest.raises(ValueError):
        read_snapshot(p)
