import math

import numpy as np
import pytest
from scipy import integrate

from nsc import continuum as cont
from nsc.dispersive_lab import ContinuumOptions
from nsc.littlewood_paley import profile


def torus_oracle(f, omega, t, j, p, L=48.0, n=96):
    """Block L^p norm of the same Fourier amplitudes sampled on a large periodic box."""
    k1 = 2 * np.pi / L * np.fft.fftfreq(n, 1.0 / n)
    X1, X2, X3 = np.meshgrid(k1, k1, k1, indexing="ij")
    K = np.hypot(X1, X2)
    tau, pi, r = f.evolve(K, X3, omega, t)
    w = profile(r * 2.0 ** (-j))
    cpsi = np.divide(X1, K, out=np.ones_like(K), where=K > 0)
    spsi = np.divide(X2, K, out=np.zeros_like(K), where=K > 0)
    ca = np.divide(X3, r, out=np.zeros_like(r), where=r > 0)
    sa = np.divide(K, r, out=np.zeros_like(r), where=r > 0)
    eT = np.stack([-spsi, cpsi, 0 * K])
    eP = np.stack([ca * cpsi, ca * spsi, -sa])
    u = np.fft.ifftn(w * (tau * eT + pi * eP), axes=(1, 2, 3)).real * n**3 / L**3
    mag = np.sqrt((u**2).sum(0))
    if math.isinf(p):
        return float(mag.max())
    return float((np.sum(mag**p) * (L / n) ** 3) ** (1 / p))


@pytest.mark.parametrize("omega,t", [(0.0, 0.0), (5.0, 0.4)])
@pytest.mark.parametrize("p", [2.0, 3.0, math.inf])
def test_block_lp_matches_torus_oracle(omega, t, p):
    f = ContinuumOptions().field(1.0)
    a = cont.field_block_lp(f, omega, t, np.array([0]), p)[0]
    assert a == pytest.approx(torus_oracle(f, omega, t, 0, p), rel=0.01)


def test_block_lp_pad_stable():
    f = ContinuumOptions().field(1.0)
    a = cont.field_block_lp(f, 20.0, 2.0, np.array([-1, 0, 1]), 3.0, pad_factor=4.0)
    b = cont.field_block_lp(f, 20.0, 2.0, np.array([-1, 0, 1]), 3.0, pad_factor=8.0)
    assert np.max(np.abs(a - b) / b) < 0.01


def test_l2_is_rotation_invariant():
    f = ContinuumOptions().field(2.0)
    js = np.array([0, 1, 2])
    assert np.allclose(cont.field_block_lp(f, 0.0, 0.1, js, 2.0), cont.field_block_lp(f, 1e3, 0.1, js, 2.0))


def test_kernel_at_time_zero():
    ref = 4 * math.pi * integrate.quad(lambda r: r * r * profile(np.array([r]))[0], 0.5, 2.0, limit=200)[0]
    assert cont.kernel_value(0.0, 0.0, 0.0).real == pytest.approx(ref, rel=1e-3)
    sup, where = cont.kernel_sup(0.0)
    assert sup == pytest.approx(ref, rel=1e-3) and np.allclose(where, 0.0, atol=1e-2)


def test_kernel_sup_pad_stable():
    a = cont.kernel_sup(6.0, 4.0)[0]
    b = cont.kernel_sup(6.0, 8.0)[0]
    assert abs(a - b) / b < 0.01


def test_box_conventions():
    assert cont.box_half_width(0.0, 4.0) == 16.0
    assert cont.box_half_width(10.0, 4.0) == 36.0
    with pytest.raises(ValueError):
        cont.AxiGrid(10.0, 2.0, 2.0)  # spacing too coarse for |xi| <= 2
    with pytest.raises(ValueError):
        cont.radial_bump(2.0, 1.0)


def test_radial_bump_support():
    psi = cont.radial_bump(0.5, 2.0)
    r = np.linspace(0, 3, 301)
    v = psi(r)
    assert np.all(v[(r <= 0.5) | (r >= 2.0)] == 0) and v.max() == pytest.approx(1.0, abs=1e-12)
