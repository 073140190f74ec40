"""Library of divergence-free, mean-zero, real initial data on the periodic box."""
from __future__ import annotations

import numpy as np

from .littlewood_paley import BesovIndex, besov_norm, build_partition
from .spectral_core import Grid3, PhysicalField, SpectralField, forward_transform, leray_project

__all__ = ["GENERATORS", "generate_initial_data", "taylor_green", "random_band_limited", "single_mode"]

GENERATORS = ("taylor-green", "random-band-limited", "single-mode")


def taylor_green(grid: Grid3) -> SpectralField:
    """``(sin x cos y cos z, -cos x sin y cos z, 0)`` scaled to the box."""
    x, y, z = grid.x
    a = 2 * np.pi / grid.box_length
    vals = np.zeros((3,) + grid.shape)
    vals[0] = np.sin(a * x) * np.cos(a * y) * np.cos(a * z)
    vals[1] = -np.cos(a * x) * np.sin(a * y) * np.cos(a * z)
    u = forward_transform(PhysicalField(grid, vals))
    u.coeffs[:, 0, 0, 0] = 0.0
    return leray_project(u)


def random_band_limited(grid: Grid3, seed: int, j_lo: float, j_hi: float, dealias: bool = True) -> SpectralField:
    """Leray projection of seeded Gaussian noise restricted to ``2^j_lo <= |xi| <= 2^j_hi``.

    The noise is drawn in physical space so the coefficients are Hermitian.
    With ``dealias`` the annulus is intersected with the dealiasing mask.
    """
    if j_hi < j_lo:
        raise ValueError("j_hi must be >= j_lo")
    rng = np.random.default_rng(seed)
    u = forward_transform(PhysicalField(grid, rng.standard_normal((3,) + grid.shape)))
    xa = grid.xi_abs
    keep = (xa >= 2.0**j_lo) & (xa <= 2.0**j_hi)
    if dealias:
        keep &= grid.dealias_mask
    u.coeffs *= keep
    u.coeffs[:, 0, 0, 0] = 0.0
    return leray_project(u)


def single_mode(grid: Grid3, k, polarization) -> SpectralField:
    """``P(pol) cos(k.x)`` for an integer wavevector ``k`` (``P`` removes the part along ``k``)."""
    k = np.asarray(k, int)
    pol = np.asarray(polarization, float)
    if k.shape != (3,) or pol.shape != (3,):
        raise ValueError("k and polarization must be 3-vectors")
    if not np.any(k):
        raise ValueError("single-mode wavevector must be nonzero")
    if np.any(np.abs(k) >= grid.n // 2):
        raise ValueError(f"wavevector {k.tolist()} not resolved on a {grid.n}^3 grid")
    kk = k.astype(float)
    pol = pol - kk * (pol @ kk) / (kk @ kk)
    phase = sum(2 * np.pi / grid.box_length * k[i] * grid.x[i] for i in range(3))
    vals = pol[:, None, None, None] * np.cos(phase)[None]
    u = forward_transform(PhysicalField(grid, vals))
    u.coeffs[:, 0, 0, 0] = 0.0
    return leray_project(u)


def generate_initial_data(grid: Grid3, spec: dict, seed: int = 0, s: float = 0.5, q: float = 2.0) -> SpectralField:
    """Build initial data from a generator description.

    ``spec`` keys: ``kind`` (one of :data:`GENERATORS`), ``amplitude``
    (default 1) and ``normalize``.  With ``normalize`` (default for the
    random generator) the field is rescaled so that its ``B^s_{2,q}`` norm
    equals ``amplitude``; otherwise ``amplitude`` multiplies the raw field.
    Generator parameters: ``seed``/``j_lo``/``j_hi``/``dealias`` (random),
    ``k``/``polarization`` (single mode).
    """
    kind = spec.get("kind")
    if kind == "taylor-green":
        u = taylor_green(grid)
    elif kind == "random-band-limited":
        u = random_band_limited(grid, int(spec.get("seed", seed)), float(spec["j_lo"]), float(spec["j_hi"]),
                                bool(spec.get("dealias", True)))
    elif kind == "single-mode":
        u = single_mode(grid, spec["k"], spec.get("polarization", (1.0, 0.0, 0.0)))
    else:
        raise ValueError(f"unknown initial-data generator {kind!r}")
    amp = float(spec.get("amplitude", 1.0))
    if spec.get("normalize", kind == "random-band-limited"):
        nrm = besov_norm(u, BesovIndex(s, 2.0, q), build_partition(grid))
        if nrm == 0.0:
            raise ValueError("generator produced the zero field; target norm unreachable")
        return u * (amp / nrm)
    if not np.any(u.coeffs):
        raise ValueError("generator produced the zero field")
    return u * amp
