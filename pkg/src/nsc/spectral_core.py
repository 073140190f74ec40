"""Periodic-grid field representation, transforms and spectral operators.

Conventions
-----------
A :class:`Grid3` with ``n`` points per axis and period ``L`` has physical
nodes ``x = (L/n) m`` for ``m = 0..n-1`` and wavevectors ``xi = (2 pi / L) k``
with integer ``k`` in FFT storage order (``[0, 1, ..., n/2-1, -n/2, ..., -1]``).

Fourier coefficients carry the physical volume element::

    u_hat(xi) = (L/n)^3 * sum_x u(x) exp(-i x.xi)
    u(x)      = L^-3 * sum_xi u_hat(xi) exp(i x.xi)

so that ``||u||_{L^2}^2 = L^-3 sum |u_hat|^2`` and Riemann sums of physical
values approximate whole-space integrals consistently across resolutions.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import kernels

__all__ = [
    "Grid3",
    "SpectralField",
    "PhysicalField",
    "forward_transform",
    "inverse_transform",
    "leray_project",
    "riesz_transform",
    "nonlinear_term",
    "divergence_residual",
    "inner_product",
    "write_snapshot",
    "read_snapshot",
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
]

SNAPSHOT_MAGIC = b"NSCF"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIId")
HEADER_BYTES = 64

# Tolerance used when a field is *asserted* to be divergence-free.
DIV_TOL = 1e-10


@dataclass(frozen=True, eq=True)
class Grid3:
    """Uniform periodic grid with ``n_per_axis`` points on ``[0, box_length)^3``."""

    n_per_axis: int
    box_length: float = 2.0 * np.pi

    def __post_init__(self) -> None:
        n = self.n_per_axis
        if int(n) != n or n < 8 or n % 2:
            raise ValueError(f"n_per_axis must be an even integer >= 8, got {n!r}")
        if not (self.box_length > 0 and np.isfinite(self.box_length)):
            raise ValueError(f"box_length must be positive, got {self.box_length!r}")
        object.__setattr__(self, "n_per_axis", int(n))
        object.__setattr__(self, "box_length", float(self.box_length))

    # -- basic geometry -------------------------------------------------
    @property
    def n(self) -> int:
        return self.n_per_axis

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def cell_volume(self) -> float:
        return (self.box_length / self.n) ** 3

    @property
    def volume(self) -> float:
        return self.box_length**3

    @property
    def dxi(self) -> float:
        """Spacing of the wavevector lattice, ``2 pi / L``."""
        return 2.0 * np.pi / self.box_length

    @cached_property
    def k1d(self) -> np.ndarray:
        """Integer wavenumbers along one axis in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(np.int64)

    @cached_property
    def xi1d(self) -> np.ndarray:
        return self.dxi * self.k1d.astype(float)

    @cached_property
    def xi(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable wavevector components ``(xi1, xi2, xi3)``."""
        x = self.xi1d
        return (x[:, None, None], x[None, :, None], x[None, None, :])

    @cached_property
    def xi_flat(self) -> np.ndarray:
        """Wavevector of every mode, shape ``(3, n**3)``, C order."""
        x1, x2, x3 = np.meshgrid(self.xi1d, self.xi1d, self.xi1d, indexing="ij")
        out = np.stack([x1.ravel(), x2.ravel(), x3.ravel()])
        out.setflags(write=False)
        return out

    @cached_property
    def xi_sq(self) -> np.ndarray:
        x1, x2, x3 = self.xi
        out = x1 * x1 + x2 * x2 + x3 * x3
        out.setflags(write=False)
        return out

    @cached_property
    def xi_abs(self) -> np.ndarray:
        out = np.sqrt(self.xi_sq)
        out.setflags(write=False)
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean mask of modes kept by the two-thirds rule.

        A mode is kept iff every ``|k_i| < n/3`` strictly, which is the exact
        condition for quadratic products to be alias-free on retained modes.
        """
        keep1 = 3 * np.abs(self.k1d) < self.n
        out = keep1[:, None, None] & keep1[None, :, None] & keep1[None, None, :]
        out.setflags(write=False)
        return out

    @cached_property
    def dealias_index(self) -> np.ndarray:
        """Flat indices (C order) of dealiased modes."""
        out = np.flatnonzero(self.dealias_mask.ravel())
        out.setflags(write=False)
        return out

    @cached_property
    def x1d(self) -> np.ndarray:
        return np.arange(self.n) * (self.box_length / self.n)

    @cached_property
    def x(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = self.x1d
        return (x[:, None, None], x[None, :, None], x[None, None, :])

    def mode_index(self, k: tuple[int, int, int]) -> tuple[int, int, int]:
        """Storage index of integer wavevector ``k``."""
        return tuple(int(ki) % self.n for ki in k)  # type: ignore[return-value]


@dataclass(eq=False)
class SpectralField:
    """Fourier coefficients ``coeffs[c, i1, i2, i3]`` of a scalar or vector field."""

    grid: Grid3
    coeffs: np.ndarray
    mean_zero: bool = True
    divergence_free: bool = False

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs)
        if c.ndim == 3:
            c = c[None]
        if c.shape[1:] != self.grid.shape or c.shape[0] not in (1, 3):
            raise ValueError(
                f"coeffs shape {c.shape} incompatible with grid {self.grid.shape}"
            )
        self.coeffs = np.ascontiguousarray(c, dtype=np.complex128)

    @property
    def n_components(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, grid: Grid3, n_components: int = 3, **kw) -> "SpectralField":
        return cls(grid, np.zeros((n_components,) + grid.shape, complex), **kw)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.mean_zero, self.divergence_free)

    def with_coeffs(self, coeffs: np.ndarray, divergence_free: bool | None = None) -> "SpectralField":
        dfree = self.divergence_free if divergence_free is None else divergence_free
        return SpectralField(self.grid, coeffs, self.mean_zero, dfree)

    def norm_l2(self) -> float:
        """Physical L^2 norm (Parseval)."""
        return float(np.sqrt(np.vdot(self.coeffs, self.coeffs).real / self.grid.volume))

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        """True iff the field represents real-valued data."""
        c = self.coeffs
        flipped = np.roll(c[:, ::-1, ::-1, ::-1], 1, axis=(1, 2, 3))
        scale = max(np.abs(c).max(initial=0.0), 1e-300)
        return bool(np.abs(c - flipped.conj()).max(initial=0.0) <= rtol * scale)

    def _check(self, other: "SpectralField") -> None:
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        if other.n_components != self.n_components:
            raise ValueError("component mismatch")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.mean_zero and other.mean_zero,
                             self.divergence_free and other.divergence_free)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.mean_zero and other.mean_zero,
                             self.divergence_free and other.divergence_free)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)


@dataclass(eq=False)
class PhysicalField:
    """Real grid values ``values[c, i1, i2, i3]`` at nodes ``x = (L/n) i``."""

    grid: Grid3
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 3:
            v = v[None]
        if v.shape[1:] != self.grid.shape or v.shape[0] not in (1, 3):
            raise ValueError(f"values shape {v.shape} incompatible with grid {self.grid.shape}")
        self.values = np.ascontiguousarray(v)

    @property
    def n_components(self) -> int:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------
def _fftn(a: np.ndarray) -> np.ndarray:
    return sfft.fftn(a, axes=(-3, -2, -1))


def _ifftn(a: np.ndarray) -> np.ndarray:
    return sfft.ifftn(a, axes=(-3, -2, -1))


def forward_transform(f: PhysicalField, mean_zero: bool | None = None) -> SpectralField:
    """Physical values to Fourier coefficients (volume-weighted DFT)."""
    g = f.grid
    coeffs = _fftn(f.values) * g.cell_volume
    if mean_zero is None:
        scale = np.abs(coeffs).max(initial=0.0)
        mean_zero = bool(np.abs(coeffs[:, 0, 0, 0]).max() <= 1e-12 * max(scale, 1e-300))
    return SpectralField(g, coeffs, mean_zero=mean_zero)


def inverse_transform(u: SpectralField) -> PhysicalField:
    """Fourier coefficients to real physical values (imaginary round-off dropped)."""
    g = u.grid
    vals = _ifftn(u.coeffs).real / g.cell_volume
    return PhysicalField(g, vals)


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------
def leray_project(u: SpectralField) -> SpectralField:
    """Apply ``I - xi xi^T / |xi|^2`` mode by mode (zero mode unchanged)."""
    if u.n_components != 3:
        raise ValueError("leray_project needs a 3-component field")
    g = u.grid
    out = kernels.leray(u.coeffs.reshape(3, -1), g.xi_flat)
    return u.with_coeffs(out.reshape(u.coeffs.shape), divergence_free=True)


def riesz_symbol(grid: Grid3, i: int) -> np.ndarray:
    """Symbol ``-i xi_i / |xi|`` of the Riesz transform, 0 at the zero mode."""
    if i not in (0, 1, 2):
        raise ValueError("axis index must be 0, 1 or 2")
    xa = grid.xi_abs
    xi_i = np.broadcast_to(grid.xi[i], grid.shape)
    unit = np.divide(xi_i, xa, out=np.zeros(grid.shape), where=xa > 0)
    return -1j * unit


def riesz_transform(f: SpectralField, i: int) -> SpectralField:
    """Riesz transform ``R_i`` along axis ``i`` (0-based) of every component."""
    return SpectralField(f.grid, f.coeffs * riesz_symbol(f.grid, i), f.mean_zero, False)


def divergence_residual(u: SpectralField) -> float:
    """``max |xi_hat . u_hat| / ||u_hat||_2`` over all modes (0 for the zero field)."""
    if u.n_components != 3:
        raise ValueError("divergence needs a 3-component field")
    g = u.grid
    xa = g.xi_abs
    x1, x2, x3 = g.xi
    c = u.coeffs
    div = x1 * c[0] + x2 * c[1] + x3 * c[2]
    div = np.divide(np.abs(div), xa, out=np.zeros(g.shape), where=xa > 0)
    nrm = float(np.sqrt(np.vdot(c, c).real))
    if nrm == 0.0:
        return 0.0
    return float(div.max() / nrm)


def dealias(u: SpectralField) -> SpectralField:
    return u.with_coeffs(u.coeffs * u.grid.dealias_mask)


def nonlinear_term(u: SpectralField, v: SpectralField) -> SpectralField:
    """Projected, dealiased divergence of the tensor product, ``P div(u (x) v)``.

    ``(div(u (x) v))_j = sum_i d_i (u_i v_j)``.  Inputs are truncated to the
    two-thirds set, products formed in physical space, and the output is
    truncated and Leray-projected.
    """
    if u.grid != v.grid:
        raise ValueError("grid mismatch between u and v")
    if u.n_components != 3 or v.n_components != 3:
        raise ValueError("nonlinear_term needs 3-component fields")
    g = u.grid
    mask = g.dealias_mask
    uu = _ifftn(u.coeffs * mask).real
    same = v is u
    vv = uu if same else _ifftn(v.coeffs * mask).real
    # ifftn already includes 1/n^3; physical values are ifftn/h^3, products
    # then carry 1/h^6 and the forward transform multiplies by h^3.
    scale = 1.0 / g.cell_volume
    xi = g.xi
    out = np.zeros((3,) + g.shape, complex)
    if same:
        prods = {}
        for i in range(3):
            for j in range(i, 3):
                prods[i, j] = _fftn(uu[i] * uu[j]) * scale
        for j in range(3):
            for i in range(3):
                out[j] += 1j * xi[i] * prods[min(i, j), max(i, j)]
    else:
        for j in range(3):
            for i in range(3):
                out[j] += 1j * xi[i] * (_fftn(uu[i] * vv[j]) * scale)
    out *= mask
    res = SpectralField(g, out, mean_zero=True)
    return leray_project(res)


def inner_product(u: SpectralField, v: SpectralField) -> float:
    """Real L^2 pairing ``<u, v> = L^-3 Re sum conj(u_hat) v_hat``."""
    if u.grid != v.grid:
        raise ValueError("grid mismatch")
    return float(np.vdot(u.coeffs, v.coeffs).real / u.grid.volume)


# ---------------------------------------------------------------------------
# binary snapshots
# ---------------------------------------------------------------------------
def write_snapshot(u: SpectralField, path: str | Path) -> None:
    """Write a 64-byte header followed by little-endian complex64 coefficients."""
    g = u.grid
    head = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.n, u.n_components, g.box_length)
    head = head + b"\x00" * (HEADER_BYTES - len(head))
    body = np.ascontiguousarray(u.coeffs, dtype="<c8").tobytes()
    Path(path).write_bytes(head + body)


def read_snapshot(path: str | Path) -> SpectralField:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_BYTES:
        raise ValueError("truncated snapshot header")
    magic, version, n, ncomp, box = _HEADER.unpack_from(raw, 0)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"bad snapshot magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    g = Grid3(n, box)
    count = ncomp * n**3
    body = np.frombuffer(raw, dtype="<c8", count=count, offset=HEADER_BYTES)
    if len(raw) != HEADER_BYTES + 8 * count:
        raise ValueError("snapshot size does not match header")
    coeffs = body.astype(np.complex128).reshape((ncomp,) + g.shape)
    return SpectralField(g, coeffs)
