"""Fourier representation on the periodic unit box with z-parity.

Horizontal directions carry a complex Fourier series, the vertical direction
a cosine series (``Symmetry.EVEN``) or a sine series (``Symmetry.ODD``).
Coefficients live in arrays of shape ``(nx, ny, nz // 2 + 1)``: ``kx`` and
``ky`` in FFT order, ``kz = 0 .. nz / 2``. A field evaluates as

    f(x, y, z) = sum c(kx, ky, kz) exp(2 pi i (kx x + ky y)) cos(2 pi kz z)

(``sin`` for odd fields), so ``c(-kh, kz) = conj(c(kh, kz))`` for real fields.
All transforms go through ``scipy.fft`` on the full collocation lattice.
"""

from __future__ import annotations

import dataclasses
import functools
import os
from dataclasses import dataclass
from enum import Enum
from typing import ClassVar, Literal

import numpy as np
import scipy.fft as sp_fft

from solver.errors import ParityViolation, ResolutionMismatch

Axis = Literal["x", "y", "z"]

PARITY_TOLERANCE = 1e-10

# Threads handed to scipy.fft; results do not depend on the count.
FFT_WORKERS = int(os.getenv("SOLVER_FFT_WORKERS", "1"))


class Symmetry(str, Enum):
    """Parity of a field in the vertical direction."""

    EVEN = "even"
    ODD = "odd"

    def flipped(self) -> Symmetry:
        return Symmetry.ODD if self is Symmetry.EVEN else Symmetry.EVEN

    def product(self, other: Symmetry) -> Symmetry:
        """Parity of a pointwise product."""
        return Symmetry.EVEN if self is other else Symmetry.ODD


@dataclass(frozen=True)
class Resolution:
    """Number of collocation points per direction."""

    nx: int
    ny: int
    nz: int

    def __post_init__(self) -> None:
        for name in ("nx", "ny", "nz"):
            value = getattr(self, name)
            if value < 4 or value % 2:
                raise ValueError(f"{name} must be an even integer >= 4, got {value}")

    @classmethod
    def cube(cls, n: int) -> Resolution:
        return cls(n, n, n)

    @classmethod
    def parse(cls, text: str) -> Resolution:
        """Parse ``"32"`` or ``"32x32x16"``."""
        parts = [int(p) for p in text.lower().split("x")]
        if len(parts) == 1:
            return cls.cube(parts[0])
        if len(parts) != 3:
            raise ValueError(f"Resolution must be N or NXxNYxNZ, got {text!r}")
        return cls(*parts)

    @property
    def grid_shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz // 2 + 1)

    @property
    def size(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def max_resolved_index(self) -> int:
        """Largest max-norm index strictly below every Nyquist plane."""
        return min(self.nx, self.ny, self.nz) // 2 - 1

    def __str__(self) -> str:
        return f"{self.nx}x{self.ny}x{self.nz}"


@dataclass(frozen=True, order=True)
class WaveIndex:
    """Integer wave index; physical wavenumbers are ``2 pi`` times these."""

    kx: int
    ky: int
    kz: int

    def __post_init__(self) -> None:
        if self.kz < 0:
            raise ValueError(f"kz must be non-negative, got {self.kz}")

    @property
    def is_zero(self) -> bool:
        return self.kx == 0 and self.ky == 0 and self.kz == 0

    @property
    def horizontal_is_zero(self) -> bool:
        return self.kx == 0 and self.ky == 0

    @property
    def max_norm(self) -> int:
        return max(abs(self.kx), abs(self.ky), self.kz)

    def wavenumbers(self) -> tuple[float, float, float]:
        return (2 * np.pi * self.kx, 2 * np.pi * self.ky, 2 * np.pi * self.kz)

    def fits(self, resolution: Resolution) -> bool:
        """True when the index lies strictly below every Nyquist plane."""
        return (
            abs(self.kx) < resolution.nx // 2
            and abs(self.ky) < resolution.ny // 2
            and self.kz < resolution.nz // 2
        )

    def position(self, resolution: Resolution) -> tuple[int, int, int]:
        """Array position of the coefficient."""
        if not self.fits(resolution):
            raise ResolutionMismatch(f"{self} is not resolved on {resolution}")
        return (self.kx % resolution.nx, self.ky % resolution.ny, self.kz)

    def partner(self) -> WaveIndex:
        """Index holding the complex-conjugate coefficient of a real field."""
        return WaveIndex(-self.kx, -self.ky, self.kz)


# --- wavenumber tables -------------------------------------------------------


@functools.lru_cache(maxsize=32)
def integer_wavenumbers(resolution: Resolution) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Broadcastable integer index arrays ``(kx, ky, kz)`` in storage order."""
    kx = np.rint(np.fft.fftfreq(resolution.nx, 1.0 / resolution.nx)).astype(int)
    ky = np.rint(np.fft.fftfreq(resolution.ny, 1.0 / resolution.ny)).astype(int)
    kz = np.arange(resolution.nz // 2 + 1)
    arrays = (kx[:, None, None], ky[None, :, None], kz[None, None, :])
    for array in arrays:
        array.setflags(write=False)
    return arrays


@functools.lru_cache(maxsize=32)
def derivative_wavenumbers(resolution: Resolution) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Physical wavenumbers used by derivatives, zero on the Nyquist planes."""
    kx, ky, kz = integer_wavenumbers(resolution)
    dx = np.where(np.abs(kx) == resolution.nx // 2, 0, kx) * 2 * np.pi
    dy = np.where(np.abs(ky) == resolution.ny // 2, 0, ky) * 2 * np.pi
    dz = np.where(kz == resolution.nz // 2, 0, kz) * 2 * np.pi
    arrays = (dx.astype(float), dy.astype(float), dz.astype(float))
    for array in arrays:
        array.setflags(write=False)
    return arrays


@functools.lru_cache(maxsize=32)
def resolved_mask(resolution: Resolution) -> np.ndarray:
    """Coefficients strictly below every Nyquist plane."""
    kx, ky, kz = integer_wavenumbers(resolution)
    mask = (
        (np.abs(kx) < resolution.nx // 2)
        & (np.abs(ky) < resolution.ny // 2)
        & (kz < resolution.nz // 2)
    )
    mask.setflags(write=False)
    return mask


@functools.lru_cache(maxsize=32)
def dealias_mask(resolution: Resolution) -> np.ndarray:
    """Two-thirds rule: keep ``|kx| <= nx // 3``, ``|ky| <= ny // 3``, ``kz <= nz // 3``."""
    kx, ky, kz = integer_wavenumbers(resolution)
    mask = (
        (np.abs(kx) <= resolution.nx // 3)
        & (np.abs(ky) <= resolution.ny // 3)
        & (kz <= resolution.nz // 3)
    )
    mask.setflags(write=False)
    return mask


def band_mask(resolution: Resolution, k_max: int) -> np.ndarray:
    """Max-norm band ``max(|kx|, |ky|) <= k_max`` and ``kz <= k_max``."""
    kx, ky, kz = integer_wavenumbers(resolution)
    return (np.maximum(np.abs(kx), np.abs(ky)) <= k_max) & (kz <= k_max)


@functools.lru_cache(maxsize=32)
def _kz_weights(resolution: Resolution) -> np.ndarray:
    # integral of cos^2 / sin^2 over a period; 1 on the constant and Nyquist planes
    weights = np.full(resolution.nz // 2 + 1, 0.5)
    weights[0] = 1.0
    weights[-1] = 1.0
    weights.setflags(write=False)
    return weights


def grid_coordinates(resolution: Resolution) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Uniform lattice on ``[0, 1)`` per direction, shaped for broadcasting."""
    x = np.arange(resolution.nx) / resolution.nx
    y = np.arange(resolution.ny) / resolution.ny
    z = np.arange(resolution.nz) / resolution.nz
    return x[:, None, None], y[None, :, None], z[None, None, :]


# --- fields ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Cosine/sine coefficient array on the box.

    The coefficient array is made read-only on construction.
    """

    resolution: Resolution
    symmetry: Symmetry
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.shape != self.resolution.spectral_shape:
            raise ResolutionMismatch(
                f"Coefficient shape {coeffs.shape} does not match "
                f"{self.resolution.spectral_shape} for {self.resolution}"
            )
        if self.symmetry is Symmetry.ODD and (
            np.any(coeffs[..., 0]) or np.any(coeffs[..., -1])
        ):
            raise ParityViolation("Odd field has content on the kz = 0 or Nyquist plane")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, resolution: Resolution, symmetry: Symmetry) -> SpectralField:
        return cls(resolution, symmetry, np.zeros(resolution.spectral_shape, np.complex128))

    @classmethod
    def single_mode(
        cls,
        resolution: Resolution,
        symmetry: Symmetry,
        index: WaveIndex,
        value: complex = 1.0,
        real: bool = True,
    ) -> SpectralField:
        """Field with one coefficient, plus its conjugate partner when ``real``."""
        coeffs = np.zeros(resolution.spectral_shape, np.complex128)
        coeffs[index.position(resolution)] += value
        if real:
            coeffs[index.partner().position(resolution)] += np.conj(value)
            if index.horizontal_is_zero:
                coeffs[index.position(resolution)] /= 2
        return cls(resolution, symmetry, coeffs)

    def coefficient(self, index: WaveIndex) -> complex:
        return complex(self.coeffs[index.position(self.resolution)])

    def with_coeffs(self, coeffs: np.ndarray) -> SpectralField:
        return SpectralField(self.resolution, self.symmetry, coeffs)

    def norm(self) -> float:
        """L2 norm over the unit box."""
        return float(np.sqrt(field_inner(self, self)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def hermitian_residual(self) -> float:
        """Largest departure from ``c(-kh) = conj(c(kh))``."""
        return float(np.max(np.abs(self.coeffs - _reflect_conj(self.coeffs))))

    def _check(self, other: SpectralField) -> None:
        if self.resolution != other.resolution:
            raise ResolutionMismatch(f"{self.resolution} vs {other.resolution}")
        if self.symmetry is not other.symmetry:
            raise ParityViolation(f"Cannot combine {self.symmetry.value} and {other.symmetry.value} fields")

    def __add__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __neg__(self) -> SpectralField:
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar: complex) -> SpectralField:
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> SpectralField:
        return self.with_coeffs(self.coeffs / scalar)


def _reflect_conj(coeffs: np.ndarray) -> np.ndarray:
    nx, ny = coeffs.shape[:2]
    ix = (-np.arange(nx)) % nx
    iy = (-np.arange(ny)) % ny
    return np.conj(coeffs[ix][:, iy])


def hermitian_part(coeffs: np.ndarray) -> np.ndarray:
    """Project a coefficient array onto real fields."""
    return 0.5 * (coeffs + _reflect_conj(coeffs))


def _z_reflection(nz: int) -> np.ndarray:
    return (-np.arange(nz)) % nz


def to_physical(field: SpectralField, complex_values: bool = False) -> np.ndarray:
    """Evaluate the series on the collocation lattice.

    Args:
        field: Field to evaluate
        complex_values: Return the complex evaluation, needed for single
            complex modes that carry no conjugate partner

    Returns:
        Array of shape ``resolution.grid_shape``
    """
    resolution = field.resolution
    nz = resolution.nz
    half = nz // 2
    c = field.coeffs
    full = np.zeros(resolution.grid_shape, np.complex128)
    if field.symmetry is Symmetry.EVEN:
        full[..., 0] = c[..., 0]
        full[..., 1:half] = c[..., 1:half] / 2
        full[..., nz - 1 : half : -1] = c[..., 1:half] / 2
        full[..., half] = c[..., half]
    else:
        full[..., 1:half] = c[..., 1:half] / 2j
        full[..., nz - 1 : half : -1] = -c[..., 1:half] / 2j
    grid = sp_fft.ifftn(full, workers=FFT_WORKERS) * resolution.size
    return grid if complex_values else grid.real


def to_spectral(
    grid: np.ndarray, symmetry: Symmetry, check_parity: bool = True
) -> SpectralField:
    """Coefficients of real lattice values with the given z-parity.

    Raises:
        ParityViolation: If the z-reflection residual exceeds PARITY_TOLERANCE
    """
    grid = np.asarray(grid, dtype=float)
    resolution = Resolution(*grid.shape)
    nz = resolution.nz
    half = nz // 2
    if check_parity:
        reflected = grid[..., _z_reflection(nz)]
        residual = grid - reflected if symmetry is Symmetry.EVEN else grid + reflected
        scale = max(1.0, float(np.max(np.abs(grid))))
        worst = float(np.max(np.abs(residual)))
        if worst > PARITY_TOLERANCE * scale:
            raise ParityViolation(
                f"Grid is not {symmetry.value} in z (residual {worst:.3e})"
            )
    spectrum = sp_fft.fftn(grid, workers=FFT_WORKERS) / resolution.size
    coeffs = np.zeros(resolution.spectral_shape, np.complex128)
    if symmetry is Symmetry.EVEN:
        coeffs[..., 0] = spectrum[..., 0]
        coeffs[..., 1:half] = spectrum[..., 1:half] + spectrum[..., nz - 1 : half : -1]
        coeffs[..., half] = spectrum[..., half]
    else:
        coeffs[..., 1:half] = 1j * (spectrum[..., 1:half] - spectrum[..., nz - 1 : half : -1])
    return SpectralField(resolution, symmetry, hermitian_part(coeffs))


def derivative(field: SpectralField, axis: Axis) -> SpectralField:
    """Spectral derivative; ``z`` flips the parity."""
    dx, dy, dz = derivative_wavenumbers(field.resolution)
    if axis == "x":
        return field.with_coeffs(1j * dx * field.coeffs)
    if axis == "y":
        return field.with_coeffs(1j * dy * field.coeffs)
    if axis != "z":
        raise ValueError(f"Unknown axis {axis!r}")
    sign = -1.0 if field.symmetry is Symmetry.EVEN else 1.0
    coeffs = sign * dz * field.coeffs
    if field.symmetry is Symmetry.EVEN:
        coeffs[..., 0] = 0.0
    return SpectralField(field.resolution, field.symmetry.flipped(), coeffs)


def gradient(field: SpectralField) -> tuple[SpectralField, SpectralField, SpectralField]:
    return derivative(field, "x"), derivative(field, "y"), derivative(field, "z")


def divergence(v1: SpectralField, v2: SpectralField, w: SpectralField) -> SpectralField:
    return derivative(v1, "x") + derivative(v2, "y") + derivative(w, "z")


@functools.lru_cache(maxsize=32)
def laplacian_symbol(resolution: Resolution) -> np.ndarray:
    """``|k|^2`` of div grad, zero on the Nyquist planes like the derivatives."""
    dx, dy, dz = derivative_wavenumbers(resolution)
    k2 = dx**2 + dy**2 + dz**2
    k2.setflags(write=False)
    return k2


def laplacian(field: SpectralField) -> SpectralField:
    return field.with_coeffs(-laplacian_symbol(field.resolution) * field.coeffs)


def dealias(field: SpectralField) -> SpectralField:
    return field.with_coeffs(np.where(dealias_mask(field.resolution), field.coeffs, 0))


def truncate_field(field: SpectralField, k_max: int) -> SpectralField:
    return field.with_coeffs(np.where(band_mask(field.resolution, k_max), field.coeffs, 0))


def dealiased_product(a: SpectralField, b: SpectralField) -> SpectralField:
    """Pointwise product with two-thirds truncation of the result."""
    if a.resolution != b.resolution:
        raise ResolutionMismatch(f"{a.resolution} vs {b.resolution}")
    grid = to_physical(a) * to_physical(b)
    return dealias(to_spectral(grid, a.symmetry.product(b.symmetry), check_parity=False))


def profile_product(
    field: SpectralField, profile: np.ndarray, profile_symmetry: Symmetry = Symmetry.EVEN
) -> SpectralField:
    """Product with a 1-D z-profile sampled on the lattice, without truncation."""
    grid = to_physical(field) * np.asarray(profile)[None, None, :]
    return to_spectral(grid, field.symmetry.product(profile_symmetry), check_parity=False)


def resample(field: SpectralField, resolution: Resolution) -> SpectralField:
    """Copy the coefficients both resolutions resolve onto another lattice."""
    kx, ky, kz = integer_wavenumbers(field.resolution)
    keep = (
        (np.abs(kx) < min(field.resolution.nx, resolution.nx) // 2)
        & (np.abs(ky) < min(field.resolution.ny, resolution.ny) // 2)
        & (kz < min(field.resolution.nz, resolution.nz) // 2)
    )
    keep = np.broadcast_to(keep, field.resolution.spectral_shape)
    ix, iy, iz = np.nonzero(keep)
    kx_full = np.broadcast_to(kx, keep.shape)[keep]
    ky_full = np.broadcast_to(ky, keep.shape)[keep]
    coeffs = np.zeros(resolution.spectral_shape, np.complex128)
    coeffs[kx_full % resolution.nx, ky_full % resolution.ny, iz] = field.coeffs[ix, iy, iz]
    return SpectralField(resolution, field.symmetry, coeffs)


def field_inner(a: SpectralField, b: SpectralField) -> float:
    """``integral a b dx`` over the unit box (exact discrete Parseval)."""
    if a.resolution != b.resolution:
        raise ResolutionMismatch(f"{a.resolution} vs {b.resolution}")
    weights = _kz_weights(a.resolution)
    return float(np.sum(weights * np.real(a.coeffs * np.conj(b.coeffs))))


def random_field(
    resolution: Resolution,
    symmetry: Symmetry,
    rng: np.random.Generator,
    k_max: int | None = None,
) -> SpectralField:
    """Real random field without Nyquist content, optionally band-limited."""
    grid = rng.standard_normal(resolution.grid_shape)
    reflected = grid[..., _z_reflection(resolution.nz)]
    grid = 0.5 * (grid + reflected) if symmetry is Symmetry.EVEN else 0.5 * (grid - reflected)
    field = to_spectral(grid, symmetry, check_parity=False)
    keep = resolved_mask(resolution)
    if k_max is not None:
        keep = keep & band_mask(resolution, k_max)
    return field.with_coeffs(np.where(keep, field.coeffs, 0))


# --- states ------------------------------------------------------------------


class _FieldTuple:
    """Shared behaviour of fixed-parity field tuples."""

    PARITY: ClassVar[tuple[Symmetry, ...]]

    def __post_init__(self) -> None:
        values = self.fields()
        resolution = values[0].resolution
        for name, value, parity in zip(self.names(), values, self.PARITY):
            if value.resolution != resolution:
                raise ResolutionMismatch(f"Field {name} is on {value.resolution}, expected {resolution}")
            if value.symmetry is not parity:
                raise ParityViolation(f"Field {name} must be {parity.value}, got {value.symmetry.value}")

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))  # type: ignore[arg-type]

    def fields(self) -> tuple[SpectralField, ...]:
        return tuple(getattr(self, name) for name in self.names())

    @property
    def resolution(self) -> Resolution:
        return self.fields()[0].resolution

    @classmethod
    def from_fields(cls, values):
        return cls(*values)

    @classmethod
    def zeros(cls, resolution: Resolution):
        return cls(*(SpectralField.zeros(resolution, p) for p in cls.PARITY))

    @classmethod
    def from_stacked(cls, resolution: Resolution, stacked: np.ndarray):
        """Build from an array of shape ``(n_fields, *spectral_shape)``."""
        values = []
        for coeffs, parity in zip(stacked, cls.PARITY):
            coeffs = np.array(coeffs, dtype=np.complex128)
            if parity is Symmetry.ODD:
                coeffs[..., 0] = 0.0
                coeffs[..., -1] = 0.0
            values.append(SpectralField(resolution, parity, coeffs))
        return cls(*values)

    def stacked(self) -> np.ndarray:
        return np.stack([f.coeffs for f in self.fields()])

    def map(self, func):
        return self.from_fields([func(f) for f in self.fields()])

    def _combine(self, other, op):
        if type(other) is not type(self):
            return NotImplemented
        return self.from_fields([op(a, b) for a, b in zip(self.fields(), other.fields())])

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __neg__(self):
        return self.map(lambda f: -f)

    def __mul__(self, scalar: complex):
        return self.map(lambda f: f * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex):
        return self.map(lambda f: f / scalar)

    def norm(self) -> float:
        return float(np.sqrt(inner_product(self, self)))

    def max_abs(self) -> float:
        return max(f.max_abs() for f in self.fields())

    def hermitian_residual(self) -> float:
        return max(f.hermitian_residual() for f in self.fields())


@dataclass(frozen=True, eq=False)
class State(_FieldTuple):
    """Unknown ``(q, H, v1, v2, w)`` of the compressible system."""

    PARITY: ClassVar[tuple[Symmetry, ...]] = (
        Symmetry.EVEN,
        Symmetry.ODD,
        Symmetry.EVEN,
        Symmetry.EVEN,
        Symmetry.ODD,
    )

    q: SpectralField
    h: SpectralField
    v1: SpectralField
    v2: SpectralField
    w: SpectralField

    def velocity(self) -> tuple[SpectralField, SpectralField, SpectralField]:
        return self.v1, self.v2, self.w


@dataclass(frozen=True, eq=False)
class ReducedState(_FieldTuple):
    """Unknown ``(H, v1, v2, w)`` of the soundproof and intermediate models."""

    PARITY: ClassVar[tuple[Symmetry, ...]] = (
        Symmetry.ODD,
        Symmetry.EVEN,
        Symmetry.EVEN,
        Symmetry.ODD,
    )

    h: SpectralField
    v1: SpectralField
    v2: SpectralField
    w: SpectralField

    def velocity(self) -> tuple[SpectralField, SpectralField, SpectralField]:
        return self.v1, self.v2, self.w

    def with_velocity(self, v1: SpectralField, v2: SpectralField, w: SpectralField) -> ReducedState:
        return ReducedState(self.h, v1, v2, w)


def inner_product(a: State | ReducedState, b: State | ReducedState) -> float:
    """L2 inner product summed over the components."""
    if type(a) is not type(b):
        raise TypeError(f"Cannot pair {type(a).__name__} with {type(b).__name__}")
    if a.resolution != b.resolution:
        raise ResolutionMismatch(f"{a.resolution} vs {b.resolution}")
    return sum(field_inner(x, y) for x, y in zip(a.fields(), b.fields()))


def random_state(resolution: Resolution, rng: np.random.Generator, k_max: int | None = None) -> State:
    return State(*(random_field(resolution, p, rng, k_max) for p in State.PARITY))


def truncate(state, k_max: int):
    """Zero every coefficient outside the max-norm band ``k_max``."""
    if k_max < 0:
        raise ValueError(f"Truncation index must be non-negative, got {k_max}")
    return state.map(lambda f: truncate_field(f, k_max))
