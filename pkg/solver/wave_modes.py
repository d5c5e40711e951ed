"""Eigenmode algebra of the fast operators.

For a state ``U = (q, H, v1, v2, w)`` the fast operator is
``L = L_a + eta * L_g`` with

    L_a U = (div_h v + d_z w, 0, grad_h q, d_z q)
    L_g U = (0, -w, 0, H)

Per wave index it is a skew-Hermitian 5x5 block, so ``L E = i omega E`` has
real frequencies and an orthogonal eigenbasis made of four mean flows
(``omega = 0``), two internal waves (``|omega| <= eta``) and two acoustic
waves (``|omega| >= |k|``). Amplitudes evolve as ``exp(-i omega t)`` in the
fast time ``t / epsilon``.

Mode tables are built once per ``(resolution, eta, flavor)`` as arrays over
the whole coefficient grid; single modes reuse the same formulas on 0-d
arrays. Nyquist planes carry no modes.
"""

from __future__ import annotations

import functools
import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from solver.errors import DivergenceViolation, DomainError, InadmissibleMode, ParityViolation, ZeroMode
from solver.spectral_core import (
    ReducedState,
    Resolution,
    SpectralField,
    State,
    Symmetry,
    WaveIndex,
    derivative,
    derivative_wavenumbers,
    divergence,
    integer_wavenumbers,
    resolved_mask,
)

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi


class Branch(str, Enum):
    """Branch of the fast spectrum."""

    MF = "mf"
    GW = "gw"
    AW = "aw"


class Flavor(str, Enum):
    """Operator a mode belongs to."""

    PERTURBED = "perturbed"
    SOUNDPROOF = "soundproof"
    PURE_ACOUSTIC = "pure_acoustic"


@dataclass(frozen=True)
class Eta:
    """Internal-wave scale ``eta = epsilon ** (1 - nu)``."""

    value: float
    epsilon: float | None = None
    nu: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.value < 1.0:
            raise DomainError(f"eta must lie in [0, 1), got {self.value}")
        if self.epsilon is not None and self.nu is not None:
            expected = self.epsilon ** (1.0 - self.nu)
            if abs(expected - self.value) > 1e-12 * max(expected, 1e-300):
                raise DomainError(
                    f"eta={self.value} is inconsistent with epsilon={self.epsilon}, nu={self.nu}"
                )

    @classmethod
    def from_epsilon(cls, epsilon: float, nu: float) -> Eta:
        return cls(epsilon ** (1.0 - nu), epsilon, nu)

    def __float__(self) -> float:
        return float(self.value)


def _eta(eta: Eta | float) -> float:
    value = float(eta)
    if not 0.0 <= value < 1.0:
        raise DomainError(f"eta must lie in [0, 1), got {value}")
    return value


@dataclass(frozen=True)
class ModeKind:
    """Branch tag plus mean-flow number or wave sign, and the basis flavor."""

    branch: Branch
    number: int
    flavor: Flavor = Flavor.PERTURBED

    def __post_init__(self) -> None:
        if self.branch is Branch.MF and self.number not in (1, 2, 3, 4):
            raise InadmissibleMode(f"Mean flows are numbered 1..4, got {self.number}")
        if self.branch is not Branch.MF and self.number not in (1, -1):
            raise InadmissibleMode(f"Wave sign must be +1 or -1, got {self.number}")
        if self.flavor is Flavor.SOUNDPROOF and self.branch is Branch.AW:
            raise InadmissibleMode("The soundproof operator has no acoustic waves")
        if self.flavor is Flavor.PURE_ACOUSTIC and self.branch is not Branch.AW:
            raise InadmissibleMode("The pure acoustic basis only exposes acoustic waves")

    @classmethod
    def mean_flow(cls, j: int, flavor: Flavor = Flavor.PERTURBED) -> ModeKind:
        return cls(Branch.MF, j, flavor)

    @classmethod
    def internal_wave(cls, sign: int, flavor: Flavor = Flavor.PERTURBED) -> ModeKind:
        return cls(Branch.GW, sign, flavor)

    @classmethod
    def acoustic_wave(cls, sign: int, flavor: Flavor = Flavor.PERTURBED) -> ModeKind:
        return cls(Branch.AW, sign, flavor)

    @property
    def family(self) -> str:
        """Short name such as ``mf2``, ``gw+`` or ``aw-``."""
        if self.branch is Branch.MF:
            return f"mf{self.number}"
        return f"{self.branch.value}{'+' if self.number > 0 else '-'}"

    def admits(self, index: WaveIndex) -> bool:
        """Whether the mode exists at ``index`` (Nyquist limits aside)."""
        horizontal = not index.horizontal_is_zero
        vertical = index.kz != 0
        if self.branch is Branch.GW:
            return horizontal and vertical
        if self.branch is Branch.AW:
            return not index.is_zero
        if self.number == 1:
            return horizontal
        if self.number == 2 and self.flavor is Flavor.SOUNDPROOF:
            return not horizontal and vertical
        return not horizontal


def flavor_kinds(flavor: Flavor) -> tuple[ModeKind, ...]:
    """Every mode kind of a basis, in storage order."""
    if flavor is Flavor.PURE_ACOUSTIC:
        return (ModeKind.acoustic_wave(1, flavor), ModeKind.acoustic_wave(-1, flavor))
    kinds = [ModeKind.mean_flow(j, flavor) for j in (1, 2, 3, 4)]
    kinds += [ModeKind.internal_wave(1, flavor), ModeKind.internal_wave(-1, flavor)]
    if flavor is Flavor.PERTURBED:
        kinds += [ModeKind.acoustic_wave(1, flavor), ModeKind.acoustic_wave(-1, flavor)]
    return tuple(kinds)


# --- frequencies ------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    """Frequency quantities on broadcastable wavenumber arrays."""

    kh2: np.ndarray
    kz2: np.ndarray
    k2: np.ndarray
    eta: float
    root: np.ndarray
    omega_a: np.ndarray
    omega_aw: np.ndarray
    omega_gw: np.ndarray
    omega_sp: np.ndarray
    aw_square_gap: np.ndarray


def _spectrum(kh2: np.ndarray, kz2: np.ndarray, eta: float) -> Spectrum:
    k2 = kh2 + kz2
    eta2 = eta * eta
    s = k2 + eta2
    # sqrt(s^2 - 4 eta^2 kh^2) written without cancellation
    root = np.sqrt((k2 - eta2) ** 2 + 4 * eta2 * kz2)
    with np.errstate(divide="ignore", invalid="ignore"):
        omega_aw = np.sqrt((s + root) / 2)
        omega_gw = np.sqrt(np.where(s + root > 0, 2 * eta2 * kh2 / (s + root), 0.0))
        omega_sp = np.where(k2 > 0, eta * np.sqrt(kh2 / np.where(k2 > 0, k2, 1.0)), 0.0)
        # omega_aw^2 - |k|^2, valid because |k|^2 > eta^2 away from the origin
        aw_square_gap = np.where(k2 > 0, 2 * eta2 * kz2 / (k2 - eta2 + root), 0.0)
    return Spectrum(
        kh2=kh2,
        kz2=kz2,
        k2=k2,
        eta=eta,
        root=root,
        omega_a=np.sqrt(k2),
        omega_aw=omega_aw,
        omega_gw=omega_gw,
        omega_sp=omega_sp,
        aw_square_gap=aw_square_gap,
    )


def index_spectrum(index: WaveIndex, eta: float) -> Spectrum:
    k1, k2, kz = index.wavenumbers()
    return _spectrum(np.asarray(k1 * k1 + k2 * k2), np.asarray(kz * kz), eta)


def acoustic_frequency(index: WaveIndex) -> float:
    """Frequency ``|k|`` of the pure acoustic operator."""
    if index.is_zero:
        raise ZeroMode("The acoustic frequency is undefined at (0, 0, 0)")
    return float(TWO_PI * np.sqrt(index.kx**2 + index.ky**2 + index.kz**2))


def fast_frequencies(index: WaveIndex, eta: Eta | float) -> tuple[float, float]:
    """Non-negative roots ``(omega_gw, omega_aw)`` of the dispersion quartic.

    ``omega^4 - (|kh|^2 + |kz|^2 + eta^2) omega^2 + eta^2 |kh|^2 = 0``

    Raises:
        ZeroMode: At the origin
        DomainError: If the internal-wave branch does not exist at ``index``
    """
    if index.is_zero:
        raise ZeroMode("Fast frequencies are undefined at (0, 0, 0)")
    if index.horizontal_is_zero or index.kz == 0:
        raise DomainError(f"No internal-wave branch at {index}")
    spec = index_spectrum(index, _eta(eta))
    return float(spec.omega_gw), float(spec.omega_aw)


def acoustic_branch_frequency(index: WaveIndex, eta: Eta | float) -> float:
    """Large root of the quartic, defined at every non-zero index."""
    if index.is_zero:
        raise ZeroMode("Fast frequencies are undefined at (0, 0, 0)")
    return float(index_spectrum(index, _eta(eta)).omega_aw)


def soundproof_gw_frequency(index: WaveIndex, eta: Eta | float) -> float:
    """``eta |kh| / |k|``, the internal-wave frequency of the soundproof operator."""
    if index.horizontal_is_zero or index.kz == 0:
        raise DomainError(f"No soundproof internal wave at {index}")
    return float(index_spectrum(index, _eta(eta)).omega_sp)


def quartic(omega: float, index: WaveIndex, eta: Eta | float) -> float:
    """Value of the dispersion quartic, for residual checks."""
    value = _eta(eta)
    k1, k2, kz = index.wavenumbers()
    kh2 = k1 * k1 + k2 * k2
    return omega**4 - (kh2 + kz * kz + value**2) * omega**2 + value**2 * kh2


def max_acoustic_frequency(resolution: Resolution, eta: Eta | float, mask: np.ndarray | None = None) -> float:
    """Largest ``omega_aw`` over resolved (or masked) coefficients."""
    kx, ky, kz = integer_wavenumbers(resolution)
    spec = _spectrum(TWO_PI**2 * (kx**2 + ky**2), TWO_PI**2 * kz**2.0, _eta(eta))
    keep = resolved_mask(resolution) if mask is None else mask & resolved_mask(resolution)
    values = np.broadcast_to(spec.omega_aw, resolution.spectral_shape)[keep]
    return float(values.max()) if values.size else 0.0


# --- eigenvector tables -----------------------------------------------------


def _unit_horizontal(k1: np.ndarray, k2: np.ndarray, kh: np.ndarray, perpendicular: bool):
    safe = np.where(kh > 0, kh, 1.0)
    if perpendicular:
        return -k2 / safe, k1 / safe
    return k1 / safe, k2 / safe


def _family_table(
    kind: ModeKind, k1: np.ndarray, k2: np.ndarray, kz: np.ndarray, eta: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray | None]:
    """Eigenvectors, frequencies, admissibility mask and pressure aux data.

    Vectors follow the displayed normalisations: ``Q = 1`` for waves, unit
    ``V`` for horizontal mean flows, ``Q = 1`` / ``H = kz / eta`` for the
    hydrostatic mean flow.
    """
    k1, k2, kz = np.broadcast_arrays(np.asarray(k1, float), np.asarray(k2, float), np.asarray(kz, float))
    kh2 = k1 * k1 + k2 * k2
    kz2 = kz * kz
    kh = np.sqrt(kh2)
    horizontal = kh > 0
    vertical = kz > 0
    soundproof = kind.flavor is Flavor.SOUNDPROOF
    ncomp = 4 if soundproof else 5
    vec = np.zeros((ncomp, *k1.shape), np.complex128)
    omega = np.zeros(k1.shape)
    pressure = None
    # component offsets: H, V1, V2, W
    ih, iv1, iv2, iw = (0, 1, 2, 3) if soundproof else (1, 2, 3, 4)

    if kind.branch is Branch.MF:
        if kind.number == 1:
            mask = horizontal
            vec[iv1], vec[iv2] = _unit_horizontal(k1, k2, kh, perpendicular=True)
        elif kind.number == 2:
            if eta <= 0:
                raise DomainError("The hydrostatic mean flow needs eta > 0")
            mask = ~horizontal & vertical if soundproof else ~horizontal
            vec[ih] = kz / eta
            if soundproof:
                pressure = np.ones(k1.shape, np.complex128)
            else:
                vec[0] = 1.0
        else:
            mask = ~horizontal
            vec[iv1 if kind.number == 3 else iv2] = 1.0
        vec = np.where(mask, vec, 0)
        return vec, omega, mask, None if pressure is None else np.where(mask, pressure, 0)

    sign = float(kind.number)
    spec = _spectrum(kh2, kz2, eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind.flavor is Flavor.PURE_ACOUSTIC:
            mask = horizontal | vertical
            omega = sign * spec.omega_a
            safe = np.where(mask, omega, 1.0)
            vec[0] = 1.0
            vec[iv1], vec[iv2] = k1 / safe, k2 / safe
            vec[iw] = 1j * kz / safe
        elif soundproof:
            if eta <= 0:
                raise DomainError("Soundproof internal waves need eta > 0")
            mask = horizontal & vertical
            omega = sign * spec.omega_sp
            safe = np.where(mask, omega, 1.0)
            safe_kz = np.where(vertical, kz, 1.0)
            vec[ih] = eta * kh2 / (safe_kz * safe**2)
            vec[iv1], vec[iv2] = k1 / safe, k2 / safe
            vec[iw] = -1j * kh2 / (safe_kz * safe)
            pressure = np.ones(k1.shape, np.complex128)
        else:
            t = kh2 + kz2 - eta * eta + spec.root
            safe_t = np.where(t > 0, t, 1.0)
            safe_kz = np.where(vertical, kz, 1.0)
            if kind.branch is Branch.GW:
                if eta <= 0:
                    raise DomainError("Internal waves need eta > 0")
                mask = horizontal & vertical
                omega = sign * spec.omega_gw
                # ratio |kh|^2 / omega^2 - 1
                ratio = safe_t / (2 * eta * eta)
            else:
                mask = horizontal | vertical
                omega = sign * spec.omega_aw
                ratio = -2 * kz2 / safe_t
            safe = np.where(mask, omega, 1.0)
            vec[0] = 1.0
            vec[iv1], vec[iv2] = k1 / safe, k2 / safe
            vec[ih] = np.where(vertical, eta / safe_kz * ratio, 0.0)
            vec[iw] = np.where(vertical, -1j * safe / safe_kz * ratio, 0.0)
    vec = np.where(mask, vec, 0)
    omega = np.where(mask, omega, 0.0)
    if pressure is not None:
        pressure = np.where(mask, pressure, 0)
    return vec, omega, mask, pressure


@dataclass(frozen=True, eq=False)
class ModeFamily:
    """One mode kind tabulated over every coefficient of a resolution."""

    kind: ModeKind
    vectors: np.ndarray
    omega: np.ndarray
    mask: np.ndarray
    norms2: np.ndarray
    pressure: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class ModeBasis:
    resolution: Resolution
    eta: float
    flavor: Flavor
    families: tuple[ModeFamily, ...]

    def family(self, kind: ModeKind) -> ModeFamily:
        for fam in self.families:
            if fam.kind == kind:
                return fam
        raise InadmissibleMode(f"{kind.family} is not part of the {self.flavor.value} basis")


def mode_basis(resolution: Resolution, eta: Eta | float, flavor: Flavor = Flavor.PERTURBED) -> ModeBasis:
    """Tabulate every family of a flavor on a resolution (cached)."""
    return _mode_basis(resolution, _eta(eta), flavor)


@functools.lru_cache(maxsize=8)
def _mode_basis(resolution: Resolution, eta: float, flavor: Flavor) -> ModeBasis:
    dx, dy, dz = (k * TWO_PI for k in integer_wavenumbers(resolution))
    shape = resolution.spectral_shape
    k1, k2, kz = (np.broadcast_to(k, shape) for k in (dx, dy, dz))
    keep = resolved_mask(resolution)
    families = []
    for kind in flavor_kinds(flavor):
        vec, omega, mask, pressure = _family_table(kind, k1, k2, kz, eta)
        mask = mask & keep
        vec = np.where(mask, vec, 0)
        omega = np.where(mask, omega, 0.0)
        norms2 = np.where(mask, np.sum(np.abs(vec) ** 2, axis=0), 1.0)
        for array in (vec, omega, mask, norms2):
            array.setflags(write=False)
        families.append(ModeFamily(kind, vec, omega, mask, norms2, pressure))
    logger.debug("Tabulated %s basis on %s at eta=%.3e", flavor.value, resolution, eta)
    return ModeBasis(resolution, eta, flavor, tuple(families))


# --- single modes -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenPair:
    """A single fast-operator mode at one wave index."""

    kind: ModeKind
    index: WaveIndex
    eta: float
    omega: float
    vector: np.ndarray
    pressure: complex | None = None

    def normalized(self) -> EigenPair:
        """Copy scaled to unit Euclidean norm."""
        scale = float(np.linalg.norm(self.vector))
        pressure = None if self.pressure is None else self.pressure / scale
        return EigenPair(self.kind, self.index, self.eta, self.omega, self.vector / scale, pressure)

    def to_state(self, resolution: Resolution, amplitude: complex = 1.0, real: bool = False):
        """Place the mode at its index.

        With ``real`` the conjugate partner is added so the fields are real;
        otherwise the state holds a single complex coefficient per component.
        """
        cls = ReducedState if self.kind.flavor is Flavor.SOUNDPROOF else State
        stacked = np.zeros((len(cls.PARITY), *resolution.spectral_shape), np.complex128)
        stacked[(slice(None), *self.index.position(resolution))] += amplitude * self.vector
        if real:
            stacked[(slice(None), *self.index.partner().position(resolution))] += np.conj(
                amplitude * self.vector
            )
        return cls.from_stacked(resolution, stacked)


def eigenvector(kind: ModeKind, index: WaveIndex, eta: Eta | float) -> EigenPair:
    """Eigenpair of the flavor's operator at one index.

    Raises:
        InadmissibleMode: If the kind does not exist at ``index``
    """
    value = _eta(eta)
    if not kind.admits(index):
        raise InadmissibleMode(f"{kind.family} ({kind.flavor.value}) does not exist at {index}")
    k1, k2, kz = index.wavenumbers()
    vec, omega, _, pressure = _family_table(kind, np.asarray(k1), np.asarray(k2), np.asarray(kz), value)
    return EigenPair(
        kind=kind,
        index=index,
        eta=value,
        omega=float(omega),
        vector=np.array(vec, dtype=np.complex128).reshape(-1),
        pressure=None if pressure is None else complex(pressure),
    )


# --- decomposition ----------------------------------------------------------


def _as_branches(kinds: Iterable[Branch | str]) -> frozenset[Branch]:
    return frozenset(Branch(k) for k in kinds)


@dataclass(frozen=True, eq=False)
class ModalDecomposition:
    """Per-index amplitudes of a state in an eigenbasis.

    ``amplitudes`` maps family names (``mf1`` .. ``aw-``) to arrays over the
    coefficient grid; entries outside a family's admissible set are zero.
    With ``renormalized`` the internal-wave and hydrostatic mean-flow
    amplitudes are stored relative to ``eta * E``.
    """

    resolution: Resolution
    eta: float
    flavor: Flavor
    amplitudes: dict[str, np.ndarray]
    renormalized: bool = False

    @property
    def basis(self) -> ModeBasis:
        return mode_basis(self.resolution, self.eta, self.flavor)

    def amplitude(self, kind: ModeKind, index: WaveIndex) -> complex:
        if kind.flavor is not self.flavor or not kind.admits(index) or not index.fits(self.resolution):
            raise InadmissibleMode(f"No {kind.family} amplitude at {index}")
        return complex(self.amplitudes[kind.family][index.position(self.resolution)])

    def select(self, kinds: Iterable[Branch | str]) -> ModalDecomposition:
        """Keep only the given branches."""
        keep = _as_branches(kinds)
        amps = {
            fam.kind.family: (
                self.amplitudes[fam.kind.family]
                if fam.kind.branch in keep
                else np.zeros(self.resolution.spectral_shape, np.complex128)
            )
            for fam in self.basis.families
        }
        return ModalDecomposition(self.resolution, self.eta, self.flavor, amps, self.renormalized)

    def evolve(self, fast_time: float) -> ModalDecomposition:
        """Multiply every amplitude by ``exp(-i omega t)``."""
        amps = {
            fam.kind.family: self.amplitudes[fam.kind.family] * np.exp(-1j * fam.omega * fast_time)
            for fam in self.basis.families
        }
        return ModalDecomposition(self.resolution, self.eta, self.flavor, amps, self.renormalized)

    def _renormalized_families(self) -> list[ModeFamily]:
        return [
            fam
            for fam in self.basis.families
            if fam.kind.branch is Branch.GW or (fam.kind.branch is Branch.MF and fam.kind.number == 2)
        ]

    def with_renormalization(self, renormalized: bool = True) -> ModalDecomposition:
        """Switch between plain and ``eta``-renormalised amplitudes."""
        if renormalized == self.renormalized:
            return self
        if self.eta <= 0:
            raise DomainError("Renormalisation needs eta > 0")
        _, _, kz = integer_wavenumbers(self.resolution)
        factor = 1.0 / self.eta if renormalized else self.eta
        amps = dict(self.amplitudes)
        for fam in self._renormalized_families():
            scaled = fam.mask & (kz > 0)
            amps[fam.kind.family] = np.where(scaled, amps[fam.kind.family] * factor, amps[fam.kind.family])
        return ModalDecomposition(self.resolution, self.eta, self.flavor, amps, renormalized)

    def branch_norm(self, branch: Branch | str) -> float:
        """L2 norm of the branch's part of the reconstructed state."""
        return reconstruct(self.select([branch])).norm()


def _decompose(stacked: np.ndarray, resolution: Resolution, eta: float, flavor: Flavor) -> ModalDecomposition:
    basis = mode_basis(resolution, eta, flavor)
    amplitudes = {}
    for fam in basis.families:
        projection = np.sum(stacked * np.conj(fam.vectors), axis=0)
        amplitudes[fam.kind.family] = np.where(fam.mask, projection / fam.norms2, 0)
    return ModalDecomposition(resolution, eta, flavor, amplitudes)


def decompose(state: State, eta: Eta | float) -> ModalDecomposition:
    """Amplitudes of ``state`` in the perturbed eigenbasis.

    Each amplitude is the inner-product quotient ``<U, E> / <E, E>`` at its
    index; the basis is orthogonal so these are the L2 projections.
    """
    return _decompose(state.stacked(), state.resolution, _eta(eta), Flavor.PERTURBED)


def decompose_soundproof(state: ReducedState, eta: Eta | float) -> ModalDecomposition:
    """Amplitudes of a reduced state in the soundproof eigenbasis."""
    return _decompose(state.stacked(), state.resolution, _eta(eta), Flavor.SOUNDPROOF)


def reconstruct(dec: ModalDecomposition):
    """Linear combination of eigenvectors; inverse of decompose."""
    if dec.renormalized:
        dec = dec.with_renormalization(False)
    basis = dec.basis
    ncomp = 4 if dec.flavor is Flavor.SOUNDPROOF else 5
    stacked = np.zeros((ncomp, *dec.resolution.spectral_shape), np.complex128)
    for fam in basis.families:
        stacked += fam.vectors * dec.amplitudes[fam.kind.family]
    cls = ReducedState if dec.flavor is Flavor.SOUNDPROOF else State
    return cls.from_stacked(dec.resolution, stacked)


def project(state: State, eta: Eta | float, kinds: Iterable[Branch | str]) -> State:
    """Orthogonal projection onto the given branches."""
    return reconstruct(decompose(state, eta).select(kinds))


def project_soundproof(state: ReducedState, eta: Eta | float, kinds: Iterable[Branch | str]) -> ReducedState:
    return reconstruct(decompose_soundproof(state, eta).select(kinds))


def reduce_dimension(state: State) -> ReducedState:
    """Drop the pressure component."""
    return ReducedState(state.h, state.v1, state.v2, state.w)


def lift(state: ReducedState, q: SpectralField | None = None) -> State:
    """Re-attach a pressure component (zero by default)."""
    if q is None:
        q = SpectralField.zeros(state.resolution, Symmetry.EVEN)
    return State(q, state.h, state.v1, state.v2, state.w)


def leray_project(
    v1: SpectralField, v2: SpectralField, w: SpectralField
) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Remove the gradient part of a velocity field, coefficient by coefficient."""
    if (v1.symmetry, v2.symmetry, w.symmetry) != (Symmetry.EVEN, Symmetry.EVEN, Symmetry.ODD):
        raise ParityViolation("Velocity must have parity (even, even, odd)")
    dx, dy, dz = derivative_wavenumbers(v1.resolution)
    # div u = dot(d, U) per coefficient, gradients point along conj(d)
    d = (1j * dx, 1j * dy, dz + 0j)
    d2 = dx**2 + dy**2 + dz**2
    div = d[0] * v1.coeffs + d[1] * v2.coeffs + d[2] * w.coeffs
    factor = np.where(d2 > 0, div / np.where(d2 > 0, d2, 1.0), 0)
    out = [f.coeffs - np.conj(dk) * factor for f, dk in zip((v1, v2, w), d)]
    return v1.with_coeffs(out[0]), v2.with_coeffs(out[1]), w.with_coeffs(out[2])


def leray_project_state(state: ReducedState) -> ReducedState:
    return state.with_velocity(*leray_project(*state.velocity()))


def divergence_residual(v1: SpectralField, v2: SpectralField, w: SpectralField) -> float:
    """``||div u|| / max(1, ||grad u||)``."""
    div = divergence(v1, v2, w).norm()
    scale = np.sqrt(sum(derivative(f, axis).norm() ** 2 for f in (v1, v2, w) for axis in ("x", "y", "z")))
    return float(div / max(1.0, scale))


def require_divergence_free(state: ReducedState, tolerance: float = 1e-8) -> None:
    residual = divergence_residual(*state.velocity())
    if residual > tolerance:
        raise DivergenceViolation(f"Velocity divergence residual {residual:.3e} exceeds {tolerance:.1e}")


# --- operators --------------------------------------------------------------


def apply_acoustic_operator(state: State) -> State:
    """``L_a U = (div_h v + d_z w, 0, grad_h q, d_z q)``."""
    q = state.q
    return State(
        divergence(state.v1, state.v2, state.w),
        SpectralField.zeros(state.resolution, Symmetry.ODD),
        derivative(q, "x"),
        derivative(q, "y"),
        derivative(q, "z"),
    )


def apply_gravity_operator(state: State) -> State:
    """``L_g U = (0, -w, 0, H)``."""
    zero = SpectralField.zeros(state.resolution, Symmetry.EVEN)
    return State(zero, -state.w, zero, zero, state.h)


def apply_fast_operator(state: State, eta: Eta | float) -> State:
    """``(L_a + eta L_g) U``."""
    return apply_acoustic_operator(state) + _eta(eta) * apply_gravity_operator(state)


def apply_soundproof_operator(state: ReducedState, eta: Eta | float) -> ReducedState:
    """``eta * (-w, P_sigma (0, 0, H))``; its eigenvectors are the soundproof modes."""
    value = _eta(eta)
    zero = SpectralField.zeros(state.resolution, Symmetry.EVEN)
    v1, v2, w = leray_project(zero, zero, state.h)
    return ReducedState(-state.w, v1, v2, w) * value


# --- gap audits -------------------------------------------------------------


@dataclass(frozen=True)
class GapReport:
    """Distances between perturbed modes and their limiting counterparts."""

    index: WaveIndex
    eta: float
    aw_freq_gap: float
    gw_freq_gap: float
    aw_vec_gap: float
    gw_vec_gap: float
    extras: dict[str, float] = field(default_factory=dict)


def mode_gap_report(index: WaveIndex, eta: Eta | float) -> GapReport:
    """Frequency and eigenvector gaps at one index.

    Frequency gaps are ``omega_aw - omega_a`` and ``omega_sp - omega_gw``,
    both evaluated through cancellation-free differences of squares.
    Eigenvector gaps are Euclidean distances between the ``Q = 1`` (pressure
    ``= 1``) normalised vectors. At ``eta = 0`` the internal branch has
    collapsed and its gaps are reported as their limit, zero.

    Raises:
        InadmissibleMode: Unless both ``kh`` and ``kz`` are non-zero
    """
    value = _eta(eta)
    if index.horizontal_is_zero or index.kz == 0:
        raise InadmissibleMode(f"Both branches are compared only for kh != 0 and kz != 0, got {index}")
    spec = index_spectrum(index, value)
    aw_freq_gap = float(spec.aw_square_gap / (spec.omega_aw + spec.omega_a))

    perturbed_aw = eigenvector(ModeKind.acoustic_wave(1), index, value)
    pure_aw = eigenvector(ModeKind.acoustic_wave(1, Flavor.PURE_ACOUSTIC), index, value)
    aw_vec_gap = float(np.linalg.norm(perturbed_aw.vector - pure_aw.vector))

    if value == 0.0:
        gw_freq_gap = 0.0
        gw_vec_gap = 0.0
    else:
        sp_minus_gw_squares = (
            2 * value**2 * spec.kh2 * spec.aw_square_gap / (spec.k2 * (spec.k2 + value**2 + spec.root))
        )
        gw_freq_gap = float(sp_minus_gw_squares / (spec.omega_sp + spec.omega_gw))
        perturbed_gw = eigenvector(ModeKind.internal_wave(1), index, value)
        soundproof_gw = eigenvector(ModeKind.internal_wave(1, Flavor.SOUNDPROOF), index, value)
        limit = np.concatenate([[soundproof_gw.pressure], soundproof_gw.vector])
        gw_vec_gap = float(np.linalg.norm(perturbed_gw.vector - limit))

    return GapReport(
        index=index,
        eta=value,
        aw_freq_gap=aw_freq_gap,
        gw_freq_gap=gw_freq_gap,
        aw_vec_gap=aw_vec_gap,
        gw_vec_gap=gw_vec_gap,
        extras={
            "omega_a": float(spec.omega_a),
            "omega_aw": float(spec.omega_aw),
            "omega_gw": float(spec.omega_gw),
            "omega_sp": float(spec.omega_sp),
        },
    )
