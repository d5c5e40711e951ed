"""Model constants and stratification profiles."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from solver.wave_modes import Eta

ProfileSpec = Union[str, tuple[float, ...]]

# Sine-series coefficients b_k of profile(z) = sum_k b_k sin(2 pi k z)
NAMED_PROFILES: dict[str, tuple[float, ...]] = {
    "sin2piz": (1.0,),
    "zero": (),
}


def profile_coefficients(spec: ProfileSpec) -> tuple[float, ...]:
    """Resolve a profile name or coefficient tuple.

    Raises:
        ValueError: If the name is not registered
    """
    if isinstance(spec, str):
        if spec not in NAMED_PROFILES:
            supported = ", ".join(NAMED_PROFILES)
            raise ValueError(f"Unknown profile: {spec}. Supported profiles: {supported}")
        return NAMED_PROFILES[spec]
    return tuple(float(b) for b in spec)


class Profiles(BaseModel):
    """Odd-in-z stratification profiles ``G``, ``Hbar0`` and ``Gtilde``."""

    model_config = ConfigDict(frozen=True)

    G: ProfileSpec = "sin2piz"
    Hbar0: ProfileSpec = "sin2piz"
    Gtilde: ProfileSpec = "sin2piz"

    @field_validator("G", "Hbar0", "Gtilde")
    @classmethod
    def _known_profile(cls, value: ProfileSpec) -> ProfileSpec:
        profile_coefficients(value)
        return value


class ModelParams(BaseModel):
    """Constants of the compressible system and its reductions.

    ``mu = 1 - 2 nu``, ``eta = epsilon ** (1 - nu)`` and
    ``varpi0 = 1 / ((gamma - 1) A)`` are derived and never serialised.
    """

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(1.4, gt=1.0)
    A: float = Field(1.0, gt=0.0)
    B: float = Field(1.0, gt=0.0)
    C: float = Field(1.0, gt=0.0)
    epsilon: float = Field(0.1, gt=0.0, lt=1.0)
    nu: float = Field(0.25, gt=0.0, lt=0.5)
    sigma: float | None = Field(None, gt=0.0)
    profiles: Profiles = Profiles()

    @model_validator(mode="after")
    def _sigma_in_range(self) -> ModelParams:
        if self.sigma is not None and self.sigma > self.mu + 1e-15:
            raise ValueError(f"sigma must lie in (0, mu={self.mu}], got {self.sigma}")
        return self

    @property
    def mu(self) -> float:
        return 1.0 - 2.0 * self.nu

    @property
    def eta(self) -> float:
        return self.epsilon ** (1.0 - self.nu)

    @property
    def eta_value(self) -> Eta:
        return Eta.from_epsilon(self.epsilon, self.nu)

    @property
    def varpi0(self) -> float:
        return 1.0 / ((self.gamma - 1.0) * self.A)

    @property
    def sigma_value(self) -> float:
        return self.mu if self.sigma is None else self.sigma

    @property
    def unit_constants(self) -> bool:
        return self.A == 1.0 and self.B == 1.0 and self.C == 1.0

    def with_epsilon(self, epsilon: float) -> ModelParams:
        return self.model_copy(update={"epsilon": epsilon})

    def linear_only(self) -> ModelParams:
        """Same constants with every profile switched off."""
        return self.model_copy(update={"profiles": Profiles(G="zero", Hbar0="zero", Gtilde="zero")})


@dataclass(frozen=True, eq=False)
class ProfileGrids:
    """Profiles sampled on the vertical lattice."""

    z: np.ndarray
    G: np.ndarray
    Hbar0: np.ndarray
    Gtilde: np.ndarray
    IG: np.ndarray
    IH: np.ndarray
    dG: np.ndarray
    dHbar0: np.ndarray


def _series(coeffs: tuple[float, ...], z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value, derivative and primitive from 0 of a sine series."""
    value = np.zeros_like(z)
    slope = np.zeros_like(z)
    primitive = np.zeros_like(z)
    for k, b in enumerate(coeffs, start=1):
        phase = 2 * np.pi * k * z
        value += b * np.sin(phase)
        slope += b * 2 * np.pi * k * np.cos(phase)
        primitive += b * (1 - np.cos(phase)) / (2 * np.pi * k)
    return value, slope, primitive


@functools.lru_cache(maxsize=32)
def profile_grids(profiles: Profiles, nz: int) -> ProfileGrids:
    z = np.arange(nz) / nz
    g, dg, ig = _series(profile_coefficients(profiles.G), z)
    hbar0, dhbar0, ih = _series(profile_coefficients(profiles.Hbar0), z)
    gtilde, _, _ = _series(profile_coefficients(profiles.Gtilde), z)
    arrays = ProfileGrids(z=z, G=g, Hbar0=hbar0, Gtilde=gtilde, IG=ig, IH=ih, dG=dg, dHbar0=dhbar0)
    for name in ("z", "G", "Hbar0", "Gtilde", "IG", "IH", "dG", "dHbar0"):
        getattr(arrays, name).setflags(write=False)
    return arrays
