"""
Physical parameters of the two evanescently coupled waveguides, the detuning,
regime classification and the complex wavenumbers of the two propagation modes.

Units are whatever the caller chooses; the defaults (hbar = m = J0 = 1) are the
dimensionless system every sweep in this package is expressed in.
"""
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import DomainError


class Regime(str, Enum):
    """Dynamical regime selected by the detuning"""
    TWO_TRANSMISSION = "TwoTransmission"
    MIXED = "MixedTransmissionEvanescent"
    TWO_EVANESCENT = "TwoEvanescent"


class PhysicalConfig(BaseModel):
    """All model parameters of the coupled stationary equations"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    hbar: float = Field(1.0, gt=0, allow_inf_nan=False, description="Reduced Planck constant")
    mass: float = Field(1.0, gt=0, allow_inf_nan=False, description="Effective photon mass m")
    coupling: float = Field(1.0, gt=0, allow_inf_nan=False, description="Coupling rate J0")
    step_potential: float = Field(0.0, allow_inf_nan=False, description="Step height V0")
    energy: float = Field(0.0, allow_inf_nan=False, description="Stationary-state energy E")
    amplitude_re: float = Field(1.0, allow_inf_nan=False, description="Re(c0)")
    amplitude_im: float = Field(0.0, allow_inf_nan=False, description="Im(c0)")

    @model_validator(mode="after")
    def _check_amplitude_and_detuning(self):
        if self.amplitude_re == 0.0 and self.amplitude_im == 0.0:
            raise ValueError("incident amplitude c0 must be non-zero")
        if not math.isfinite(self.delta):
            raise ValueError("detuning E - V0 + hbar*J0 is not finite")
        return self

    @classmethod
    def from_delta(cls, delta: float, **params) -> "PhysicalConfig":
        """Build a config whose energy is chosen so that the detuning equals ``delta``"""
        return cls(**params).at_delta(delta)

    def at_delta(self, delta: float) -> "PhysicalConfig":
        """Same waveguides, energy moved so that the detuning equals ``delta``"""
        if not math.isfinite(delta):
            raise DomainError(f"detuning must be finite, got {delta!r}")
        return self.model_copy(update={"energy": delta + self.step_potential - self.hbar_coupling})

    @property
    def amplitude(self) -> complex:
        return complex(self.amplitude_re, self.amplitude_im)

    @property
    def hbar_coupling(self) -> float:
        return self.hbar * self.coupling

    @property
    def delta(self) -> float:
        return detuning(self)

    @property
    def omega(self) -> float:
        """Angular frequency of the e^{-i omega t} time factor"""
        return self.energy / self.hbar

    @property
    def regime(self) -> Regime:
        return classify_regime(self.delta, self.hbar_coupling)

    @property
    def length_scale(self) -> float:
        """hbar / sqrt(2 m hbar J0), the unit of x in every sweep"""
        return self.hbar / math.sqrt(2.0 * self.mass * self.hbar_coupling)

    @property
    def speed_scale(self) -> float:
        """sqrt(hbar J0 / m), the plateau speed"""
        return math.sqrt(self.hbar_coupling / self.mass)


@dataclass(frozen=True)
class WaveNumbers:
    """Wavenumbers of the symmetric (k_plus) and antisymmetric (k_minus) modes"""
    k_plus: complex
    k_minus: complex

    @property
    def k_max(self) -> float:
        return max(abs(self.k_plus), abs(self.k_minus))


def detuning(config: PhysicalConfig) -> float:
    return config.energy - config.step_potential + config.hbar_coupling


def classify_regime(delta: float, hbar_J0: float) -> Regime:
    """
    Partition of the detuning axis. The upper boundary delta = hbar*J0 belongs to
    the mixed regime and the lower boundary delta = -hbar*J0 to the evanescent one,
    so a vanishing wavenumber is always the limit of an evanescent branch.
    """
    if not math.isfinite(delta):
        raise DomainError(f"detuning must be finite, got {delta!r}")
    if not hbar_J0 > 0:
        raise DomainError(f"hbar*J0 must be positive, got {hbar_J0!r}")

    if delta > hbar_J0:
        return Regime.TWO_TRANSMISSION
    if delta > -hbar_J0:
        return Regime.MIXED
    return Regime.TWO_EVANESCENT


def principal_sqrt(z):
    """
    Square root on the branch with non-negative imaginary part.

    Negative reals map to +i*sqrt(|z|) (decaying evanescent branch); for
    genuinely complex input numpy's principal branch is used and flipped when
    it lands in the lower half plane.
    """
    z = np.asarray(z)
    if np.isrealobj(z):
        root = np.emath.sqrt(z.astype(float)).astype(np.complex128)
    else:
        root = np.sqrt(z.astype(np.complex128))
        root = np.where(root.imag < 0, -root, root)
    return root[()] if root.ndim == 0 else root


def wavenumbers(config: PhysicalConfig, delta: complex | None = None) -> WaveNumbers:
    """
    k_pm = sqrt(2m(delta -+ hbar J0)) / hbar.

    ``delta`` overrides the config detuning; a complex value is how the
    analytic continuation delta + i*eps is evaluated.
    """
    d = config.delta if delta is None else delta
    scale = 2.0 * config.mass / config.hbar**2
    k_plus = principal_sqrt(scale * (d - config.hbar_coupling))
    k_minus = principal_sqrt(scale * (d + config.hbar_coupling))
    return WaveNumbers(k_plus=complex(k_plus), k_minus=complex(k_minus))


def mass_from_resonance(E_z: float, c_medium: float) -> float:
    """Effective photon mass from the longitudinal resonance, E_z = m c^2"""
    if not (E_z > 0 and c_medium > 0):
        raise DomainError(
            f"resonance energy and medium speed must be positive, got E_z={E_z!r}, c={c_medium!r}"
        )
    return E_z / c_medium**2
