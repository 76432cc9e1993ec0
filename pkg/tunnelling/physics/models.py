from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import List, Optional, Tuple

from .core_model import Regime

# R at or below this fraction of |c0| marks a node
NODE_THRESHOLD = 1e-10
# Relative to hbar*J0
DEFAULT_EPSILON = 1e-8
EPSILON_SWEEP = (1e-3, 1e-6, 1e-9)
# Equivalence sweep in units of hbar*J0
VERIFY_DELTAS = (-10.0, -2.0, -1.001, -0.5, 0.0, 0.5, 1.001, 2.0, 10.0)


class Waveguide(str, Enum):
    MAIN = "main"
    AUXILIARY = "auxiliary"

    @property
    def partner(self) -> "Waveguide":
        return Waveguide.AUXILIARY if self is Waveguide.MAIN else Waveguide.MAIN


@dataclass
class SimulationSettings:
    """Numerical knobs shared by the library, the oracle and the jobs"""
    # Bohmian quantities
    node_threshold: float = NODE_THRESHOLD
    continuation_epsilon: float = DEFAULT_EPSILON
    epsilon_sweep: Tuple[float, ...] = EPSILON_SWEEP

    # Semi-classical speed fit, window in units of hbar/sqrt(2 m hbar J0)
    fit_window_factor: float = 0.05
    fit_samples: int = 50

    # Oracle
    oracle_windows: Tuple[float, ...] = (1e-2, 1e-3, 1e-4, 1e-5)
    oracle_samples: int = 64
    oracle_stability: float = 1e-6
    stencil_target: float = 0.05  # k_max * h upper bound for the stencil step
    residual_points: int = 256
    residual_x_max: float = 5.0
    residual_configs: int = 50

    # Verification sweep
    verify_deltas: Tuple[float, ...] = VERIFY_DELTAS
    continuity_points: int = 200
    reconstruction_points: int = 2001
    # pointwise checks skip samples with |psi| below this fraction of the envelope
    conditioning_floor: float = 0.05

    # Output
    max_workers: int = 4
    csv_digits: int = 17


@dataclass(frozen=True)
class WaveField:
    """Closed-form amplitudes and their analytic x-derivatives at one point"""
    x: float
    psi_m: complex
    psi_a: complex
    dpsi_m_dx: complex
    dpsi_a_dx: complex

    def psi(self, waveguide: Waveguide) -> complex:
        return self.psi_m if waveguide is Waveguide.MAIN else self.psi_a

    def dpsi(self, waveguide: Waveguide) -> complex:
        return self.dpsi_m_dx if waveguide is Waveguide.MAIN else self.dpsi_a_dx


@dataclass(frozen=True)
class PopulationSample:
    x: float
    rho_a_raw: float
    rho_a_norm: float


@dataclass(frozen=True)
class CoefficientReport:
    """Small-x coefficient of rho_a from three independent routes"""
    closed_form: float
    bohmian: float
    oracle: float
    regime: Regime

    def max_relative_spread(self) -> float:
        pairs = combinations((self.closed_form, self.bohmian, self.oracle), 2)
        return max(abs(a - b) / max(abs(a), abs(b)) for a, b in pairs)


@dataclass(frozen=True)
class PolarField:
    """Madelung decomposition psi = R e^{iS} in both waveguides at one point"""
    x: float
    R_m: float
    S_m: float
    R_a: float
    S_a: float
    node_m: bool = False
    node_a: bool = False


@dataclass(frozen=True)
class EnergyBudget:
    """Terms of the stationary Hamilton-Jacobi balance for one waveguide"""
    kinetic: float
    quantum_potential: float
    external: float
    coupling: float

    @property
    def total(self) -> float:
        return self.kinetic + self.quantum_potential + self.external + self.coupling


@dataclass
class Trajectory:
    waveguide: Waveguide
    times: List[float] = field(default_factory=list)
    positions: List[float] = field(default_factory=list)
    truncated: bool = False
    reason: Optional[str] = None

    @property
    def final_position(self) -> float:
        return self.positions[-1]
