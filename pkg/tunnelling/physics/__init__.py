from .core_model import PhysicalConfig, Regime, WaveNumbers, classify_regime, wavenumbers
from .errors import (
    ConvergenceError,
    DegenerateFitError,
    DomainError,
    NodeError,
    NumericalConsistencyError,
    OutputError,
    TailUnderflowError,
    TunnellingError,
)
from .models import SimulationSettings, Trajectory, Waveguide

__all__ = [
    'PhysicalConfig',
    'Regime',
    'WaveNumbers',
    'classify_regime',
    'wavenumbers',
    'SimulationSettings',
    'Trajectory',
    'Waveguide',
    'TunnellingError',
    'DomainError',
    'NodeError',
    'TailUnderflowError',
    'DegenerateFitError',
    'ConvergenceError',
    'NumericalConsistencyError',
    'OutputError',
]
