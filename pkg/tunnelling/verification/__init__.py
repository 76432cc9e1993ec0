from .checks import CheckResult, VerificationReport, run_checks
from .fixtures import FixtureRecord, FixtureStore
from .oracle import GridSpec, ResidualReport, convergence_check, stationary_residual

__all__ = [
    'CheckResult',
    'VerificationReport',
    'run_checks',
    'FixtureRecord',
    'FixtureStore',
    'GridSpec',
    'ResidualReport',
    'convergence_check',
    'stationary_residual',
]
