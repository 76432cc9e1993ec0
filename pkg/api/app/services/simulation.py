import math
from typing import List

import numpy as np

from tunnelling.physics import bohmian, closed_form
from tunnelling.physics.core_model import PhysicalConfig, wavenumbers
from tunnelling.physics.errors import ConvergenceError
from tunnelling.physics.models import SimulationSettings, Waveguide
from tunnelling.verification import oracle

from ..schemas.simulation import CoefficientOutput, RegimeOutput, SpeedOutput, VelocityPoint

settings = SimulationSettings()


def _optional(value: float):
    return None if math.isnan(value) else float(value)


def describe_regime(config: PhysicalConfig) -> RegimeOutput:
    k = wavenumbers(config)
    return RegimeOutput(
        delta=config.delta,
        regime=config.regime.value,
        k_plus_re=k.k_plus.real,
        k_plus_im=k.k_plus.imag,
        k_minus_re=k.k_minus.real,
        k_minus_im=k.k_minus.imag,
    )


def coefficients(config: PhysicalConfig) -> CoefficientOutput:
    variants = closed_form.expansion_variants(config)
    try:
        numeric = oracle.numeric_quadratic_coefficient(
            config, settings.oracle_windows, settings.oracle_samples, settings.oracle_stability
        )
    except ConvergenceError:
        numeric = None
    return CoefficientOutput(
        delta_over_hJ0=config.delta / config.hbar_coupling,
        regime=config.regime.value,
        closed_form=variants["regime"],
        unified=variants["unified"],
        main_text=variants["main_text"],
        bohmian=bohmian.rho_aB_coefficient(config),
        oracle=numeric,
    )


def speed(config: PhysicalConfig) -> SpeedOutput:
    return SpeedOutput(
        delta_over_hJ0=config.delta / config.hbar_coupling,
        rho_a_coefficient=closed_form.rho_a_coefficient(config),
        semiclassical_speed=closed_form.semiclassical_speed(config),
        original_model_speed=closed_form.original_model_speed(config),
    )


def velocities(config: PhysicalConfig, positions: List[float]) -> List[VelocityPoint]:
    x = np.asarray(positions, dtype=float)
    v_m = bohmian.velocity_profile(config, x, Waveguide.MAIN, settings.node_threshold)
    v_a = bohmian.velocity_profile(config, x, Waveguide.AUXILIARY, settings.node_threshold)
    return [
        VelocityPoint(x=float(x[i]), v_m=_optional(v_m[i]), v_a=_optional(v_a[i]))
        for i in range(x.size)
    ]
