from typing import List

from fastapi import APIRouter

from tunnelling.physics.core_model import PhysicalConfig

from ..schemas.simulation import (
    CoefficientOutput,
    RegimeOutput,
    SpeedOutput,
    VelocityInput,
    VelocityPoint,
)
from ..services import simulation

router = APIRouter()


@router.post("/regime", response_model=RegimeOutput)
def regime(config: PhysicalConfig):
    """Detuning, dynamical regime and mode wavenumbers"""
    return simulation.describe_regime(config)


@router.post("/coefficients", response_model=CoefficientOutput)
def coefficients(config: PhysicalConfig):
    """Closed-form, Bohmian and numerically fitted small-x coefficients"""
    return simulation.coefficients(config)


@router.post("/speed", response_model=SpeedOutput)
def speed(config: PhysicalConfig):
    return simulation.speed(config)


@router.post("/velocities", response_model=List[VelocityPoint])
def velocities(request: VelocityInput):
    """Bohmian velocities in both waveguides; null at nodes"""
    return simulation.velocities(request.config, request.positions)
