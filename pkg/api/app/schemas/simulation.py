from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from tunnelling.physics.core_model import PhysicalConfig


class VelocityInput(BaseModel):
    """Input schema for Bohmian velocities at fixed positions"""
    config: PhysicalConfig = Field(default_factory=PhysicalConfig)
    positions: List[float] = Field(..., min_length=1, description="Positions x >= 0 after the step")

    model_config = ConfigDict(json_schema_extra={
        "example": {
            "config": {"energy": 1.0},
            "positions": [5.0, 10.0, 20.0, 40.0],
        }
    })


class RegimeOutput(BaseModel):
    """Detuning, regime and mode wavenumbers"""
    delta: float = Field(..., description="E - V0 + hbar*J0")
    regime: str
    k_plus_re: float
    k_plus_im: float
    k_minus_re: float
    k_minus_im: float

    model_config = ConfigDict(json_schema_extra={
        "example": {
            "delta": 2.0,
            "regime": "TwoTransmission",
            "k_plus_re": 1.4142135623730951,
            "k_plus_im": 0.0,
            "k_minus_re": 2.449489742783178,
            "k_minus_im": 0.0,
        }
    })


class CoefficientOutput(BaseModel):
    """Small-x coefficient of rho_a from every route"""
    delta_over_hJ0: float
    regime: str
    closed_form: float
    unified: float
    main_text: float
    bohmian: float
    oracle: Optional[float] = Field(None, description="Empty when the window fits did not settle")

    model_config = ConfigDict(json_schema_extra={
        "example": {
            "delta_over_hJ0": 0.0,
            "regime": "MixedTransmissionEvanescent",
            "closed_form": 1.0,
            "unified": 1.0,
            "main_text": 8.0,
            "bohmian": 1.0,
            "oracle": 1.0000000002,
        }
    })


class SpeedOutput(BaseModel):
    """Semi-classical speed against the single-mode speed law"""
    delta_over_hJ0: float
    rho_a_coefficient: float
    semiclassical_speed: float
    original_model_speed: float

    model_config = ConfigDict(json_schema_extra={
        "example": {
            "delta_over_hJ0": 0.0,
            "rho_a_coefficient": 1.0,
            "semiclassical_speed": 1.0,
            "original_model_speed": 0.0,
        }
    })


class VelocityPoint(BaseModel):
    x: float
    v_m: Optional[float] = Field(None, description="Empty at a node of psi_m")
    v_a: Optional[float] = Field(None, description="Empty at a node of psi_a")
