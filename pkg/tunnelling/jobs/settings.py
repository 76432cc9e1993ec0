"""
Run requests for the command-line jobs: flat ``key = value`` config files,
flag overlays and the validated SweepRequest every job consumes.
"""
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..physics.core_model import PhysicalConfig
from ..physics.errors import DomainError
from ..physics.models import Waveguide


class Mode(str, Enum):
    WAVEFIELD = "wavefield"
    SPEED_CURVE = "speed_curve"
    VELOCITY_CURVE = "velocity_curve"
    COEFFICIENTS = "coefficients"
    VERIFY = "verify"
    TRAJECTORY = "trajectory"
    FIXTURES = "fixtures"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


PHYSICS_KEYS = (
    "hbar", "mass", "coupling", "step_potential", "energy", "amplitude_re", "amplitude_im",
)
SWEEP_KEYS = (
    "delta", "x_min", "x_max", "points", "delta_min", "delta_max", "positions",
    "out", "format", "t_end", "dt", "waveguide",
)

# Default sweep per mode: (variable, start, stop, n); delta in units of hbar*J0,
# x in units of hbar / sqrt(2 m hbar J0). verify runs its own fixed detunings.
DEFAULT_RANGES: Dict[Mode, Tuple[str, float, float, int]] = {
    Mode.WAVEFIELD: ("x", 0.0, 10.0, 500),
    Mode.SPEED_CURVE: ("delta", -5.0, 5.0, 201),
    Mode.VELOCITY_CURVE: ("delta", -5.0, 5.0, 201),
    Mode.COEFFICIENTS: ("delta", -10.0, 10.0, 21),
    Mode.TRAJECTORY: ("x", 0.5, 5.0, 10),
}
# Sample positions for velocity curves, in units of hbar / sqrt(2 m hbar J0)
DEFAULT_POSITIONS = [5.0, 10.0, 20.0, 40.0]


class SweepRequest(BaseModel):
    """Everything one job run needs"""
    model_config = ConfigDict(frozen=True)

    mode: Mode
    config: PhysicalConfig = Field(default_factory=PhysicalConfig)
    # unset for verify and fixtures
    start: Optional[float] = Field(None, allow_inf_nan=False)
    stop: Optional[float] = Field(None, allow_inf_nan=False)
    n: Optional[int] = Field(None, ge=2)
    fixed_positions: Optional[List[float]] = None
    output_path: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV

    # trajectory mode
    waveguide: Waveguide = Waveguide.MAIN
    t_end: float = Field(5.0, ge=0, allow_inf_nan=False)
    dt: float = Field(0.01, gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_range(self):
        if self.mode in DEFAULT_RANGES and (self.start is None or self.stop is None
                                            or self.n is None):
            raise ValueError(f"{self.mode.value} needs a sweep range")
        if self.start is not None and not self.start < self.stop:
            raise ValueError(f"sweep start {self.start!r} must be below stop {self.stop!r}")
        if self.mode is Mode.VELOCITY_CURVE and not self.fixed_positions:
            raise ValueError("velocity_curve needs at least one fixed position")
        return self


def parse_config_file(path: str) -> Dict[str, str]:
    """
    Read a flat ``key = value`` file. Blank lines and ``#`` comments are
    skipped; an unknown key is an error naming that key.
    """
    values: Dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in PHYSICS_KEYS and key not in SWEEP_KEYS:
                raise DomainError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value
    return values


def _positions(value: Any) -> List[float]:
    if isinstance(value, str):
        return [float(p) for p in value.replace(",", " ").split()]
    return [float(p) for p in value]


def parse_config(mode: Mode, path: Optional[str] = None,
                 flags: Optional[Dict[str, Any]] = None) -> Tuple[PhysicalConfig, SweepRequest]:
    """
    Merge config file and flags (flags win) into a validated request.

    An explicit ``delta`` moves the energy so that E - V0 + hbar*J0 = delta and
    therefore takes precedence over ``energy``.
    """
    merged: Dict[str, Any] = parse_config_file(path) if path else {}
    for key, value in (flags or {}).items():
        if key not in PHYSICS_KEYS and key not in SWEEP_KEYS:
            raise DomainError(f"unknown config key {key!r}")
        if value is not None:
            merged[key] = value

    config = PhysicalConfig(**{k: float(merged[k]) for k in PHYSICS_KEYS if k in merged})
    if "delta" in merged:
        config = config.at_delta(float(merged["delta"]))

    start = stop = n = None
    if mode in DEFAULT_RANGES:
        variable, start, stop, n = DEFAULT_RANGES[mode]
        start = float(merged.get(f"{variable}_min", start))
        stop = float(merged.get(f"{variable}_max", stop))
        n = int(merged.get("points", n))

    positions = merged.get("positions")
    if positions is not None:
        positions = _positions(positions)
    elif mode is Mode.VELOCITY_CURVE:
        positions = list(DEFAULT_POSITIONS)

    request = SweepRequest(
        mode=mode,
        config=config,
        start=start,
        stop=stop,
        n=n,
        fixed_positions=positions,
        output_path=merged.get("out"),
        format=merged.get("format", OutputFormat.CSV),
        waveguide=merged.get("waveguide", Waveguide.MAIN),
        t_end=float(merged.get("t_end", 5.0)),
        dt=float(merged.get("dt", 0.01)),
    )
    return config, request
