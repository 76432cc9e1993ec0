import json
import logging
import os
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional

from ..physics import bohmian, closed_form
from ..physics.core_model import PhysicalConfig, wavenumbers
from ..physics.errors import OutputError
from ..physics.models import SimulationSettings, Waveguide
from . import oracle

logger = logging.getLogger(__name__)

# written by `tunnelling fixtures`, read back by the test suite
DEFAULT_FIXTURES_PATH = os.path.join("tests", "fixtures", "oracle_fixtures.json")


@dataclass
class FixtureRecord:
    """One oracle-produced reference value; tolerance is relative to max(|value|, 1)"""
    quantity: str
    config: Dict[str, float]
    value: float
    tolerance: float
    x: Optional[float] = None

    @property
    def physical_config(self) -> PhysicalConfig:
        return PhysicalConfig(**self.config)

    def matches(self, candidate: float) -> bool:
        return abs(candidate - self.value) <= self.tolerance * max(abs(self.value), 1.0)


def _mode_squares(config: PhysicalConfig) -> tuple:
    k = wavenumbers(config)
    return (k.k_plus**2).real, (k.k_minus**2).real


# Analytic counterpart of every fixture quantity; the oracle never calls these
ANALYTIC: Dict[str, Callable[[PhysicalConfig, Optional[float]], float]] = {
    "rho_a_coefficient": lambda c, x: closed_form.rho_a_coefficient(c),
    "rho_aB_coefficient": lambda c, x: bohmian.rho_aB_coefficient(c),
    "semiclassical_speed": lambda c, x: closed_form.semiclassical_speed(c),
    "k_plus_squared": lambda c, x: _mode_squares(c)[0],
    "k_minus_squared": lambda c, x: _mode_squares(c)[1],
    "bohm_velocity_main": lambda c, x: bohmian.bohm_velocity(c, x, Waveguide.MAIN),
    "bohm_velocity_auxiliary": lambda c, x: bohmian.bohm_velocity(c, x, Waveguide.AUXILIARY),
    "quantum_potential_main": lambda c, x: bohmian.quantum_potential(c, x, Waveguide.MAIN),
    "quantum_potential_auxiliary":
        lambda c, x: bohmian.quantum_potential(c, x, Waveguide.AUXILIARY),
    # d/dx(rho v) balances +j0 in the main waveguide and -j0 in the auxiliary one
    "flux_divergence_main": lambda c, x: bohmian.tunnelling_current(c, x),
    "flux_divergence_auxiliary": lambda c, x: -bohmian.tunnelling_current(c, x),
    "stationary_residual_max": lambda c, x: 0.0,
}


def analytic_value(record: FixtureRecord) -> float:
    return ANALYTIC[record.quantity](record.physical_config, record.x)


class FixtureStore:
    """Generates, persists and summarises the oracle reference values"""

    def __init__(self, path: str = DEFAULT_FIXTURES_PATH,
                 settings: Optional[SimulationSettings] = None):
        self.path = path
        self.settings = settings or SimulationSettings()

    def generate(self) -> List[FixtureRecord]:
        """Recompute every reference value; the order and grids are fixed"""
        s = self.settings
        records: List[FixtureRecord] = []

        def add(quantity, config, value, tolerance, x=None):
            records.append(FixtureRecord(quantity, config.model_dump(), float(value), tolerance, x))

        def coefficient(config):
            return oracle.numeric_quadratic_coefficient(
                config, s.oracle_windows, s.oracle_samples, s.oracle_stability
            )

        for delta in s.verify_deltas:
            config = PhysicalConfig.from_delta(delta)
            add("rho_a_coefficient", config, coefficient(config), 1e-4)

        for delta in (-5.0, 0.0, 2.0):
            config = PhysicalConfig.from_delta(delta)
            add("rho_aB_coefficient", config, coefficient(config), 1e-4)

        for delta in (0.0, 1000.0):
            config = PhysicalConfig.from_delta(delta)
            add("semiclassical_speed", config, config.coupling / coefficient(config) ** 0.5, 1e-4)

        for delta in (-2.0, 0.5, 2.0):
            config = PhysicalConfig.from_delta(delta)
            k_plus_sq, k_minus_sq = oracle.numeric_mode_wavenumbers(config)
            add("k_plus_squared", config, k_plus_sq.real, 1e-8)
            add("k_minus_squared", config, k_minus_sq.real, 1e-8)

        for delta in (0.5, 2.0):
            config = PhysicalConfig.from_delta(delta)
            for waveguide in Waveguide:
                add(f"bohm_velocity_{waveguide.value}", config,
                    oracle.numeric_velocity(config, 1.0, waveguide), 1e-8, x=1.0)
                add(f"flux_divergence_{waveguide.value}", config,
                    oracle.numeric_flux_divergence(config, 1.0, waveguide), 1e-7, x=1.0)

        for delta in (-2.0, 0.5, 2.0):
            config = PhysicalConfig.from_delta(delta)
            for waveguide in Waveguide:
                add(f"quantum_potential_{waveguide.value}", config,
                    oracle.numeric_quantum_potential(config, 1.0, waveguide), 1e-7, x=1.0)

        # deep in the evanescent tail, where Q tends to its asymptote
        config = PhysicalConfig.from_delta(-2.0)
        tail = 10.0 / abs(wavenumbers(config).k_minus)
        add("quantum_potential_main", config,
            oracle.numeric_quantum_potential(config, tail, Waveguide.MAIN), 1e-6, x=tail)

        grid = oracle.GridSpec(0.0, s.residual_x_max, s.residual_points)
        for delta in (-2.0, 0.0, 2.0):
            config = PhysicalConfig.from_delta(delta)
            reports = oracle.stationary_residual(config, grid, stencil_target=s.stencil_target)
            add("stationary_residual_max", config,
                max(r.max_abs for r in reports.values()), 1e-8)

        logger.info("generated %d fixture records", len(records))
        return records

    def save(self, records: Optional[List[FixtureRecord]] = None) -> str:
        """Write records (regenerated if not given) as JSON; returns the path"""
        records = self.generate() if records is None else records
        directory = os.path.dirname(self.path)
        try:
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(self.path, "w", encoding="utf-8", newline="\n") as f:
                json.dump([asdict(r) for r in records], f, indent=2, ensure_ascii=False)
                f.write("\n")
        except OSError as exc:
            raise OutputError(self.path, exc.strerror or str(exc)) from exc
        logger.info("fixtures saved to %s", self.path)
        return self.path

    def load(self) -> List[FixtureRecord]:
        with open(self.path, encoding="utf-8") as f:
            return [FixtureRecord(**item) for item in json.load(f)]

    def get_stats(self) -> dict:
        """Record counts per quantity and how many the analytic paths reproduce"""
        if not os.path.exists(self.path):
            return {}

        records = self.load()
        per_quantity: Dict[str, int] = {}
        for record in records:
            per_quantity[record.quantity] = per_quantity.get(record.quantity, 0) + 1

        failing = [r.quantity for r in records if not r.matches(analytic_value(r))]
        return {
            "total_records": len(records),
            "quantities": per_quantity,
            "reproduced": len(records) - len(failing),
            "failing": failing,
        }
