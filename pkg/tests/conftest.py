import math
from pathlib import Path

import pytest

from tunnelling.jobs import cli
from tunnelling.physics.core_model import PhysicalConfig, wavenumbers
from tunnelling.physics.models import SimulationSettings
from tunnelling.verification.fixtures import FixtureStore

FIXTURES_FILE = Path(__file__).parent / "fixtures" / "oracle_fixtures.json"

# One detuning per regime, in units of hbar*J0 with hbar = m = J0 = 1
REGIME_DELTAS = {
    "two_evanescent": -2.0,
    "mixed": 0.5,
    "two_transmission": 2.0,
}


def group_velocity(config: PhysicalConfig) -> float:
    """hbar (k_plus + k_minus) / 2m for a two-transmission config"""
    k = wavenumbers(config)
    return config.hbar * (k.k_plus + k.k_minus).real / (2.0 * config.mass)


def closed_coefficient(a: float, b: float) -> float:
    """2 m J0^2 / (sqrt|delta + hJ0| + sqrt|delta - hJ0|)^2 with hbar = m = J0 = 1"""
    return 2.0 / (math.sqrt(a) + math.sqrt(b)) ** 2


@pytest.fixture
def unit_config() -> PhysicalConfig:
    return PhysicalConfig()


@pytest.fixture
def at_delta():
    def make(delta: float, **params) -> PhysicalConfig:
        return PhysicalConfig.from_delta(delta, **params)

    return make


@pytest.fixture(params=list(REGIME_DELTAS.values()), ids=list(REGIME_DELTAS))
def regime_config(request) -> PhysicalConfig:
    return PhysicalConfig.from_delta(request.param)


@pytest.fixture
def settings() -> SimulationSettings:
    return SimulationSettings()


@pytest.fixture
def config_file(tmp_path):
    def write(text: str) -> str:
        path = tmp_path / "run.cfg"
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


@pytest.fixture(scope="session")
def stored_fixtures() -> FixtureStore:
    """The oracle reference file kept under tests/fixtures, written by `tunnelling fixtures`"""
    if not FIXTURES_FILE.exists():
        assert cli.main(["fixtures", "--out", str(FIXTURES_FILE)]) == cli.EXIT_OK
    return FixtureStore(str(FIXTURES_FILE))
