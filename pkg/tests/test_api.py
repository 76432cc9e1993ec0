import math

import pytest
from fastapi.testclient import TestClient

from api.app.main import app
from tunnelling import __version__


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["version"] == __version__


def test_health(client):
    assert client.get("/health").json() == {
        "status": "healthy",
        "service": "waveguide-tunnelling-api",
    }


def test_regime(client):
    response = client.post("/api/v1/regime", json={"energy": 1.0})
    assert response.status_code == 200
    body = response.json()
    assert body["delta"] == 2.0
    assert body["regime"] == "TwoTransmission"
    assert body["k_plus_re"] == pytest.approx(math.sqrt(2.0))
    assert body["k_minus_re"] == pytest.approx(math.sqrt(6.0))


def test_coefficients(client):
    body = client.post("/api/v1/coefficients", json={"energy": -1.0}).json()
    assert body["delta_over_hJ0"] == 0.0
    assert body["closed_form"] == 1.0
    assert body["main_text"] == pytest.approx(8.0)
    assert body["bohmian"] == pytest.approx(1.0)
    assert body["oracle"] == pytest.approx(1.0, abs=1e-5)


def test_speed(client):
    body = client.post("/api/v1/speed", json={}).json()
    assert body["semiclassical_speed"] == 1.0
    assert body["original_model_speed"] == pytest.approx(math.sqrt(2.0))


def test_velocities(client):
    payload = {"config": {"energy": 1.0}, "positions": [0.0, 1.0]}
    points = client.post("/api/v1/velocities", json=payload).json()
    assert points[0]["x"] == 0.0
    assert points[0]["v_a"] is None
    speed = (math.sqrt(2.0) + math.sqrt(6.0)) / 2.0
    assert points[1]["v_m"] == pytest.approx(speed)
    assert points[1]["v_a"] == pytest.approx(speed)


def test_invalid_config_is_rejected(client):
    assert client.post("/api/v1/regime", json={"coupling": -1.0}).status_code == 422
    assert client.post("/api/v1/regime", json={"colour": "blue"}).status_code == 422


def test_positions_before_the_step_are_rejected(client):
    response = client.post("/api/v1/velocities", json={"positions": [-1.0]})
    assert response.status_code == 422
    assert "x >= 0" in response.json()["detail"]


def test_positions_are_required(client):
    assert client.post("/api/v1/velocities", json={"positions": []}).status_code == 422
