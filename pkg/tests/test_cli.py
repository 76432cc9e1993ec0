import csv
import io
import json
import math

import pytest
from pydantic import ValidationError

from tunnelling.jobs import cli, sweeps
from tunnelling.jobs.settings import Mode, OutputFormat, SweepRequest, parse_config
from tunnelling.physics.core_model import Regime
from tunnelling.physics.errors import DomainError
from tunnelling.physics.models import VERIFY_DELTAS, Waveguide


def _rows(text: str):
    return list(csv.reader(io.StringIO(text)))


class TestParseConfig:
    def test_defaults(self):
        config, request = parse_config(Mode.WAVEFIELD)
        assert config.delta == 1.0
        assert config.regime is Regime.MIXED
        assert (request.start, request.stop, request.n) == (0.0, 10.0, 500)
        assert request.format is OutputFormat.CSV
        assert request.output_path is None

    def test_config_file(self, config_file):
        path = config_file("# run\nenergy = 5\ncoupling = 1.0  # J0\n\nformat = json\n")
        config, request = parse_config(Mode.SPEED_CURVE, path)
        assert config.delta == 6.0
        assert config.regime is Regime.TWO_TRANSMISSION
        assert request.format is OutputFormat.JSON
        assert (request.start, request.stop, request.n) == (-5.0, 5.0, 201)

    def test_verify_has_no_sweep_range(self):
        _, request = parse_config(Mode.VERIFY, flags={"delta_min": -3.0, "points": 7})
        assert (request.start, request.stop, request.n) == (None, None, None)

    def test_sweep_modes_need_a_range(self):
        with pytest.raises(ValidationError):
            SweepRequest(mode=Mode.WAVEFIELD)

    def test_invalid_coupling(self, config_file):
        with pytest.raises(ValidationError):
            parse_config(Mode.WAVEFIELD, config_file("coupling = -1\n"))

    def test_unknown_key_is_named(self, config_file):
        with pytest.raises(DomainError, match="frequency"):
            parse_config(Mode.WAVEFIELD, config_file("frequency = 3\n"))

    def test_line_without_value(self, config_file):
        with pytest.raises(DomainError):
            parse_config(Mode.WAVEFIELD, config_file("energy\n"))

    def test_flags_override_file(self, config_file):
        path = config_file("energy = 5\npoints = 20\n")
        config, request = parse_config(Mode.WAVEFIELD, path, {"energy": 1.0, "points": None})
        assert config.energy == 1.0
        assert request.n == 20

    def test_delta_wins_over_energy(self):
        config, _ = parse_config(Mode.WAVEFIELD, flags={"energy": 7.0, "delta": -2.0})
        assert config.delta == -2.0
        assert config.regime is Regime.TWO_EVANESCENT

    def test_velocity_curve_gets_default_positions(self):
        _, request = parse_config(Mode.VELOCITY_CURVE)
        assert request.fixed_positions == [5.0, 10.0, 20.0, 40.0]

    def test_positions_are_parsed(self):
        _, request = parse_config(Mode.VELOCITY_CURVE, flags={"positions": "1, 2.5,4"})
        assert request.fixed_positions == [1.0, 2.5, 4.0]

    def test_empty_positions(self):
        with pytest.raises(ValidationError):
            parse_config(Mode.VELOCITY_CURVE, flags={"positions": ""})

    def test_reversed_range(self):
        with pytest.raises(ValidationError):
            parse_config(Mode.WAVEFIELD, flags={"x_min": 3.0, "x_max": 1.0})

    def test_trajectory_options(self):
        _, request = parse_config(
            Mode.TRAJECTORY, flags={"waveguide": "auxiliary", "t_end": 2.0, "dt": 0.05}
        )
        assert request.waveguide is Waveguide.AUXILIARY
        assert (request.t_end, request.dt) == (2.0, 0.05)


class TestWavefield:
    def test_table_to_stdout(self, capsys):
        assert cli.main(["wavefield"]) == cli.EXIT_OK
        rows = _rows(capsys.readouterr().out)
        assert rows[0] == sweeps.WAVEFIELD_COLUMNS
        assert len(rows) == 501
        # psi_a vanishes at the step edge, so v_a is undefined there
        assert rows[1][sweeps.WAVEFIELD_COLUMNS.index("v_a")] == ""

    def test_output_is_deterministic(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(["wavefield", "--delta", "0.5", "--out", str(first)]) == cli.EXIT_OK
        assert cli.main(["wavefield", "--delta", "0.5", "--out", str(second)]) == cli.EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        assert b"\r" not in first.read_bytes()

    def test_evanescent_photons_rest(self, capsys):
        assert cli.main(["wavefield", "--delta", "-2", "--x-min", "0.1"]) == cli.EXIT_OK
        rows = _rows(capsys.readouterr().out)[1:]
        for row in rows:
            assert abs(float(row[-2])) < 1e-12
            assert abs(float(row[-1])) < 1e-12
            assert float(row[sweeps.WAVEFIELD_COLUMNS.index("j0")]) == 0.0

    def test_unwritable_output(self, tmp_path):
        target = tmp_path / "missing" / "out.csv"
        assert cli.main(["wavefield", "--out", str(target)]) == cli.EXIT_ERROR

    def test_invalid_physics_is_reported(self, capsys):
        assert cli.main(["wavefield", "--coupling", "-1"]) == cli.EXIT_ERROR
        assert "❌" in capsys.readouterr().err


class TestSweeps:
    def test_speed_curve(self, capsys):
        assert cli.main(["speed-curve"]) == cli.EXIT_OK
        rows = _rows(capsys.readouterr().out)
        assert rows[0] == sweeps.SPEED_COLUMNS
        body = [[float(c) for c in row] for row in rows[1:]]
        assert len(body) == 201

        for delta, v, fitted, _ in body:
            if abs(delta) <= 1.0 - 1e-9:
                assert v == pytest.approx(1.0, rel=1e-12)
        for i in range(100):
            assert body[i][1] == pytest.approx(body[200 - i][1], rel=1e-9)

        plateau = body[100]
        assert plateau[0] == pytest.approx(0.0, abs=1e-12)
        assert plateau[2] == pytest.approx(1.0, rel=1e-3)

    def test_velocity_curve_groups_by_position(self, capsys):
        argv = ["velocity-curve", "--positions", "5,10", "--points", "3"]
        assert cli.main(argv) == cli.EXIT_OK
        rows = _rows(capsys.readouterr().out)[1:]
        assert [(float(r[0]), float(r[1])) for r in rows] == [
            (-5.0, 5.0), (0.0, 5.0), (5.0, 5.0), (-5.0, 10.0), (0.0, 10.0), (5.0, 10.0),
        ]
        evanescent = [r for r in rows if float(r[0]) == -5.0]
        assert all(abs(float(r[2])) < 1e-12 and abs(float(r[3])) < 1e-12 for r in evanescent)
        transmitting = [r for r in rows if float(r[0]) == 5.0]
        for r in transmitting:
            assert float(r[2]) == pytest.approx(float(r[3]), rel=1e-9)
            assert float(r[2]) == pytest.approx((math.sqrt(8.0) + math.sqrt(12.0)) / 2.0)

    def test_coefficients_as_json(self, tmp_path):
        out = tmp_path / "coefficients.json"
        argv = ["coefficients", "--points", "5", "--format", "json", "--out", str(out)]
        assert cli.main(argv) == cli.EXIT_OK
        records = json.loads(out.read_text(encoding="utf-8"))
        assert [r["delta_over_hJ0"] for r in records] == [-10.0, -5.0, 0.0, 5.0, 10.0]
        plateau = records[2]
        assert plateau["regime"] == Regime.MIXED.value
        assert plateau["closed_form"] == 1.0
        assert plateau["oracle"] == pytest.approx(1.0, abs=1e-5)
        assert plateau["bohmian"] == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "command, unit_args, scaled_args",
        [
            (["wavefield"], ["--delta", "2"], ["--delta", "8"]),
            (["velocity-curve", "--positions", "0.5,5,10", "--points", "5"], [], []),
            (["speed-curve", "--points", "11"], [], []),
        ],
    )
    def test_plot_axes_are_dimensionless(self, capsys, command, unit_args, scaled_args):
        assert cli.main(command + unit_args) == cli.EXIT_OK
        unit = _rows(capsys.readouterr().out)
        # hbar*J0 = 4, so --delta 8 is the same delta/hbar*J0 as --delta 2
        scaled_flags = ["--coupling", "4", "--mass", "2"]
        assert cli.main(command + scaled_args + scaled_flags) == cli.EXIT_OK
        scaled = _rows(capsys.readouterr().out)

        assert unit[0] == scaled[0] and len(unit) == len(scaled)
        columns = unit[0]
        for a, b in zip(unit[1:], scaled[1:]):
            for column, left, right in zip(columns, a, b):
                if column == "j0":
                    assert float(right) == pytest.approx(4.0 * float(left), rel=1e-7, abs=1e-12)
                elif left == "" or right == "":
                    assert left == right
                else:
                    assert float(right) == pytest.approx(float(left), rel=1e-7, abs=1e-12)

    def test_velocity_curve_scales_with_the_plateau_speed(self, capsys):
        argv = ["velocity-curve", "--positions", "5", "--delta-min", "4", "--delta-max", "5",
                "--points", "2", "--coupling", "4", "--mass", "2"]
        assert cli.main(argv) == cli.EXIT_OK
        row = _rows(capsys.readouterr().out)[2]
        assert float(row[0]) == 5.0
        # k+/- = sqrt(2m(delta -/+ hbar J0)) = sqrt(64), sqrt(96); v = (k+ + k-)/2m
        v = (math.sqrt(64.0) + math.sqrt(96.0)) / 4.0
        assert float(row[2]) == pytest.approx(v / math.sqrt(2.0), rel=1e-12)
        assert float(row[2]) == pytest.approx(math.sqrt(2.0) + math.sqrt(3.0), rel=1e-12)

    def test_trajectory(self, capsys):
        argv = ["trajectory", "--delta", "2", "--positions", "1", "--t-end", "0.5", "--dt", "0.1"]
        assert cli.main(argv) == cli.EXIT_OK
        rows = _rows(capsys.readouterr().out)
        assert rows[0] == sweeps.TRAJECTORY_COLUMNS
        assert len(rows) == 7
        assert all(r[0] == "main" and r[-1] == "false" for r in rows[1:])
        speed = (math.sqrt(2.0) + math.sqrt(6.0)) / 2.0
        assert float(rows[-1][3]) == pytest.approx(1.0 + 0.5 * speed, abs=1e-10)


class TestVerify:
    def test_quick_suite_passes(self, capsys):
        assert cli.main(["verify", "--quick"]) == cli.EXIT_OK
        captured = capsys.readouterr()
        checks, coefficients = captured.out.split("\n\n")
        rows = _rows(checks)
        assert rows[0] == cli.CHECK_COLUMNS
        assert all(r[3] == "true" for r in rows[1:])
        assert rows[0] != _rows(coefficients)[0]
        assert "All" in captured.err

    def test_csv_report_carries_the_coefficient_table(self, tmp_path):
        out = tmp_path / "report.csv"
        assert cli.main(["verify", "--quick", "--out", str(out)]) == cli.EXIT_OK
        checks, coefficients = out.read_text(encoding="utf-8").split("\n\n")
        assert _rows(checks)[0] == cli.CHECK_COLUMNS
        table = _rows(coefficients)
        assert table[0] == sweeps.COEFFICIENT_COLUMNS
        assert [float(r[0]) for r in table[1:]] == pytest.approx(list(VERIFY_DELTAS))
        for row in table[1:]:
            record = dict(zip(table[0], row))
            closed = float(record["closed_form"])
            assert float(record["bohmian"]) == pytest.approx(closed, rel=1e-4)
            assert float(record["oracle"]) == pytest.approx(closed, rel=1e-4)

    def test_flipped_current_fails(self, tmp_path):
        out = tmp_path / "report.json"
        argv = ["verify", "--quick", "--flip-current", "--format", "json", "--out", str(out)]
        assert cli.main(argv) == cli.EXIT_CHECKS_FAILED
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["passed"] is False
        failed = {c["name"] for c in report["checks"] if not c["passed"]}
        assert failed == {"continuity_main", "continuity_auxiliary"}
