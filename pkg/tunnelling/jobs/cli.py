import argparse
import json
import logging
import sys
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from ..physics.errors import TunnellingError
from ..physics.models import SimulationSettings
from ..verification.checks import CheckResult, VerificationReport, run_checks
from ..verification.fixtures import DEFAULT_FIXTURES_PATH, FixtureStore
from . import sweeps
from .settings import Mode, SweepRequest, parse_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_ERROR = 2

CHECK_COLUMNS = ["name", "max_residual", "tolerance", "passed", "detail"]


def _status(message: str):
    """Human-facing progress line; data goes to stdout or --out"""
    print(message, file=sys.stderr)


def _write(request: SweepRequest, table: sweeps.Table, settings: SimulationSettings):
    columns, rows = table
    sweeps.write_table(columns, rows, request.output_path, request.format.value,
                       settings.csv_digits)
    if request.output_path:
        _status(f"💾 {len(rows)} rows saved to {request.output_path}")


def run_wavefield(request: SweepRequest, settings: Optional[SimulationSettings] = None):
    settings = settings or SimulationSettings()
    config = request.config
    _status(f"🌊 Wavefield at delta={config.delta:g} ({config.regime.value})")
    x = np.linspace(request.start, request.stop, request.n)
    _write(request, sweeps.wavefield_table(config, x, settings), settings)


def run_speed_curve(request: SweepRequest, settings: Optional[SimulationSettings] = None):
    settings = settings or SimulationSettings()
    deltas = sweeps.delta_grid(request.config, request.start, request.stop, request.n)
    _status(f"📈 Speed curve over {request.n} detunings")
    _write(request, sweeps.speed_curve_table(request.config, deltas, settings), settings)


def run_velocity_curve(request: SweepRequest, settings: Optional[SimulationSettings] = None):
    settings = settings or SimulationSettings()
    deltas = sweeps.delta_grid(request.config, request.start, request.stop, request.n)
    _status(f"📈 Bohmian velocities at x={request.fixed_positions}")
    table = sweeps.velocity_curve_table(request.config, deltas, request.fixed_positions, settings)
    _write(request, table, settings)


def run_coefficients(request: SweepRequest, settings: Optional[SimulationSettings] = None):
    settings = settings or SimulationSettings()
    deltas = sweeps.delta_grid(request.config, request.start, request.stop, request.n)
    _status(f"🧮 Population coefficients over {request.n} detunings")
    _write(request, sweeps.coefficient_table(request.config, deltas, settings), settings)


def run_trajectory(request: SweepRequest, settings: Optional[SimulationSettings] = None):
    settings = settings or SimulationSettings()
    starts = request.fixed_positions or list(np.linspace(request.start, request.stop, request.n))
    _status(f"🧭 {len(starts)} trajectories in the {request.waveguide.value} waveguide")
    table = sweeps.trajectory_table(request.config, [float(s) for s in starts],
                                    request.waveguide, request.t_end, request.dt, settings)
    _write(request, table, settings)


def print_summary(report: VerificationReport):
    _status("\n📊 Verification summary")
    _status("=" * 60)
    for check in report.checks:
        mark = "✅" if check.passed else "❌"
        line = f"{mark} {check.name:<32} {check.max_residual:10.3e}  (tol {check.tolerance:.0e})"
        _status(f"{line}  {check.detail}" if check.detail else line)

    _status("\n  delta/hJ0   closed form       bohmian        oracle")
    for row in report.coefficients:
        _status(f"  {row.delta_over_hJ0:9.3f}  {row.closed_form:.10f}  "
                f"{row.bohmian:.10f}  {row.oracle:.10f}")


def run_verify(request: SweepRequest, settings: Optional[SimulationSettings] = None,
               j0_sign: float = 1.0) -> int:
    """Run the invariant suite, write the report, return the exit status"""
    settings = settings or SimulationSettings()
    _status("🔬 Running verification suite")

    def progress(result: CheckResult):
        logger.debug("%s done", result.name)

    report = run_checks(settings, j0_sign=j0_sign, progress=progress)
    payload = report.to_dict()

    if request.format.value == "json":
        with sweeps.open_output(request.output_path) as stream:
            json.dump(payload, stream, indent=2, ensure_ascii=False)
            stream.write("\n")
    else:
        # checks first, then the coefficient table
        sweeps.write_sections(
            [(CHECK_COLUMNS, [[getattr(c, col) for col in CHECK_COLUMNS] for c in report.checks]),
             (sweeps.COEFFICIENT_COLUMNS,
              [[getattr(r, col) for col in sweeps.COEFFICIENT_COLUMNS]
               for r in report.coefficients])],
            request.output_path,
            settings.csv_digits,
        )

    print_summary(report)
    if report.passed:
        _status(f"\n✅ All {len(report.checks)} checks passed")
        return EXIT_OK
    _status(f"\n❌ {len(report.failed)} of {len(report.checks)} checks failed")
    return EXIT_CHECKS_FAILED


def run_fixtures(request: SweepRequest, settings: Optional[SimulationSettings] = None) -> int:
    """Regenerate the oracle reference file and confirm the analytic paths reproduce it"""
    store = FixtureStore(request.output_path or DEFAULT_FIXTURES_PATH, settings)
    _status("🧪 Generating oracle fixtures")
    store.save()

    stats = store.get_stats()
    _status(f"💾 {stats['total_records']} records saved to {store.path}")
    for quantity, count in stats["quantities"].items():
        _status(f"  {quantity:<30} {count}")
    if stats["failing"]:
        _status(f"❌ analytic paths miss {len(stats['failing'])} records: "
                f"{', '.join(sorted(set(stats['failing'])))}")
        return EXIT_CHECKS_FAILED
    _status(f"✅ analytic paths reproduce all {stats['reproduced']} records")
    return EXIT_OK


RUNNERS = {
    Mode.WAVEFIELD: run_wavefield,
    Mode.SPEED_CURVE: run_speed_curve,
    Mode.VELOCITY_CURVE: run_velocity_curve,
    Mode.COEFFICIENTS: run_coefficients,
    Mode.TRAJECTORY: run_trajectory,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tunnelling",
        description="Photon tunnelling between two coupled waveguides: sweeps and verification",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings only")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--delta", type=float, help="detuning E - V0 + hbar*J0 (overrides energy)")
    common.add_argument("--energy", type=float)
    common.add_argument("--coupling", type=float, help="coupling rate J0")
    common.add_argument("--mass", type=float, help="effective photon mass m")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"])

    x_range = argparse.ArgumentParser(add_help=False)
    x_range.add_argument("--x-min", dest="x_min", type=float)
    x_range.add_argument("--x-max", dest="x_max", type=float)
    x_range.add_argument("--points", type=int)

    delta_range = argparse.ArgumentParser(add_help=False)
    delta_range.add_argument("--delta-min", dest="delta_min", type=float,
                             help="sweep start in units of hbar*J0")
    delta_range.add_argument("--delta-max", dest="delta_max", type=float,
                             help="sweep stop in units of hbar*J0")
    delta_range.add_argument("--points", type=int)

    positions = argparse.ArgumentParser(add_help=False)
    positions.add_argument("--positions", help="comma separated positions")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("wavefield", parents=[common, x_range],
                   help="psi, populations, j0, velocities along x")
    sub.add_parser("speed-curve", parents=[common, delta_range],
                   help="semi-classical speed vs detuning")
    sub.add_parser("velocity-curve", parents=[common, delta_range, positions],
                   help="Bohmian velocities vs detuning at fixed positions")
    sub.add_parser("coefficients", parents=[common, delta_range],
                   help="small-x population coefficient, all routes")
    verify = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    verify.add_argument("--quick", action="store_true", help="10-config residual sweep")
    verify.add_argument("--flip-current", action="store_true",
                        help="negate j0 in the continuity checks (they must fail)")
    trajectory = sub.add_parser("trajectory", parents=[common, x_range, positions],
                                help="Bohmian trajectories from a set of start positions")
    trajectory.add_argument("--t-end", dest="t_end", type=float)
    trajectory.add_argument("--dt", type=float)
    trajectory.add_argument("--waveguide", choices=["main", "auxiliary"])
    fixtures = sub.add_parser("fixtures", help="regenerate the oracle reference file")
    fixtures.add_argument("--out", help=f"fixtures file (default: {DEFAULT_FIXTURES_PATH})")
    return parser


def _flags(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "verbose", "quiet", "quick", "flip_current"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    mode = Mode(args.command.replace("-", "_"))
    try:
        _, request = parse_config(mode, getattr(args, "config", None), _flags(args))
        settings = SimulationSettings()
        if mode is Mode.VERIFY:
            if args.quick:
                settings.residual_configs = 10
            return run_verify(request, settings, j0_sign=-1.0 if args.flip_current else 1.0)
        if mode is Mode.FIXTURES:
            return run_fixtures(request, settings)
        RUNNERS[mode](request, settings)
    except (TunnellingError, ValidationError, ValueError, OSError) as exc:
        _status(f"❌ {exc}")
        return EXIT_ERROR

    _status("✅ Done")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
