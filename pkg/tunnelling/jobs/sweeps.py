"""
Row builders for the plotting sweeps and the table writer shared by all jobs.

Rows that depend on a detuning are computed concurrently and collected in
sweep order, so the emitted file only depends on the request.

The plotting tables are dimensionless: detunings in units of hbar*J0, positions
in units of hbar / sqrt(2 m hbar J0) (both on input and in the ``x`` column)
and velocities in units of sqrt(hbar J0 / m). Trajectories stay in config units.
"""
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Any, Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..physics import bohmian, closed_form
from ..physics.core_model import PhysicalConfig
from ..physics.errors import ConvergenceError, DegenerateFitError, OutputError
from ..physics.models import SimulationSettings, Waveguide
from ..verification import oracle

logger = logging.getLogger(__name__)

Row = List[Any]
Table = Tuple[List[str], List[Row]]

WAVEFIELD_COLUMNS = [
    "x", "re_psi_m", "im_psi_m", "re_psi_a", "im_psi_a",
    "rho_a_raw", "rho_a_norm", "j0", "v_m", "v_a",
]
SPEED_COLUMNS = ["delta_over_hJ0", "v_closed_form", "v_fit_from_samples", "v_original_model"]
VELOCITY_COLUMNS = ["delta_over_hJ0", "x", "v_m", "v_a"]
COEFFICIENT_COLUMNS = [
    "delta_over_hJ0", "regime", "closed_form", "unified", "main_text", "bohmian", "oracle",
]
TRAJECTORY_COLUMNS = ["waveguide", "x0", "t", "x", "truncated"]


def _concurrent(fn: Callable[[float], Any], items: Sequence[float], max_workers: int) -> List[Any]:
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))


def _cell(value: float) -> Optional[float]:
    value = float(value)
    return None if math.isnan(value) else value


def delta_grid(config: PhysicalConfig, start: float, stop: float, n: int) -> np.ndarray:
    """Detunings for a sweep given in units of hbar*J0"""
    return np.linspace(start, stop, n) * config.hbar_coupling


# ---------- builders ----------

def wavefield_table(config: PhysicalConfig, x_grid, settings: SimulationSettings) -> Table:
    grid = np.asarray(x_grid, dtype=float)
    x = grid * config.length_scale
    f = closed_form.field_arrays(config, x)
    raw, norm = closed_form.population_profile(config, x)
    j0 = bohmian.tunnelling_current_profile(config, x)
    v_m = bohmian.velocity_profile(config, x, Waveguide.MAIN, settings.node_threshold)
    v_a = bohmian.velocity_profile(config, x, Waveguide.AUXILIARY, settings.node_threshold)
    v_m, v_a = v_m / config.speed_scale, v_a / config.speed_scale

    rows = [
        [float(grid[i]), float(f.psi_m[i].real), float(f.psi_m[i].imag),
         float(f.psi_a[i].real), float(f.psi_a[i].imag),
         float(raw[i]), float(norm[i]), float(j0[i]), _cell(v_m[i]), _cell(v_a[i])]
        for i in range(x.size)
    ]
    return WAVEFIELD_COLUMNS, rows


def speed_curve_table(config: PhysicalConfig, deltas: Iterable[float],
                      settings: SimulationSettings) -> Table:
    def row(delta: float) -> Row:
        point = config.at_delta(float(delta))
        window = closed_form.default_fit_window(point, settings.fit_window_factor)
        try:
            samples = closed_form.sample_population(point, window, settings.fit_samples)
            fitted = closed_form.fit_speed_from_samples(samples, point.coupling, window)
        except DegenerateFitError as exc:
            logger.warning("no speed fit at delta=%g: %s", delta, exc)
            fitted = None
        scale = point.speed_scale
        return [
            delta / point.hbar_coupling,
            closed_form.semiclassical_speed(point) / scale,
            None if fitted is None else fitted / scale,
            closed_form.original_model_speed(point) / scale,
        ]

    return SPEED_COLUMNS, _concurrent(row, list(deltas), settings.max_workers)


def velocity_curve_table(config: PhysicalConfig, deltas: Iterable[float],
                         positions: Sequence[float], settings: SimulationSettings) -> Table:
    grid = np.asarray(positions, dtype=float)
    x = grid * config.length_scale
    deltas = list(deltas)

    def block(delta: float) -> List[Row]:
        point = config.at_delta(float(delta))
        v_m = bohmian.velocity_profile(point, x, Waveguide.MAIN, settings.node_threshold)
        v_a = bohmian.velocity_profile(point, x, Waveguide.AUXILIARY, settings.node_threshold)
        scale = point.speed_scale
        return [(delta / point.hbar_coupling, float(grid[i]),
                 _cell(v_m[i] / scale), _cell(v_a[i] / scale))
                for i in range(x.size)]

    blocks = _concurrent(block, deltas, settings.max_workers)
    # grouped by position, detuning ascending inside each group
    rows = [list(blocks[d][i]) for i in range(x.size) for d in range(len(deltas))]
    return VELOCITY_COLUMNS, rows


def coefficient_table(config: PhysicalConfig, deltas: Iterable[float],
                      settings: SimulationSettings) -> Table:
    def row(delta: float) -> Row:
        point = config.at_delta(float(delta))
        variants = closed_form.expansion_variants(point)
        try:
            numeric = oracle.numeric_quadratic_coefficient(
                point, settings.oracle_windows, settings.oracle_samples, settings.oracle_stability
            )
        except ConvergenceError as exc:
            logger.warning("%s", exc)
            numeric = None
        return [
            delta / point.hbar_coupling,
            point.regime.value,
            variants["regime"],
            variants["unified"],
            variants["main_text"],
            bohmian.rho_aB_coefficient(point, settings.continuation_epsilon * point.hbar_coupling),
            numeric,
        ]

    return COEFFICIENT_COLUMNS, _concurrent(row, list(deltas), settings.max_workers)


def trajectory_table(config: PhysicalConfig, starts: Sequence[float], waveguide: Waveguide,
                     t_end: float, dt: float, settings: SimulationSettings) -> Table:
    paths = bohmian.integrate_ensemble(config, starts, waveguide, t_end, dt, settings.max_workers)
    rows = [
        [waveguide.value, float(x0), t, x, path.truncated]
        for x0, path in zip(starts, paths)
        for t, x in zip(path.times, path.positions)
    ]
    return TRAJECTORY_COLUMNS, rows


# ---------- writer ----------

def _format_cell(value: Any, digits: int) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else format(value, f".{digits}g")
    return str(value)


@contextmanager
def open_output(path: Optional[str]):
    try:
        stream = sys.stdout if path is None else open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from exc
    try:
        yield stream
    finally:
        if stream is not sys.stdout:
            stream.close()


def _write_csv(stream, columns: List[str], rows: List[Row], digits: int):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_cell(v, digits) for v in row])


def write_table(columns: List[str], rows: List[Row], path: Optional[str] = None,
                fmt: str = "csv", digits: int = 17) -> Optional[str]:
    """
    Emit a table as CSV (fixed significant digits, '\\n' line endings, empty
    cells for undefined values) or JSON (list of records, null for undefined).
    ``path=None`` writes to stdout.
    """
    with open_output(path) as stream:
        if fmt == "json":
            records = [
                {c: (None if isinstance(v, float) and math.isnan(v) else v)
                 for c, v in zip(columns, row)}
                for row in rows
            ]
            json.dump(records, stream, indent=2, ensure_ascii=False)
            stream.write("\n")
        else:
            _write_csv(stream, columns, rows, digits)

    logger.info("wrote %d rows to %s", len(rows), path or "stdout")
    return path


def write_sections(tables: Sequence[Table], path: Optional[str] = None,
                   digits: int = 17) -> Optional[str]:
    """Several CSV tables in one file, each with its own header, separated by a blank line"""
    with open_output(path) as stream:
        for i, (columns, rows) in enumerate(tables):
            if i:
                stream.write("\n")
            _write_csv(stream, columns, rows, digits)

    logger.info("wrote %d sections to %s", len(tables), path or "stdout")
    return path
