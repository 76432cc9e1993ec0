"""
Invariant suite behind the ``verify`` job.

Each check evaluates one property of the model over a fixed sweep and reports
the worst residual against its tolerance. The suite is deterministic: sweeps
are fixed grids and the only noise is drawn from a seeded generator.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ..physics import bohmian, closed_form
from ..physics.core_model import PhysicalConfig, Regime, wavenumbers
from ..physics.errors import ConvergenceError
from ..physics.models import PopulationSample, SimulationSettings, Waveguide
from . import oracle

logger = logging.getLogger(__name__)

NOISE_SEED = 20240501


@dataclass
class CheckResult:
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass
class CoefficientRow:
    """Small-x population coefficient at one detuning, every route side by side"""
    delta_over_hJ0: float
    regime: str
    closed_form: float
    unified: float
    main_text: float
    bohmian: float
    oracle: float

    @property
    def spread(self) -> float:
        values = (self.closed_form, self.bohmian, self.oracle)
        return (max(values) - min(values)) / max(abs(v) for v in values)


@dataclass
class VerificationReport:
    checks: List[CheckResult] = field(default_factory=list)
    coefficients: List[CoefficientRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
            "coefficients": [asdict(r) for r in self.coefficients],
        }


def _result(name: str, residual: float, tolerance: float, detail: str = "") -> CheckResult:
    residual = float(residual)
    # NaN compares False and therefore fails
    return CheckResult(name, residual, tolerance, bool(residual <= tolerance), detail)


def _nanmax(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0 or np.all(np.isnan(values)):
        return float("nan")
    return float(np.nanmax(values))


def _sweep_configs(settings: SimulationSettings) -> List[PhysicalConfig]:
    deltas = np.linspace(-10.0, 10.0, settings.residual_configs)
    return [PhysicalConfig.from_delta(float(d)) for d in deltas]


def _regime_configs(settings: SimulationSettings, regime: Regime) -> List[PhysicalConfig]:
    configs = [PhysicalConfig.from_delta(d) for d in settings.verify_deltas]
    return [c for c in configs if c.regime is regime]


def _well_conditioned(config: PhysicalConfig, x: np.ndarray, waveguide: Waveguide,
                      floor: float) -> np.ndarray:
    f = closed_form.field_arrays(config, x)
    psi = f.psi_m if waveguide is Waveguide.MAIN else f.psi_a
    return np.abs(psi) >= floor * f.envelope


# ---------- Schrodinger side ----------

def check_stationary_residual(settings: SimulationSettings) -> CheckResult:
    grid = oracle.GridSpec(0.0, settings.residual_x_max, settings.residual_points)
    worst, coarse = 0.0, 0
    for config in _sweep_configs(settings):
        reports = oracle.stationary_residual(config, grid, stencil_target=settings.stencil_target)
        worst = max(worst, *(r.max_abs for r in reports.values()))
        coarse += any(r.coarse_grid for r in reports.values())
    return _result("stationary_residual", worst, 1e-8,
                   f"{coarse} of {settings.residual_configs} configs needed a finer stencil step")


def check_mode_wavenumbers(settings: SimulationSettings) -> CheckResult:
    worst = 0.0
    for delta in settings.verify_deltas:
        config = PhysicalConfig.from_delta(delta)
        k = wavenumbers(config)
        numeric = oracle.numeric_mode_wavenumbers(config)
        for analytic, measured in zip((k.k_plus**2, k.k_minus**2), numeric):
            worst = max(worst, abs(analytic - measured) / max(abs(analytic), 1.0))
    return _result("mode_wavenumbers", worst, 1e-8)


def check_plateau(settings: SimulationSettings) -> CheckResult:
    reference = PhysicalConfig()
    deltas = np.linspace(-reference.hbar_coupling, reference.hbar_coupling, 102)[1:-1]
    speeds = [closed_form.semiclassical_speed(PhysicalConfig.from_delta(float(d))) for d in deltas]
    worst = max(abs(v / reference.speed_scale - 1.0) for v in speeds)
    return _result("plateau", worst, 1e-12)


def check_asymptotic_speed(settings: SimulationSettings) -> CheckResult:
    config = PhysicalConfig.from_delta(1e4)
    ratio = closed_form.semiclassical_speed(config) / closed_form.original_model_speed(config)
    return _result("asymptotic_speed", abs(ratio - 1.0), 2e-4)


def check_unified_expansion(settings: SimulationSettings) -> CheckResult:
    worst = 0.0
    for delta in settings.verify_deltas:
        variants = closed_form.expansion_variants(PhysicalConfig.from_delta(delta))
        worst = max(worst, abs(variants["unified"] / variants["regime"] - 1.0))
    return _result("unified_expansion", worst, 1e-10)


def _synthetic_samples(config: PhysicalConfig, settings: SimulationSettings,
                       noise: float) -> tuple:
    window = closed_form.default_fit_window(config, settings.fit_window_factor)
    xs = window * (np.arange(1, settings.fit_samples + 1) / settings.fit_samples)
    rho = closed_form.rho_a_coefficient(config) * xs**2
    if noise:
        rho = rho + np.random.default_rng(NOISE_SEED).normal(0.0, noise, xs.size)
    samples = [PopulationSample(float(x), float(r), float(r)) for x, r in zip(xs, rho)]
    return samples, window


def check_fit_recovery(settings: SimulationSettings) -> List[CheckResult]:
    config = PhysicalConfig.from_delta(0.0)
    expected = closed_form.semiclassical_speed(config)
    results = []
    for name, noise, tolerance in (("fit_recovery_noiseless", 0.0, 1e-6),
                                   ("fit_recovery_noisy", 1e-6, 1e-3)):
        samples, window = _synthetic_samples(config, settings, noise)
        v = closed_form.fit_speed_from_samples(samples, config.coupling, window)
        results.append(_result(name, abs(v / expected - 1.0), tolerance))
    return results


# ---------- Bohmian side ----------

def check_continuity(settings: SimulationSettings, j0_sign: float = 1.0) -> List[CheckResult]:
    x = np.linspace(0.0, settings.residual_x_max, settings.continuity_points)
    results = []
    for waveguide in Waveguide:
        worst = max(
            float(np.max(np.abs(bohmian.continuity_profile(c, x, waveguide, current_sign=j0_sign))))
            for c in _sweep_configs(settings)
        )
        results.append(_result(f"continuity_{waveguide.value}", worst, 1e-9))
    return results


def check_current_reality(settings: SimulationSettings) -> CheckResult:
    x = np.linspace(0.0, settings.residual_x_max, settings.continuity_points)
    worst = 0.0
    for config in _sweep_configs(settings):
        j = bohmian.tunnelling_current_complex(config, x)
        flowing = j.real != 0.0
        if flowing.any():
            worst = max(worst, float(np.max(np.abs(j.imag[flowing]) / np.abs(j.real[flowing]))))
    return _result("tunnelling_current_reality", worst, 1e-14)


def check_energy_budget(settings: SimulationSettings) -> List[CheckResult]:
    x = np.linspace(0.0, settings.residual_x_max, settings.continuity_points)
    results = []
    for waveguide in Waveguide:
        worst = 0.0
        for config in _sweep_configs(settings):
            scale = max(abs(config.energy), config.hbar_coupling)
            residual = bohmian.hj_residual_profile(config, x, waveguide, settings.node_threshold)
            keep = _well_conditioned(config, x, waveguide, settings.conditioning_floor)
            worst = max(worst, _nanmax(np.abs(residual[keep]) / scale))
        results.append(_result(f"hj_budget_{waveguide.value}", worst, 1e-8))
    return results


def check_zero_velocity(settings: SimulationSettings) -> CheckResult:
    x = np.linspace(0.0, settings.residual_x_max, settings.continuity_points)
    worst = 0.0
    for config in _regime_configs(settings, Regime.TWO_EVANESCENT):
        for waveguide in Waveguide:
            v = bohmian.velocity_profile(config, x, waveguide, settings.node_threshold)
            worst = max(worst, _nanmax(np.abs(v)))
    return _result("zero_velocity", worst, 1e-12)


def check_velocity_equality(settings: SimulationSettings) -> CheckResult:
    x = np.linspace(0.0, settings.residual_x_max, settings.continuity_points)
    worst = 0.0
    for config in _regime_configs(settings, Regime.TWO_TRANSMISSION):
        k = wavenumbers(config)
        group = config.hbar * (k.k_plus + k.k_minus).real / (2.0 * config.mass)
        keep = (_well_conditioned(config, x, Waveguide.MAIN, settings.conditioning_floor)
                & _well_conditioned(config, x, Waveguide.AUXILIARY, settings.conditioning_floor))
        v_m = bohmian.velocity_profile(config, x[keep], Waveguide.MAIN)
        v_a = bohmian.velocity_profile(config, x[keep], Waveguide.AUXILIARY)
        worst = max(worst, _nanmax(np.abs(v_m - v_a)), _nanmax(np.abs(v_m - group)))
    return _result("velocity_equality", worst, 1e-12)


def check_coefficient_equivalence(settings: SimulationSettings,
                                  rows: List[CoefficientRow]) -> List[CheckResult]:
    triple = max(r.spread for r in rows)
    direct = max(abs(r.bohmian - r.closed_form) / r.closed_form for r in rows)
    return [
        _result("coefficient_equivalence", triple, 1e-4),
        _result("bohmian_matches_closed_form", direct, 1e-6),
    ]


def check_continuation(settings: SimulationSettings) -> CheckResult:
    config = PhysicalConfig.from_delta(-5.0)
    points, monotone = bohmian.continuation_sweep(config, settings.epsilon_sweep)
    final = points[-1].error
    result = _result("continuation_convergence", final, 1e-4,
                     "" if monotone else "error does not decrease monotonically")
    result.passed = result.passed and monotone
    return result


def check_population_reconstruction(settings: SimulationSettings) -> CheckResult:
    """Extended property: rho_a rebuilt from the auxiliary continuity equation alone"""
    x = np.linspace(0.0, settings.residual_x_max, settings.reconstruction_points)
    worst = 0.0
    for config in _regime_configs(settings, Regime.TWO_TRANSMISSION):
        rebuilt = bohmian.reconstruct_population(config, x, settings.node_threshold)
        raw, _ = closed_form.population_profile(config, x)
        worst = max(worst, _nanmax(np.abs(rebuilt - raw)) / abs(config.amplitude) ** 2)
    return _result("population_reconstruction", worst, 1e-5)


# ---------- trajectories ----------

def check_trajectories(settings: SimulationSettings) -> List[CheckResult]:
    moving = PhysicalConfig.from_delta(2.0)
    k = wavenumbers(moving)
    group = moving.hbar * (k.k_plus + k.k_minus).real / (2.0 * moving.mass)
    path = bohmian.integrate_trajectory(moving, 1.0, Waveguide.MAIN, 0.5, 0.01)
    drift = max(abs(x - (1.0 + group * t)) for t, x in zip(path.times, path.positions))

    resting = PhysicalConfig.from_delta(-2.0)
    still = bohmian.integrate_trajectory(resting, 1.0, Waveguide.MAIN, 1.0, 0.1)
    displacement = max(abs(x - 1.0) for x in still.positions)

    mixed = PhysicalConfig.from_delta(0.0)
    study = oracle.convergence_check(
        lambda level: bohmian.integrate_trajectory(
            mixed, 0.5, Waveguide.MAIN, 1.0, 0.1 / 2**level
        ).final_position,
        levels=range(5),
        nominal_order=4.0,
    )

    return [
        _result("trajectory_constant_velocity", drift, 1e-10),
        _result("trajectory_at_rest", displacement, 1e-12),
        _order_result("trajectory_order", study),
    ]


def check_stencil_order(settings: SimulationSettings) -> CheckResult:
    evaluate = oracle.closed_form_evaluator(PhysicalConfig.from_delta(2.0))
    study = oracle.convergence_check(
        lambda level: oracle.second_derivative(
            lambda s: evaluate(s)[0].real, 1.0, 0.2 / 2**level, richardson=False
        ),
        levels=range(5),
        nominal_order=4.0,
    )
    return _order_result("stencil_order", study)


def _order_result(name: str, study: oracle.ConvergenceReport) -> CheckResult:
    observed = study.observed_order
    if observed is None:
        return CheckResult(name, math.nan, 0.5, False, "no refinement pair above round-off")
    # shortfall below the nominal order
    result = _result(name, max(0.0, study.nominal_order - observed), 0.5,
                     f"observed order {observed:.3f}")
    result.passed = result.passed and study.monotone
    return result


# ---------- driver ----------

def _oracle_coefficient(config: PhysicalConfig, settings: SimulationSettings) -> float:
    try:
        return oracle.numeric_quadratic_coefficient(
            config, settings.oracle_windows, settings.oracle_samples, settings.oracle_stability
        )
    except ConvergenceError as exc:
        logger.warning("%s", exc)
        return math.nan


def coefficient_table(settings: SimulationSettings) -> List[CoefficientRow]:
    rows = []
    for delta in settings.verify_deltas:
        config = PhysicalConfig.from_delta(delta)
        variants = closed_form.expansion_variants(config)
        rows.append(CoefficientRow(
            delta_over_hJ0=delta / config.hbar_coupling,
            regime=config.regime.value,
            closed_form=variants["regime"],
            unified=variants["unified"],
            main_text=variants["main_text"],
            bohmian=bohmian.rho_aB_coefficient(
                config, settings.continuation_epsilon * config.hbar_coupling
            ),
            oracle=_oracle_coefficient(config, settings),
        ))
    return rows


def run_checks(settings: Optional[SimulationSettings] = None, j0_sign: float = 1.0,
               progress: Optional[Callable[[CheckResult], None]] = None) -> VerificationReport:
    """
    Run the whole invariant suite. ``j0_sign=-1`` flips the tunnelling current in
    the continuity checks, which must then fail.
    """
    settings = settings or SimulationSettings()
    report = VerificationReport(coefficients=coefficient_table(settings))

    steps = [
        lambda: check_stationary_residual(settings),
        lambda: check_mode_wavenumbers(settings),
        lambda: check_continuity(settings, j0_sign),
        lambda: check_current_reality(settings),
        lambda: check_energy_budget(settings),
        lambda: check_zero_velocity(settings),
        lambda: check_velocity_equality(settings),
        lambda: check_coefficient_equivalence(settings, report.coefficients),
        lambda: check_unified_expansion(settings),
        lambda: check_plateau(settings),
        lambda: check_asymptotic_speed(settings),
        lambda: check_continuation(settings),
        lambda: check_fit_recovery(settings),
        lambda: check_population_reconstruction(settings),
        lambda: check_trajectories(settings),
        lambda: check_stencil_order(settings),
    ]
    for step in steps:
        produced = step()
        for result in produced if isinstance(produced, list) else [produced]:
            logger.info("%s: %.3e (tolerance %.1e) %s", result.name, result.max_residual,
                        result.tolerance, "ok" if result.passed else "FAILED")
            report.checks.append(result)
            if progress:
                progress(result)

    if report.passed:
        logger.info("all %d checks passed", len(report.checks))
    else:
        logger.warning("%d of %d checks failed", len(report.failed), len(report.checks))
    return report
