"""
Brute-force cross-checks for the analytic paths.

Every quantity here is obtained by discretising the closed-form fields
(finite-difference stencils, least-squares fits, step refinement); nothing
calls the analytic-derivative code of the Bohmian module.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..physics.closed_form import field_arrays, population_profile
from ..physics.core_model import PhysicalConfig, wavenumbers
from ..physics.errors import ConvergenceError, DomainError
from ..physics.models import Waveguide

logger = logging.getLogger(__name__)

FieldEvaluator = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]

DEFAULT_WINDOWS = (1e-2, 1e-3, 1e-4, 1e-5)


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min >= 0:
            raise DomainError(f"grid must start at x >= 0, got {self.x_min!r}")
        if not self.x_max > self.x_min:
            raise DomainError(f"x_max must exceed x_min, got [{self.x_min!r}, {self.x_max!r}]")
        if self.n_points < 16:
            raise DomainError(f"grid needs at least 16 points, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass
class ResidualReport:
    max_abs: float
    location: float
    per_point: List[Tuple[float, float]] = field(default_factory=list)
    stencil_step: float = 0.0
    coarse_grid: bool = False


# ---------- stencils ----------

def _five_point(f: Callable, x: np.ndarray, h: float, order: int):
    if order == 1:
        return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h**2)


def first_derivative(f: Callable, x, h: float, richardson: bool = True):
    """Five-point central first derivative, optionally Richardson-extrapolated over (h, h/2)"""
    x = np.asarray(x, dtype=float)
    coarse = _five_point(f, x, h, 1)
    if not richardson:
        return coarse
    return (16 * _five_point(f, x, h / 2, 1) - coarse) / 15


def second_derivative(f: Callable, x, h: float, richardson: bool = True):
    """Five-point central second derivative, optionally Richardson-extrapolated over (h, h/2)"""
    x = np.asarray(x, dtype=float)
    coarse = _five_point(f, x, h, 2)
    if not richardson:
        return coarse
    return (16 * _five_point(f, x, h / 2, 2) - coarse) / 15


def closed_form_evaluator(config: PhysicalConfig) -> FieldEvaluator:
    """(psi_m, psi_a) on any x, including stencil arms left of the step"""
    k = wavenumbers(config)

    def evaluate(x):
        f = field_arrays(config, x, check_domain=False, k=k)
        return f.psi_m, f.psi_a

    return evaluate


def stencil_step(config: PhysicalConfig, spacing: float, target: float = 0.05) -> Tuple[float, int]:
    """Halve the grid spacing until k_max * h <= target; returns (h, number of halvings)"""
    k_max = wavenumbers(config).k_max
    h, halvings = spacing, 0
    while k_max * h > target:
        h /= 2
        halvings += 1
    return h, halvings


# ---------- stationary equations ----------

def stationary_residual(config: PhysicalConfig, grid: GridSpec,
                        fields: Optional[FieldEvaluator] = None,
                        stencil_target: float = 0.05) -> Dict[Waveguide, ResidualReport]:
    """
    E psi_i - [-(hbar^2/2m) psi_i'' + V0 psi_i + hbar J0 (psi_j - psi_i)] at the
    interior grid points, psi'' from the extrapolated five-point stencil.

    ``fields`` replaces the closed form, which is how the detector is tested
    against a corrupted solution.
    """
    evaluate = fields or closed_form_evaluator(config)
    h, halvings = stencil_step(config, grid.spacing, stencil_target)
    if halvings:
        logger.info(
            "grid spacing %.3g too coarse for the stencil target, using h=%.3g", grid.spacing, h
        )

    x = grid.points()[1:-1]
    psi_m, psi_a = evaluate(x)
    d2_m = second_derivative(lambda s: evaluate(s)[0], x, h)
    d2_a = second_derivative(lambda s: evaluate(s)[1], x, h)

    kinetic = config.hbar**2 / (2.0 * config.mass)
    hJ0 = config.hbar_coupling
    E, V0 = config.energy, config.step_potential

    residuals = {
        Waveguide.MAIN: E * psi_m - (-kinetic * d2_m + V0 * psi_m + hJ0 * (psi_a - psi_m)),
        Waveguide.AUXILIARY: E * psi_a - (-kinetic * d2_a + V0 * psi_a + hJ0 * (psi_m - psi_a)),
    }

    reports = {}
    for waveguide, residual in residuals.items():
        magnitude = np.abs(residual)
        worst = int(np.argmax(magnitude))
        reports[waveguide] = ResidualReport(
            max_abs=float(magnitude[worst]),
            location=float(x[worst]),
            per_point=[(float(a), float(b)) for a, b in zip(x, magnitude)],
            stencil_step=h,
            coarse_grid=halvings > 0,
        )
    return reports


def numeric_mode_wavenumbers(config: PhysicalConfig, x: float = 0.5,
                             h: float = 1e-2) -> Tuple[complex, complex]:
    """k_plus^2 and k_minus^2 read off the sum and difference modes as -psi''/psi"""
    evaluate = closed_form_evaluator(config)

    def mode(sign):
        return lambda s: evaluate(s)[0] + sign * evaluate(s)[1]

    squares = []
    for sign in (1, -1):
        f = mode(sign)
        squares.append(complex(-second_derivative(f, x, h) / f(np.asarray(x, dtype=float))))
    return squares[0], squares[1]


# ---------- local Bohmian quantities by differencing ----------

def numeric_velocity(config: PhysicalConfig, x: float, waveguide: Waveguide,
                     h: float = 1e-3) -> float:
    """(hbar/m) Im(psi* psi')/|psi|^2 with psi' from the stencil"""
    evaluate = closed_form_evaluator(config)
    index = 0 if waveguide is Waveguide.MAIN else 1
    psi = evaluate(np.asarray(x, dtype=float))[index]
    dpsi = first_derivative(lambda s: evaluate(s)[index], x, h)
    return float(config.hbar / config.mass * np.imag(np.conj(psi) * dpsi) / np.abs(psi) ** 2)


def numeric_quantum_potential(config: PhysicalConfig, x: float, waveguide: Waveguide,
                              h: float = 1e-2) -> float:
    """-(hbar^2/2m) R''/R with R'' from the stencil applied to R = |psi|"""
    evaluate = closed_form_evaluator(config)
    index = 0 if waveguide is Waveguide.MAIN else 1

    def amplitude(s):
        return np.abs(evaluate(s)[index])

    R = amplitude(np.asarray(x, dtype=float))
    return float(-(config.hbar**2) / (2.0 * config.mass) * second_derivative(amplitude, x, h) / R)


def numeric_flux_divergence(config: PhysicalConfig, x: float, waveguide: Waveguide,
                            h: float = 1e-2) -> float:
    """d/dx(rho v) by differencing rho v = (hbar/m) Im(psi* psi'), psi' itself differenced"""
    evaluate = closed_form_evaluator(config)
    index = 0 if waveguide is Waveguide.MAIN else 1

    def flux(s):
        s = np.asarray(s, dtype=float)
        psi = evaluate(s)[index]
        dpsi = first_derivative(lambda t: evaluate(t)[index], s, h / 10)
        return config.hbar / config.mass * np.imag(np.conj(psi) * dpsi)

    return float(first_derivative(flux, x, h))


# ---------- small-x population coefficient ----------

def _quadratic_fit(config: PhysicalConfig, window: float, samples: int, normalized: bool) -> float:
    xs = window * (np.arange(1, samples + 1) / samples)
    raw, norm = population_profile(config, xs)
    rho = norm if normalized else raw / abs(config.amplitude) ** 2
    t = xs / window
    design = np.column_stack([t**2, t**3])
    coef, *_ = np.linalg.lstsq(design, rho, rcond=None)
    return float(coef[0] / window**2)


def numeric_quadratic_coefficient(config: PhysicalConfig,
                                  windows: Sequence[float] = DEFAULT_WINDOWS,
                                  samples: int = 64, stability: float = 1e-6,
                                  normalized: bool = True) -> float:
    """
    a in rho_a ~ a x^2 + b x^3, fitted on shrinking windows (0, w] with w in
    units of hbar/sqrt(2 m hbar J0). Returns the value of the smallest window
    that moved by at most ``stability`` (relative) from the previous one.
    """
    if len(windows) < 2:
        raise DomainError("need at least two windows to judge stability")

    scale = config.length_scale
    values = [_quadratic_fit(config, w * scale, samples, normalized) for w in windows]
    logger.debug("quadratic fits at delta=%g: %s", config.delta, values)

    for i in range(len(values) - 1, 0, -1):
        if abs(values[i] - values[i - 1]) <= stability * abs(values[i]):
            return values[i]
    raise ConvergenceError(
        f"quadratic coefficient did not settle at delta={config.delta!r}: {values}"
    )


# ---------- refinement studies ----------

@dataclass
class ConvergenceReport:
    rows: List[Tuple[int, float, float]]
    orders: List[float]
    monotone: bool
    nominal_order: Optional[float] = None

    @property
    def observed_order(self) -> Optional[float]:
        """Order of the finest pair still above round-off"""
        return self.orders[-1] if self.orders else None

    @property
    def flagged(self) -> bool:
        if not self.monotone:
            return True
        if self.nominal_order is None or self.observed_order is None:
            return False
        return self.observed_order < self.nominal_order - 0.5


def convergence_check(evaluate: Callable[[int], float], levels: Sequence[int],
                      nominal_order: Optional[float] = None,
                      ratio: float = 2.0) -> ConvergenceReport:
    """
    Evaluate a quantity at successive refinement levels (step divided by
    ``ratio`` per level) and measure errors against the finest level.
    A non-monotone sequence is flagged in the report, never raised.
    """
    if len(levels) < 3:
        raise DomainError("a convergence study needs at least three levels")

    values = [float(evaluate(level)) for level in levels]
    finest = values[-1]
    errors = [abs(v - finest) for v in values]
    floor = 64 * np.finfo(float).eps * max(abs(finest), 1.0)

    monotone = all(b <= a or b <= floor for a, b in zip(errors[:-1], errors[1:-1]))
    orders = [
        math.log(a / b) / math.log(ratio)
        for a, b in zip(errors[:-2], errors[1:-1])
        if a > floor and b > floor
    ]

    report = ConvergenceReport(
        rows=list(zip(levels, values, errors)),
        orders=orders,
        monotone=monotone,
        nominal_order=nominal_order,
    )
    if report.flagged:
        logger.warning("convergence study flagged: errors=%s orders=%s", errors, orders)
    return report
