"""
Closed-form stationary solution after the potential step (no back-propagating
modes), auxiliary-waveguide populations, the small-x quadratic coefficient of
rho_a and the semi-classical speed built on it.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core_model import PhysicalConfig, WaveNumbers, wavenumbers
from .errors import DegenerateFitError, DomainError, TailUnderflowError
from .models import PopulationSample, WaveField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FieldArrays:
    """psi and its first two x-derivatives in both waveguides on a grid"""
    x: np.ndarray
    psi_m: np.ndarray
    psi_a: np.ndarray
    d1_m: np.ndarray
    d1_a: np.ndarray
    d2_m: np.ndarray
    d2_a: np.ndarray
    # |c0|/2 (|e^{ik+ x}| + |e^{ik- x}|), the scale psi is measured against at nodes
    envelope: np.ndarray


def field_arrays(config: PhysicalConfig, x, *, check_domain: bool = True,
                 k: Optional[WaveNumbers] = None) -> FieldArrays:
    """
    psi_m = c0/2 (e^{ik+ x} + e^{ik- x}), psi_a = c0/2 (e^{ik+ x} - e^{ik- x}).

    Derivatives are exact. ``check_domain=False`` lets the oracle place stencil
    arms slightly left of x = 0, where the same analytic expression holds.
    """
    x = np.asarray(x, dtype=float)
    if check_domain and np.any(x < 0):
        raise DomainError(f"the solution is defined for x >= 0, got min x = {x.min()!r}")
    k = k or wavenumbers(config)
    half_c0 = 0.5 * config.amplitude

    e_plus = np.exp(1j * k.k_plus * x)
    e_minus = np.exp(1j * k.k_minus * x)
    ik_p, ik_m = 1j * k.k_plus, 1j * k.k_minus

    return FieldArrays(
        x=x,
        psi_m=half_c0 * (e_plus + e_minus),
        psi_a=half_c0 * (e_plus - e_minus),
        d1_m=half_c0 * (ik_p * e_plus + ik_m * e_minus),
        d1_a=half_c0 * (ik_p * e_plus - ik_m * e_minus),
        d2_m=half_c0 * (ik_p**2 * e_plus + ik_m**2 * e_minus),
        d2_a=half_c0 * (ik_p**2 * e_plus - ik_m**2 * e_minus),
        envelope=abs(half_c0) * (np.abs(e_plus) + np.abs(e_minus)),
    )


def eval_fields(config: PhysicalConfig, x: float) -> WaveField:
    f = field_arrays(config, x)
    return WaveField(
        x=float(x),
        psi_m=complex(f.psi_m),
        psi_a=complex(f.psi_a),
        dpsi_m_dx=complex(f.d1_m),
        dpsi_a_dx=complex(f.d1_a),
    )


def population_profile(config: PhysicalConfig, x_grid) -> tuple[np.ndarray, np.ndarray]:
    """Raw |psi_a|^2 and same-point normalised rho_a on a grid"""
    f = field_arrays(config, x_grid)
    raw = np.abs(f.psi_a) ** 2
    total = raw + np.abs(f.psi_m) ** 2
    if np.any(total == 0.0):
        where = f.x[np.argmax(total == 0.0)]
        raise TailUnderflowError(
            f"|psi_a|^2 + |psi_m|^2 underflowed to 0 at x={where!r}; shorten the range"
        )
    return raw, raw / total


def population(config: PhysicalConfig, x: float) -> PopulationSample:
    raw, norm = population_profile(config, np.array([x]))
    return PopulationSample(x=float(x), rho_a_raw=float(raw[0]), rho_a_norm=float(norm[0]))


def rho_a_coefficient(config: PhysicalConfig) -> float:
    """
    C in rho_a_norm = C x^2 + O(x^3).

    Plateau m J0 / hbar for |delta| <= hbar J0, otherwise
    2 m J0^2 / (sqrt|delta + hbar J0| + sqrt|delta - hbar J0|)^2.
    """
    delta, hJ0 = config.delta, config.hbar_coupling
    if abs(delta) <= hJ0:
        return config.mass * config.coupling / config.hbar
    root_sum = math.sqrt(abs(delta + hJ0)) + math.sqrt(abs(delta - hJ0))
    return 2.0 * config.mass * config.coupling**2 / root_sum**2


def expansion_variants(config: PhysicalConfig) -> Dict[str, float]:
    """
    The three published forms of the small-x coefficient.

    "regime" is the adopted per-regime form, "unified" the single-line
    expansion (algebraically equal to it) and "main_text" the squared-bracket
    variant, which disagrees with direct expansion of |psi_a|^2.
    """
    delta, hJ0 = config.delta, config.hbar_coupling
    bracket = (
        abs(delta + hJ0)
        - 2.0 * math.sqrt(max(delta**2 - hJ0**2, 0.0))
        + abs(delta - hJ0)
    )
    return {
        "regime": rho_a_coefficient(config),
        "unified": config.mass / (2.0 * config.hbar**2) * bracket,
        "main_text": 2.0 * config.mass / config.hbar**2 * bracket**2,
    }


def semiclassical_speed(config: PhysicalConfig) -> float:
    """v = J0 / sqrt(C), from rho_a = (J0 x / v)^2"""
    return config.coupling / math.sqrt(rho_a_coefficient(config))


def original_model_speed(config: PhysicalConfig) -> float:
    """sqrt(2|delta|/m), the speed law of the single-mode model this one replaces"""
    return math.sqrt(2.0 * abs(config.delta) / config.mass)


def default_fit_window(config: PhysicalConfig, factor: float = 0.05) -> float:
    return factor * config.length_scale


def sample_population(config: PhysicalConfig, window: Optional[float] = None,
                      n: int = 50) -> List[PopulationSample]:
    """n uniform samples of the population on (0, window]"""
    window = default_fit_window(config) if window is None else window
    xs = window * (np.arange(1, n + 1) / n)
    raw, norm = population_profile(config, xs)
    return [PopulationSample(float(x), float(r), float(p)) for x, r, p in zip(xs, raw, norm)]


def fit_speed_from_samples(samples: Sequence[PopulationSample], J0: float,
                           window: float) -> float:
    """Least-squares fit of rho_a_norm = (J0 x / v)^2 on the basis {x^2} over (0, window]"""
    used = [s for s in samples if 0.0 < s.x <= window]
    if len(used) < 3:
        raise DegenerateFitError(
            f"need at least 3 samples in (0, {window!r}], got {len(used)}"
        )

    x = np.array([s.x for s in used])
    rho = np.array([s.rho_a_norm for s in used])
    if not np.any(rho):
        raise DegenerateFitError("all population samples are zero")

    design = (x**2)[:, np.newaxis]
    coef, *_ = np.linalg.lstsq(design, rho, rcond=None)
    curvature = float(coef[0])
    if not curvature > 0:
        raise DegenerateFitError(f"fitted x^2 coefficient is not positive: {curvature!r}")

    logger.debug("speed fit over %d samples: C=%.6e", len(used), curvature)
    return J0 / math.sqrt(curvature)
