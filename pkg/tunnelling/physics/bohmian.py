"""
Bohmian side of the coupled-waveguide model.

Everything here is built on the closed-form fields and their exact
derivatives: the Madelung split psi = R e^{iS}, guiding-equation velocities,
the terms of the Hamilton-Jacobi balance, the modified continuity equations
with their inter-waveguide tunnelling current j0, the small-x Bohmian
population coefficient (with the delta + i*eps continuation below the gap)
and trajectory integration. Numeric differentiation lives in the oracle only.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .closed_form import FieldArrays, field_arrays, rho_a_coefficient
from .core_model import PhysicalConfig, wavenumbers
from .errors import DomainError, NodeError, NumericalConsistencyError, TailUnderflowError
from .models import (
    DEFAULT_EPSILON,
    EPSILON_SWEEP,
    NODE_THRESHOLD,
    EnergyBudget,
    PolarField,
    Trajectory,
    Waveguide,
)

logger = logging.getLogger(__name__)

# |Im j0| allowed relative to max(|j0|, J0 |c0|^2)
J0_REALITY_TOLERANCE = 1e-14
# relative errors below this are indistinguishable from round-off
ROUNDOFF_FLOOR = 64 * np.finfo(float).eps


def _pick(f: FieldArrays, waveguide: Waveguide):
    """(psi, psi', psi'', partner psi) for one waveguide"""
    if waveguide is Waveguide.MAIN:
        return f.psi_m, f.d1_m, f.d2_m, f.psi_a
    return f.psi_a, f.d1_a, f.d2_a, f.psi_m


def _node_mask(config: PhysicalConfig, psi: np.ndarray, node_threshold: float) -> np.ndarray:
    """R at or below node_threshold times |c0|"""
    return np.abs(psi) <= node_threshold * abs(config.amplitude)


def _refuse_node(config: PhysicalConfig, x, psi, waveguide, node_threshold):
    if _node_mask(config, psi, node_threshold).any():
        raise NodeError(f"{waveguide.value} waveguide has a node at x={x!r}", x=x)


# ---------- Madelung decomposition ----------

def _continuous_phase(x: np.ndarray, psi: np.ndarray, node: np.ndarray) -> np.ndarray:
    """Unwrapped arg(psi); node samples are interpolated from their neighbours"""
    phase = np.zeros_like(x)
    good = ~node
    if not good.any():
        return phase

    unwrapped = np.unwrap(np.angle(psi[good]))
    # pin the first regular sample to (-pi, pi]
    first = unwrapped[0]
    unwrapped = unwrapped + (np.pi - np.mod(np.pi - first, 2.0 * np.pi)) - first
    phase[good] = unwrapped
    if node.any():
        phase[node] = np.interp(x[node], x[good], unwrapped)
    return phase


def polar_decompose(config: PhysicalConfig, x_grid: Sequence[float],
                    node_threshold: float = NODE_THRESHOLD) -> List[PolarField]:
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DomainError("polar decomposition needs a 1-D grid with at least 2 points")
    if np.any(np.diff(x) < 0):
        raise DomainError("x grid must be sorted ascending")

    f = field_arrays(config, x)
    node_m = _node_mask(config, f.psi_m, node_threshold)
    node_a = _node_mask(config, f.psi_a, node_threshold)
    S_m = _continuous_phase(x, f.psi_m, node_m)
    S_a = _continuous_phase(x, f.psi_a, node_a)
    R_m, R_a = np.abs(f.psi_m), np.abs(f.psi_a)

    return [
        PolarField(x=float(x[i]), R_m=float(R_m[i]), S_m=float(S_m[i]),
                   R_a=float(R_a[i]), S_a=float(S_a[i]),
                   node_m=bool(node_m[i]), node_a=bool(node_a[i]))
        for i in range(x.size)
    ]


# ---------- local fields, vectorised ----------

def velocity_profile(config: PhysicalConfig, x_grid, waveguide: Waveguide,
                     node_threshold: float = NODE_THRESHOLD) -> np.ndarray:
    """(hbar/m) Im(psi* psi') / |psi|^2 on a grid, NaN at nodes"""
    f = field_arrays(config, x_grid)
    psi, d1, _, _ = _pick(f, waveguide)
    node = _node_mask(config, psi, node_threshold)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = config.hbar / config.mass * np.imag(np.conj(psi) * d1) / np.abs(psi) ** 2
    return np.where(node, np.nan, v)


def _quantum_potential(config: PhysicalConfig, psi, d1, d2):
    R2 = np.abs(psi) ** 2
    dR2 = 2.0 * np.real(np.conj(psi) * d1)
    d2R2 = 2.0 * (np.abs(d1) ** 2 + np.real(np.conj(psi) * d2))
    R = np.sqrt(R2)
    d2R = (2.0 * R2 * d2R2 - dR2**2) / (4.0 * R**3)
    return -(config.hbar**2) / (2.0 * config.mass) * d2R / R


def _coupling_energy(config: PhysicalConfig, psi_i, psi_j):
    # R_j/R_i cos(S_j - S_i) = Re(psi_j conj(psi_i)) / |psi_i|^2
    ratio = np.real(psi_j * np.conj(psi_i)) / np.abs(psi_i) ** 2
    return config.hbar_coupling * (ratio - 1.0)


def _budget_arrays(config: PhysicalConfig, f: FieldArrays, waveguide: Waveguide):
    psi, d1, d2, partner = _pick(f, waveguide)
    phase_gradient = np.imag(np.conj(psi) * d1) / np.abs(psi) ** 2
    kinetic = (config.hbar * phase_gradient) ** 2 / (2.0 * config.mass)
    return (
        kinetic,
        _quantum_potential(config, psi, d1, d2),
        np.full_like(kinetic, config.step_potential),
        _coupling_energy(config, psi, partner),
    )


def hj_residual_profile(config: PhysicalConfig, x_grid, waveguide: Waveguide,
                        node_threshold: float = NODE_THRESHOLD) -> np.ndarray:
    """E - (kinetic + Q + V0 + coupling) on a grid, NaN at nodes"""
    f = field_arrays(config, x_grid)
    psi = _pick(f, waveguide)[0]
    node = _node_mask(config, psi, node_threshold)
    with np.errstate(divide="ignore", invalid="ignore"):
        total = sum(_budget_arrays(config, f, waveguide))
    return np.where(node, np.nan, config.energy - total)


def tunnelling_current_complex(config: PhysicalConfig, x_grid) -> np.ndarray:
    """j0 = -i J0 (psi_a psi_m* - psi_a* psi_m) before the imaginary part is dropped"""
    f = field_arrays(config, x_grid)
    return -1j * config.coupling * (f.psi_a * np.conj(f.psi_m) - np.conj(f.psi_a) * f.psi_m)


def tunnelling_current_profile(config: PhysicalConfig, x_grid) -> np.ndarray:
    """Real tunnelling current on a grid; a non-negligible imaginary part is an error"""
    j = tunnelling_current_complex(config, x_grid)
    scale = np.maximum(np.abs(j.real), config.coupling * abs(config.amplitude) ** 2)
    if np.any(np.abs(j.imag) > J0_REALITY_TOLERANCE * scale):
        raise NumericalConsistencyError(
            f"tunnelling current has an imaginary part up to {np.abs(j.imag).max():.3e}"
        )
    return j.real


def continuity_profile(config: PhysicalConfig, x_grid, waveguide: Waveguide,
                       current_sign: float = 1.0) -> np.ndarray:
    """
    d/dx(R^2 v) -+ j0 for the main (-) and auxiliary (+) waveguide.

    d/dx(R^2 v) = (hbar/m) Im(psi* psi'') exactly, which has no node
    singularity. ``current_sign`` flips j0 and exists to prove the check can fail.
    """
    f = field_arrays(config, x_grid)
    psi, _, d2, _ = _pick(f, waveguide)
    flux_divergence = config.hbar / config.mass * np.imag(np.conj(psi) * d2)
    j0 = current_sign * tunnelling_current_profile(config, x_grid)
    if waveguide is Waveguide.MAIN:
        return flux_divergence - j0
    return flux_divergence + j0


def probability_flux_profile(config: PhysicalConfig, x_grid) -> np.ndarray:
    """rho_m v_m + rho_a v_a, constant along x"""
    f = field_arrays(config, x_grid)
    return config.hbar / config.mass * (
        np.imag(np.conj(f.psi_m) * f.d1_m) + np.imag(np.conj(f.psi_a) * f.d1_a)
    )


# ---------- point operations ----------

def bohm_velocity(config: PhysicalConfig, x: float, waveguide: Waveguide,
                  node_threshold: float = NODE_THRESHOLD) -> float:
    f = field_arrays(config, x)
    psi, d1, _, _ = _pick(f, waveguide)
    _refuse_node(config, x, psi, waveguide, node_threshold)
    return float(config.hbar / config.mass * np.imag(np.conj(psi) * d1) / np.abs(psi) ** 2)


def quantum_potential(config: PhysicalConfig, x: float, waveguide: Waveguide,
                      node_threshold: float = NODE_THRESHOLD) -> float:
    f = field_arrays(config, x)
    psi, d1, d2, _ = _pick(f, waveguide)
    _refuse_node(config, x, psi, waveguide, node_threshold)
    return float(_quantum_potential(config, psi, d1, d2))


def coupling_energy(config: PhysicalConfig, x: float, waveguide: Waveguide,
                    node_threshold: float = NODE_THRESHOLD) -> float:
    f = field_arrays(config, x)
    psi, _, _, partner = _pick(f, waveguide)
    _refuse_node(config, x, psi, waveguide, node_threshold)
    return float(_coupling_energy(config, psi, partner))


def energy_budget(config: PhysicalConfig, x: float, waveguide: Waveguide,
                  node_threshold: float = NODE_THRESHOLD) -> EnergyBudget:
    f = field_arrays(config, x)
    _refuse_node(config, x, _pick(f, waveguide)[0], waveguide, node_threshold)
    kinetic, potential, external, coupling = _budget_arrays(config, f, waveguide)
    return EnergyBudget(
        kinetic=float(kinetic),
        quantum_potential=float(potential),
        external=float(external),
        coupling=float(coupling),
    )


def hj_residual(config: PhysicalConfig, x: float, waveguide: Waveguide,
                node_threshold: float = NODE_THRESHOLD) -> float:
    """E minus the Hamilton-Jacobi total; -hbar dS/dt = E for the e^{-iEt/hbar} state"""
    return config.energy - energy_budget(config, x, waveguide, node_threshold).total


def tunnelling_current(config: PhysicalConfig, x: float) -> float:
    return float(tunnelling_current_profile(config, x))


def continuity_residual(config: PhysicalConfig, x: float, waveguide: Waveguide) -> float:
    return float(continuity_profile(config, x, waveguide))


# ---------- Bohmian population coefficient ----------

def rho_aB_coefficient(config: PhysicalConfig, epsilon: Optional[float] = None) -> float:
    """
    Small-x coefficient of rho_a obtained by integrating the reduced continuity
    equation with the Bohmian velocity:

        C_B = (m J0 / hbar) (Re k- - Re k+) / (Re k- + Re k+)

    Above the lower gap edge the formula is finite at eps = 0 and is used
    directly; at and below it k_pm are taken at delta + i*eps.
    """
    epsilon = DEFAULT_EPSILON * config.hbar_coupling if epsilon is None else epsilon
    if not epsilon > 0:
        raise DomainError(f"continuation epsilon must be positive, got {epsilon!r}")

    delta = config.delta
    if delta > -config.hbar_coupling:
        k = wavenumbers(config)
    else:
        k = wavenumbers(config, delta=complex(delta, epsilon))

    re_plus, re_minus = k.k_plus.real, k.k_minus.real
    return config.mass * config.coupling / config.hbar * (re_minus - re_plus) / (re_minus + re_plus)


@dataclass(frozen=True)
class ContinuationPoint:
    epsilon: float
    value: float
    error: float


def continuation_sweep(
    config: PhysicalConfig, epsilons: Iterable[float] = EPSILON_SWEEP
) -> tuple[List[ContinuationPoint], bool]:
    """
    C_B over a sequence of eps (in units of hbar*J0) against the closed form.

    Returns the points and whether the error is non-increasing along the
    sequence; errors already at round-off level count as converged.
    """
    reference = rho_a_coefficient(config)
    points = []
    for eps in epsilons:
        value = rho_aB_coefficient(config, eps * config.hbar_coupling)
        points.append(ContinuationPoint(eps, value, abs(value - reference) / reference))

    errors = [p.error for p in points]
    monotone = all(b <= a or b <= ROUNDOFF_FLOOR for a, b in zip(errors, errors[1:]))
    if not monotone:
        logger.warning("continuation error is not monotone at delta=%g: %s", config.delta, errors)
    return points, monotone


def reconstruct_population(config: PhysicalConfig, x_grid,
                           node_threshold: float = NODE_THRESHOLD) -> np.ndarray:
    """
    Full-x rho_a from the auxiliary continuity equation alone:
    rho_a v_a = -int_0^x j0, divided by v_a. NaN where v_a vanishes or is undefined.
    """
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 2 or x[0] != 0.0:
        raise DomainError("reconstruction integrates from x = 0; the grid must start there")

    flux = -cumulative_trapezoid(tunnelling_current_profile(config, x), x, initial=0.0)
    v_a = velocity_profile(config, x, Waveguide.AUXILIARY, node_threshold)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = flux / v_a
    return np.where(np.abs(v_a) > 0, rho, np.nan)


# ---------- trajectories ----------

# sub-intervals per RK4 step scanned for a node crossing
NODE_SCAN_POINTS = 16


def _node_in_span(config: PhysicalConfig, waveguide: Waveguide, lo: float, hi: float,
                  node_threshold: float) -> bool:
    """
    Whether psi has a node on [lo, hi]. Either a sample falls under the node
    threshold, or the phase of psi advances by about pi more than its
    gradient allows, which is the sign flip of a node between samples.
    """
    if hi <= lo:
        return False
    f = field_arrays(config, np.linspace(lo, hi, NODE_SCAN_POINTS + 1))
    psi, d1, _, _ = _pick(f, waveguide)
    if _node_mask(config, psi, node_threshold).any():
        return True

    gradient = np.imag(np.conj(psi) * d1) / np.abs(psi) ** 2
    advance = np.angle(psi[1:] * np.conj(psi[:-1]))
    expected = 0.5 * np.diff(f.x) * (gradient[1:] + gradient[:-1])
    mismatch = np.angle(np.exp(1j * (advance - expected)))
    return bool(np.any(np.abs(mismatch) > 0.5 * np.pi))


def integrate_trajectory(config: PhysicalConfig, x0: float, waveguide: Waveguide,
                         t_end: float, dt: float,
                         node_threshold: float = NODE_THRESHOLD) -> Trajectory:
    """
    Classic RK4 on dx/dt = v(x) inside one waveguide. Nodes, the step edge
    at x = 0 and tail underflow are absorbing: the run stops and is flagged.
    Every step is scanned for a node between the points it touches, so a
    step that would jump over one ends the run at the last position before it.
    """
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt!r}")
    if not x0 > 0:
        raise DomainError(f"trajectory must start after the step, got x0={x0!r}")
    if t_end < 0:
        raise DomainError(f"t_end must be non-negative, got {t_end!r}")

    def velocity(x: float) -> float:
        return bohm_velocity(config, x, waveguide, node_threshold)

    try:
        velocity(x0)
    except NodeError as exc:
        raise DomainError(f"trajectory cannot start at a node: {exc}") from exc

    steps = max(1, math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    h = t_end / steps if steps else 0.0
    trajectory = Trajectory(waveguide=waveguide, times=[0.0], positions=[float(x0)])

    x = float(x0)
    for n in range(1, steps + 1):
        try:
            k1 = velocity(x)
            k2 = velocity(x + 0.5 * h * k1)
            k3 = velocity(x + 0.5 * h * k2)
            k4 = velocity(x + h * k3)
            x_next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            touched = (x, x + 0.5 * h * k1, x + 0.5 * h * k2, x + h * k3, x_next)
            if _node_in_span(config, waveguide, min(touched), max(touched), node_threshold):
                raise NodeError(
                    f"{waveguide.value} waveguide has a node between "
                    f"x={min(touched)!r} and x={max(touched)!r}",
                    x=x,
                )
        except (NodeError, DomainError, TailUnderflowError) as exc:
            trajectory.truncated = True
            trajectory.reason = str(exc)
            logger.warning("trajectory from x0=%g truncated at t=%g: %s", x0, (n - 1) * h, exc)
            break
        x = x_next
        trajectory.times.append(n * h)
        trajectory.positions.append(x)

    return trajectory


def integrate_ensemble(config: PhysicalConfig, starts: Sequence[float], waveguide: Waveguide,
                       t_end: float, dt: float, max_workers: int = 4) -> List[Trajectory]:
    """Independent trajectories, run concurrently, returned in the order of ``starts``"""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(
            lambda x0: integrate_trajectory(config, x0, waveguide, t_end, dt), starts
        ))
