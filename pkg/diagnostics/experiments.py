"""
experiments.py - Verification Experiments
Sampled minimax geometry (a, b against m_theta), uniqueness and convexity of
alpha-harmonic maps on flat targets, and finite-difference gradient checks
of the perturbed action.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from errors import ConvergenceError, SdafError, SpectralError, WindingError
from geometry.domain import SurfaceDomain, l2_norm
from geometry.fields import MapField, random_smooth_map, random_tangent_field, random_tangent_spinor, spinor_values
from geometry.spin import h_half_norm, l2_inner
from geometry.target import TargetManifold, winding_of
from variational.configs import ActionConfig, SolverConfig
from variational.functional import (action, alpha_energy, directional_derivative, horizontal_gradient,
                                    vertical_residual)
from variational.solver import minimize_alpha_energy
from variational.spectral import SpectralData, dirac_spectrum

logger = logging.getLogger(__name__)

PASS = 'PASS'
FAIL = 'FAIL'
NOT_APPLICABLE = 'NOT-APPLICABLE'

# Constants
PILOT_SAMPLES = 32
MAX_RADIUS_STEPS = 40
LINKING_RTOL = 1e-12


@dataclass
class ExperimentVerdict:
    """Outcome of one experiment with its measured quantities and a readable log."""
    name: str
    verdict: str
    measurements: dict = field(default_factory=dict)
    log: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return asdict(self)


# =============================================================================
# MINIMAX GEOMETRY
# =============================================================================

@dataclass
class MinimaxEstimate:
    """
    Sampled linking levels: a over the boundary of Q, b over the sphere S_rho.

    holds is a <= m_theta (up to rounding) and m_theta < b. a is None when
    eps_k = 0 and no radii were supplied, since the ray never turns down.
    """
    a: Optional[float]
    b: float
    m_theta: float
    R1: Optional[float]
    R2: Optional[float]
    rho: float
    samples: int
    lambda_plus: float
    holds: bool
    log: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _span_sample(rng: np.random.Generator, basis: np.ndarray, domain: SurfaceDomain, radius: float) -> np.ndarray:
    coeffs = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    spinor = np.tensordot(coeffs, basis, axes=1)
    norm = h_half_norm(domain, spinor)
    return spinor * (radius / norm) if norm > 0 else spinor


def _boundary_values(phi: MapField, config: ActionConfig, basis: np.ndarray, e_plus: np.ndarray,
                     R1: float, R2: float, face: str, count: int, rng: np.random.Generator) -> np.ndarray:
    """Action at `count` random points on one face of the boundary of Q."""
    out = np.empty(count)
    for i in range(count):
        if face == 'side':
            v = _span_sample(rng, basis, phi.domain, R1)
            r = rng.uniform(0.0, R2)
        else:
            v = _span_sample(rng, basis, phi.domain, R1 * rng.uniform())
            r = 0.0 if face == 'inner' else R2
        out[i] = action(phi, v + r * e_plus, config).total
    return out


def _sphere_values(phi: MapField, config: ActionConfig, basis: np.ndarray, e_plus: np.ndarray, rho: float,
                   count: int, rng: np.random.Generator) -> np.ndarray:
    values = [action(phi, rho * e_plus, config).total]
    for _ in range(count):
        values.append(action(phi, _span_sample(rng, basis, phi.domain, rho), config).total)
    return np.array(values)


def minimax_estimates(phi: MapField, config: ActionConfig, data: Optional[SpectralData] = None,
                      samples: int = 1000, R1: Optional[float] = None, R2: Optional[float] = None,
                      rho: Optional[float] = None, rng: Optional[np.random.Generator] = None,
                      modes: int = 24) -> MinimaxEstimate:
    """
    Monte-Carlo estimates of the linking levels around the minimiser phi.

    R2 is doubled until the outer face lies below m_theta, R1 doubled until
    the side face does, and rho halved until the sphere S_rho lies above
    m_theta, each judged on a pilot sample. The sphere sample always
    contains rho e+.

    Raises:
        SpectralError: when the negative/null or positive resolved span is empty
        ConvergenceError: when the automatic radius search does not settle
    """
    rng = rng or np.random.default_rng(0)
    data = data or dirac_spectrum(phi, modes)
    lower = np.concatenate([data.indices('-'), data.indices('0')])
    upper = data.indices('+')
    if lower.size == 0 or upper.size == 0 or data.e_plus is None:
        raise SpectralError(f"spectral subspaces too small to sample: {lower.size} negative/null, "
                            f"{upper.size} positive modes resolved")
    negative_basis = data.eigenspinors[np.sort(lower)]
    positive_basis = data.eigenspinors[upper]
    e_plus = data.e_plus
    m_theta = action(phi, np.zeros_like(e_plus), config).total
    tol = LINKING_RTOL * max(1.0, abs(m_theta))
    log = [f"m_theta = {m_theta:.12g}, lambda+ = {data.lambda_plus:.8g}, "
           f"{negative_basis.shape[0]} negative/null and {positive_basis.shape[0]} positive modes"]

    a = None
    if config.perturbation_scale > 0 or (R1 is not None and R2 is not None):
        if R2 is None:
            R2 = 1.0
            for _ in range(MAX_RADIUS_STEPS):
                pilot = _boundary_values(phi, config, negative_basis, e_plus, 0.0, R2, 'outer', 1, rng)
                pilot = np.append(pilot, _boundary_values(phi, config, negative_basis, e_plus, R2, R2, 'outer',
                                                          PILOT_SAMPLES, rng))
                if pilot.max() < m_theta:
                    break
                R2 *= 2.0
            else:
                raise ConvergenceError("outer face never drops below m_theta", diagnostics={'R2': R2})
        if R1 is None:
            R1 = R2
            for _ in range(MAX_RADIUS_STEPS):
                pilot = _boundary_values(phi, config, negative_basis, e_plus, R1, R2, 'side', PILOT_SAMPLES, rng)
                if pilot.max() <= m_theta + tol:
                    break
                R1 *= 2.0
            else:
                raise ConvergenceError("side face never drops below m_theta", diagnostics={'R1': R1})
        per_face = samples // 3
        faces = {
            'inner': _boundary_values(phi, config, negative_basis, e_plus, R1, R2, 'inner', per_face, rng),
            'outer': _boundary_values(phi, config, negative_basis, e_plus, R1, R2, 'outer', per_face, rng),
            'side': _boundary_values(phi, config, negative_basis, e_plus, R1, R2, 'side',
                                     samples - 2 * per_face, rng),
        }
        a = max(m_theta, max(float(v.max()) for v in faces.values()))
        log.append(f"R1 = {R1:g}, R2 = {R2:g}: a = {a:.12g} over {samples} boundary samples "
                   + ", ".join(f"{k} max {v.max():.6g}" for k, v in faces.items()))
    else:
        log.append("eps_k = 0 without radii: boundary of Q not sampled")

    if rho is None:
        rho = 1.0
        for _ in range(MAX_RADIUS_STEPS):
            # the perturbation may eat at most half of the quadratic rise on the pilot
            rise = 0.25 * data.lambda_plus * rho ** 2
            if _sphere_values(phi, config, positive_basis, e_plus, rho, PILOT_SAMPLES, rng).min() >= m_theta + rise:
                break
            rho *= 0.5
        else:
            raise ConvergenceError("sphere S_rho never rises above m_theta", diagnostics={'rho': rho})
    b = float(_sphere_values(phi, config, positive_basis, e_plus, rho, samples, rng).min())
    log.append(f"rho = {rho:g}: b = {b:.12g} over {samples + 1} sphere samples")

    holds = a is not None and a <= m_theta + tol and m_theta < b
    logger.info("minimax_estimates: a=%s, m=%.10g, b=%.10g, holds=%s", a, m_theta, b, holds)
    return MinimaxEstimate(a=a, b=b, m_theta=m_theta, R1=R1, R2=R2, rho=rho, samples=samples,
                           lambda_plus=float(data.lambda_plus), holds=bool(holds), log=log)


# =============================================================================
# UNIQUENESS & CONVEXITY
# =============================================================================

def geodesic_homotopy(phi0: MapField, phi1: MapField, t: float) -> MapField:
    """Vertexwise geodesic f_t from phi0 to phi1 (linear in the lift for flat targets)."""
    if phi0.target.is_flat:
        return phi0.with_values((1.0 - t) * phi0.values + t * phi1.values)
    target = phi0.target
    log = _sphere_log(phi0.values, phi1.values)
    return phi0.with_values(target.geodesic(phi0.values, log, t))


def _sphere_log(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    cos = np.clip(np.sum(p * q, axis=-1, keepdims=True), -1.0, 1.0)
    w = q - cos * p
    norm = np.linalg.norm(w, axis=-1, keepdims=True)
    angle = np.arccos(cos)
    return np.where(norm > 0, w * angle / np.where(norm > 0, norm, 1.0), 0.0)


def uniqueness_experiment(domain: SurfaceDomain, target: TargetManifold, winding: Sequence[Sequence[int]],
                          alpha: float, trials: int = 5, rng: Optional[np.random.Generator] = None,
                          solver: Optional[SolverConfig] = None, amplitude: float = 0.05,
                          deviation_tol: float = 1e-6, energy_tol: float = 1e-8) -> ExperimentVerdict:
    """
    Minimise E^alpha from independent random starts in one class and compare
    the limits after mean-centring; the geodesic homotopy between the first
    two limits must keep E^alpha constant.
    """
    name = 'uniqueness'
    if not target.is_flat:
        return ExperimentVerdict(name, NOT_APPLICABLE,
                                 log=[f"target {target.name} is not nonpositively curved; experiment refused"])
    rng = rng or np.random.default_rng(0)
    log = []
    limits = []
    measurements = {'trials': trials, 'alpha': alpha}
    for trial in range(trials):
        start = random_smooth_map(domain, target, rng, amplitude=amplitude, winding=winding)
        try:
            point = minimize_alpha_energy(start, alpha, solver)
        except SdafError as exc:
            log.append(f"trial {trial}: solver failed: {exc}")
            measurements['completed'] = len(limits)
            return ExperimentVerdict(name, FAIL, measurements, log)
        limits.append(point.phi)
        log.append(f"trial {trial}: E = {point.action.alpha_energy:.12g}, residual {point.horizontal_residual:.2e}")

    centred = [phi.values - phi.values.mean(axis=(0, 1)) for phi in limits]
    deviation = max((float(np.abs(a - b).max()) for i, a in enumerate(centred) for b in centred[i + 1:]),
                    default=0.0)
    measurements['max_deviation'] = deviation

    spread = 0.0
    if len(limits) > 1:
        energies = [alpha_energy(geodesic_homotopy(limits[0], limits[1], t), alpha)
                    for t in (0.0, 0.25, 0.5, 0.75, 1.0)]
        spread = float(max(energies) - min(energies))
        displacement = limits[1].values - limits[0].values
        measurements['translation'] = displacement.mean(axis=(0, 1)).tolist()
        measurements['geodesic_spread'] = float(np.abs(displacement - displacement.mean(axis=(0, 1))).max())
    measurements['energy_spread'] = spread
    passed = deviation <= deviation_tol and spread <= energy_tol
    log.append(f"max pairwise deviation {deviation:.3e} (tol {deviation_tol:g}); "
               f"E along homotopy varies by {spread:.3e} (tol {energy_tol:g})")
    logger.info("uniqueness_experiment: deviation=%.3e spread=%.3e", deviation, spread)
    return ExperimentVerdict(name, PASS if passed else FAIL, measurements, log)


def convexity_experiment(phi0: MapField, phi1: MapField, alpha: float, steps: int = 11,
                         tol: float = 1e-8) -> ExperimentVerdict:
    """
    Second differences of t -> E^alpha(f_t) along the vertexwise geodesic
    homotopy; all must be >= -tol * scale.

    Raises:
        WindingError: when the maps are in different classes
    """
    name = 'convexity'
    if winding_of(phi0) != winding_of(phi1):
        raise WindingError(f"maps are not homotopic: {winding_of(phi0).to_dict()} vs {winding_of(phi1).to_dict()}")
    if not phi0.target.is_flat:
        return ExperimentVerdict(name, NOT_APPLICABLE,
                                 log=[f"target {phi0.target.name} is not nonpositively curved"])
    times = np.linspace(0.0, 1.0, steps)
    energies = np.array([alpha_energy(geodesic_homotopy(phi0, phi1, t), alpha) for t in times])
    second = energies[:-2] - 2.0 * energies[1:-1] + energies[2:]
    scale = max(1.0, float(np.abs(energies).max()))
    worst = float(second.min()) if second.size else 0.0
    passed = worst >= -tol * scale
    measurements = {
        'alpha': alpha,
        'steps': steps,
        'energies': energies.tolist(),
        'second_differences': second.tolist(),
        'min_second_difference': worst,
        'scale': scale,
    }
    log = [f"min second difference {worst:.3e} against -{tol:g} * {scale:.6g}"]
    return ExperimentVerdict(name, PASS if passed else FAIL, measurements, log)


# =============================================================================
# GRADIENT CHECK
# =============================================================================

def gradient_check(phi: MapField, psi, config: ActionConfig, directions: int = 50, step: float = 1e-4,
                   rng: Optional[np.random.Generator] = None, tol: float = 1e-6) -> ExperimentVerdict:
    """
    Compare <G_H, V>_2 + Re(D_phi psi - eps Pi F_psi, Y)_2 with central
    differences of the action along random admissible directions (V, Y).
    """
    rng = rng or np.random.default_rng(0)
    psi = phi.project_spinor(np.asarray(spinor_values(psi), dtype=complex))
    domain = phi.domain
    gh = horizontal_gradient(phi, psi, config)
    rv = vertical_residual(phi, psi, config)
    scale = abs(action(phi, psi, config).total) + 1.0
    errors = []
    for _ in range(directions):
        V = random_tangent_field(phi, rng)
        Y = random_tangent_spinor(phi, rng)
        analytic = float(np.sum(gh * V) * domain.weight) + float(np.real(l2_inner(domain, rv, Y)))
        numeric = directional_derivative(phi, psi, config, V, Y, step)
        denom = max(abs(analytic), abs(numeric), 1e-8 * scale)
        errors.append(abs(numeric - analytic) / denom)
    worst = float(max(errors)) if errors else 0.0
    measurements = {
        'directions': directions,
        'step': step,
        'max_relative_error': worst,
        'median_relative_error': float(np.median(errors)) if errors else 0.0,
        'gradient_norm': l2_norm(domain, gh),
    }
    log = [f"max relative error {worst:.3e} over {directions} directions (tol {tol:g})"]
    logger.info("gradient_check: max relative error %.3e", worst)
    return ExperimentVerdict('gradient_check', PASS if worst <= tol else FAIL, measurements, log)
