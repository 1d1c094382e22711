"""
solver.py - Critical Point Solvers
alpha-energy minimisation, the mountain-pass initialiser on the spinor ray,
damped Newton on the coupled Euler-Lagrange system, the negative
pseudo-gradient flow and continuation in alpha and k.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, gmres, minres
from sklearn.linear_model import LinearRegression

from errors import ConvergenceError, SdafError, WindingError
from geometry.domain import l2_norm
from geometry.fields import MapField, SpinorField, spinor_values
from geometry.spin import h_half_norm, l2_inner
from geometry.target import HomotopyClass, check_class, transport_spinor, winding_of

from .configs import ActionConfig, ContinuationSchedule, SolverConfig
from .functional import (
    ActionValue,
    action,
    alpha_energy,
    bound_energy,
    directional_derivative,
    horizontal_gradient,
    residual_norms,
    spinor_quartic,
    tension,
    vertical_gradient,
    vertical_residual,
)
from .spectral import DEFAULT_MODES, dirac_spectrum

logger = logging.getLogger(__name__)

# Constants
NONTRIVIAL_TOL = 1e-8           # ||psi||_2 above this counts as a nontrivial spinor
PROFILE_SAMPLES = 64
MAX_RADIUS_DOUBLINGS = 60
GMRES_FALLBACK_RATIO = 0.1
MIN_STEP = 1e-16
PSEUDO_GRADIENT_FD_STEP = 1e-4
FLOW_MARGIN_TOL = 1e-6


@dataclass
class CriticalPoint:
    """
    Result of a critical-point solve.

    Attributes:
        phi: Map
        psi: Spinor values (n, n, 2, L) tangent along phi
        action: Action value with its decomposition
        horizontal_residual: L^2 norm of the horizontal gradient
        vertical_residual: H^{1/2} norm of the vertical gradient
        classification: 'minimizer' or 'saddle-candidate'
        homotopy_class: Class certificate computed from phi
        converged: Whether the combined residual reached grad_tol
        iterations: Outer iterations used
        config: Action configuration the point solves
        nontrivial: Whether psi is nonzero
        unperturbed_residuals: (horizontal, vertical) residuals with eps = 0
        spectral: Summary of the Dirac spectrum at phi, when requested
        history: Per-iteration records
        diagnostics: Extra information on failure
    """
    phi: MapField
    psi: np.ndarray
    action: ActionValue
    horizontal_residual: float
    vertical_residual: float
    classification: str
    homotopy_class: HomotopyClass
    converged: bool
    iterations: int
    config: ActionConfig
    nontrivial: bool = False
    unperturbed_residuals: Optional[Tuple[float, float]] = None
    spectral: Optional[dict] = None
    history: List[dict] = field(default_factory=list)
    diagnostics: Dict[str, object] = field(default_factory=dict)

    @property
    def combined_residual(self) -> float:
        return float(np.hypot(self.horizontal_residual, self.vertical_residual))

    @property
    def spinor(self) -> SpinorField:
        return SpinorField(self.psi, self.phi)

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history)

    def summary(self) -> dict:
        out = {
            'classification': self.classification,
            'converged': self.converged,
            'iterations': self.iterations,
            'action': self.action.total,
            'alpha_energy': self.action.alpha_energy,
            'dirac_action': self.action.dirac_action,
            'perturbation': self.action.perturbation,
            'horizontal_residual': self.horizontal_residual,
            'vertical_residual': self.vertical_residual,
            'nontrivial': self.nontrivial,
            'homotopy_class': self.homotopy_class.to_dict(),
            'alpha': self.config.alpha,
            'perturbation_scale': self.config.perturbation_scale,
        }
        if self.unperturbed_residuals is not None:
            out['unperturbed_horizontal_residual'] = self.unperturbed_residuals[0]
            out['unperturbed_vertical_residual'] = self.unperturbed_residuals[1]
        if self.spectral is not None:
            out['spectral'] = self.spectral
        return out


def _build_point(phi: MapField, psi: np.ndarray, config: ActionConfig, classification: str,
                 converged: bool, iterations: int, history: List[dict],
                 spectral_modes: Optional[int] = None, diagnostics: Optional[dict] = None) -> CriticalPoint:
    gh, gv = residual_norms(phi, psi, config)
    unperturbed = residual_norms(phi, psi, config.unperturbed()) if config.perturbation_scale > 0 else (gh, gv)
    spectral = dirac_spectrum(phi, spectral_modes).summary() if spectral_modes else None
    return CriticalPoint(
        phi=phi, psi=psi, action=action(phi, psi, config),
        horizontal_residual=gh, vertical_residual=gv,
        classification=classification, homotopy_class=winding_of(phi),
        converged=converged, iterations=iterations, config=config,
        nontrivial=bool(l2_norm(phi.domain, psi) > NONTRIVIAL_TOL),
        unperturbed_residuals=unperturbed, spectral=spectral,
        history=history, diagnostics=diagnostics or {},
    )


def _expected_class(phi: MapField, expected: Optional[HomotopyClass]) -> HomotopyClass:
    if expected is None:
        return winding_of(phi)
    check_class(phi, expected)
    return expected


def _step_cap(phi: MapField, config: SolverConfig) -> float:
    return config.step_cap_fraction * phi.target.injectivity_radius


# =============================================================================
# ALPHA-ENERGY MINIMISATION
# =============================================================================

def minimize_alpha_energy(phi0: MapField, alpha: float, config: Optional[SolverConfig] = None,
                          expected_class: Optional[HomotopyClass] = None) -> CriticalPoint:
    """
    Minimise E^alpha in the homotopy class of phi0 with psi = 0.

    Riemannian gradient descent with Barzilai-Borwein steps, a non-monotone
    Armijo line search and retraction onto the target. Every vertex move is
    capped at step_cap_fraction times the injectivity radius.

    Args:
        phi0: Starting map
        alpha: Exponent in (1, 2]
        config: Solver configuration
        expected_class: Class to stay in (defaults to the class of phi0)

    Returns:
        CriticalPoint with psi = 0, classified as 'minimizer'

    Raises:
        ConvergenceError: on line-search failure, class change or iteration cap
    """
    config = config or SolverConfig()
    action_config = ActionConfig(alpha=alpha)
    expected = _expected_class(phi0, expected_class)
    target = phi0.target
    domain = phi0.domain
    cap = _step_cap(phi0, config)

    phi = phi0
    energy = alpha_energy(phi, alpha)
    G = phi.project_tangent(tension(phi, alpha))
    gnorm = l2_norm(domain, G)
    smax = float(phi.energy_density().max())
    step = domain.h ** 2 / (8.0 * alpha * (1.0 + smax) ** (alpha - 1.0) * (2.0 * alpha - 1.0))
    recent = [energy]
    history = []
    start = time.time()
    logger.info("minimize_alpha_energy: target=%s, alpha=%g, E0=%.10g, |G|=%.3e",
                target.name, alpha, energy, gnorm)

    for iteration in range(1, config.max_iters + 1):
        if gnorm <= config.grad_tol:
            break
        peak = float(np.max(np.linalg.norm(G, axis=-1)))
        t = min(step, cap / peak) if peak > 0 else step
        reference = max(recent)
        accepted = False
        for _ in range(config.max_backtracks):
            candidate = phi.with_values(target.retract(phi.values, -t * G))
            trial = alpha_energy(candidate, alpha)
            if trial <= reference - config.armijo * t * gnorm ** 2:
                accepted = True
                break
            t *= config.backtrack
        if not accepted:
            raise ConvergenceError(
                f"line search failed at iteration {iteration}",
                diagnostics={'iteration': iteration, 'energy': energy, 'gradient_norm': gnorm, 'step': t},
            )
        try:
            check_class(candidate, expected)
        except WindingError as exc:
            raise ConvergenceError(f"homotopy class changed at iteration {iteration}: {exc}",
                                   diagnostics={'iteration': iteration, 'energy': energy, 'step': t}) from exc

        G_new = candidate.project_tangent(tension(candidate, alpha))
        s = candidate.project_tangent(-t * G)
        y = G_new - candidate.project_tangent(G)
        sy = float(np.sum(s * y))
        ss = float(np.sum(s * s))
        step = ss / sy if sy > 0 else 2.0 * t

        phi, energy, G = candidate, trial, G_new
        gnorm = l2_norm(domain, G)
        recent = (recent + [energy])[-config.memory:]
        history.append({'iteration': iteration, 'energy': energy, 'gradient_norm': gnorm, 'step': t})
        logger.debug("iter %d: E=%.12g |G|=%.3e t=%.3e", iteration, energy, gnorm, t)
    else:
        if gnorm > config.grad_tol:
            raise ConvergenceError(
                f"minimisation did not reach grad_tol={config.grad_tol:g} in {config.max_iters} iterations",
                diagnostics={'energy': energy, 'gradient_norm': gnorm, 'iterations': config.max_iters},
            )

    psi = np.zeros(domain.grid_shape + (2, phi.dim), dtype=complex)
    point = _build_point(phi, psi, action_config, 'minimizer', True, len(history), history)
    logger.info("minimize_alpha_energy: E=%.12g after %d iterations (%.2fs)",
                energy, len(history), time.time() - start)
    return point


# =============================================================================
# MOUNTAIN PASS
# =============================================================================

@dataclass
class MountainPass:
    """
    Maximiser of r -> L(phi, r e) on the ray through a spinor direction.

    Attributes:
        phi: Map the ray lives over
        psi: r* e
        radius: r*
        R2: Radius at which the profile has dropped below its value at 0
        height: Action at r* e
        base: Action at r = 0
        direction: Spinor direction e
        profile: Sampled (radius, action) pairs
    """
    phi: MapField
    psi: np.ndarray
    radius: float
    R2: float
    height: float
    base: float
    direction: np.ndarray
    profile: pd.DataFrame


def mountain_pass_init(phi, config: ActionConfig, direction: Optional[np.ndarray] = None,
                       modes: int = DEFAULT_MODES, R2: float = 1.0,
                       samples: int = PROFILE_SAMPLES) -> MountainPass:
    """
    Start point psi0 = r* e+ for the saddle search.

    Args:
        phi: Map or CriticalPoint (usually the alpha-energy minimiser)
        config: Action configuration with eps_k > 0
        direction: Spinor direction; defaults to e+ from the Dirac spectrum
        modes: Eigenpairs resolved when e+ is computed
        R2: Initial outer radius, doubled until the profile turns down
        samples: Profile samples on [0, R2]

    Raises:
        ConvergenceError: when eps_k = 0 (no turn-down) or the profile never increases
    """
    if isinstance(phi, CriticalPoint):
        phi = phi.phi
    if config.perturbation_scale <= 0:
        raise ConvergenceError("no turn-down: the profile is an increasing quadratic when eps_k = 0",
                               diagnostics={'perturbation_scale': config.perturbation_scale})
    if direction is None:
        data = dirac_spectrum(phi, modes)
        if data.e_plus is None:
            raise ConvergenceError("no positive Dirac mode resolved; cannot build e+",
                                   diagnostics={'modes': modes, 'summary': data.summary()})
        direction = data.e_plus
    direction = phi.project_spinor(np.asarray(direction, dtype=complex))

    def profile(r: float) -> float:
        return action(phi, r * direction, config).total

    def slope(r: float) -> float:
        return float(np.real(l2_inner(phi.domain, direction, vertical_residual(phi, r * direction, config))))

    base = profile(0.0)
    for _ in range(MAX_RADIUS_DOUBLINGS):
        if profile(R2) < base:
            break
        R2 *= 2.0
    else:
        raise ConvergenceError("no turn-down: profile stays above its base value",
                               diagnostics={'R2': R2, 'base': base})

    radii = np.linspace(0.0, R2, samples + 1)
    values = np.array([profile(r) for r in radii])
    best = int(np.argmax(values))
    if best == 0 or values[best] <= base:
        raise ConvergenceError("profile never increases along the direction; eps_k too large or spectrum stale",
                               diagnostics={'R2': R2, 'base': base})

    radius = radii[best]
    lo, hi = radii[best - 1], radii[min(best + 1, samples)]
    if lo == 0.0:
        lo = 0.5 * radii[1]
    if slope(lo) > 0 > slope(hi):
        radius = brentq(slope, lo, hi, xtol=1e-14 * max(1.0, hi), rtol=1e-14)
    height = profile(radius)
    logger.info("mountain_pass_init: r*=%.10g, R2=%g, height=%.10g, base=%.10g", radius, R2, height, base)
    return MountainPass(phi=phi, psi=radius * direction, radius=float(radius), R2=float(R2),
                        height=float(height), base=float(base), direction=direction,
                        profile=pd.DataFrame({'radius': radii, 'action': values}))


# =============================================================================
# NEWTON
# =============================================================================

class _FrameResidual:
    """
    Residual of the coupled system in frame coordinates around a base state.

    Unknowns z = (u, Re v, Im v) move the map by the retraction of frame . u
    and the spinor by frame . v followed by transport; residuals are
    transported back and expressed in the same frame.
    """

    def __init__(self, phi: MapField, psi: np.ndarray, config: ActionConfig):
        self.phi = phi
        self.psi = psi
        self.config = config
        self.frame = phi.frame()
        n = phi.domain.n
        self.map_shape = (n, n, 2)
        self.spinor_shape = (n, n, 2, 2)
        self.size = n * n * 2 * 3

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        k = int(np.prod(self.map_shape))
        m = int(np.prod(self.spinor_shape))
        u = z[:k].reshape(self.map_shape)
        v = (z[k:k + m] + 1j * z[k + m:]).reshape(self.spinor_shape)
        return u, v

    def state(self, z: np.ndarray) -> Tuple[MapField, np.ndarray]:
        u, v = self.split(z)
        target = self.phi.target
        displacement = np.einsum('...lk,...k->...l', self.frame, u)
        moved = self.phi.with_values(target.retract(self.phi.values, displacement))
        spinor = self.psi + np.einsum('...lk,...ak->...al', self.frame, v)
        return moved, transport_spinor(self.phi, moved, spinor)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        phi, psi = self.state(z)
        gh = horizontal_gradient(phi, psi, self.config)
        rv = vertical_residual(phi, psi, self.config)
        target = phi.target
        gh = target.parallel_transport(phi.values, self.phi.values, gh)
        rv = transport_spinor(phi, self.phi, rv)
        a = np.einsum('...lk,...l->...k', self.frame, gh)
        b = np.einsum('...lk,...al->...ak', self.frame, rv)
        return np.concatenate([a.ravel(), b.real.ravel(), b.imag.ravel()])


def _combined_norm(phi: MapField, psi: np.ndarray, config: ActionConfig) -> float:
    return float(np.hypot(*residual_norms(phi, psi, config)))


def newton_solve(phi0: MapField, psi0, config: ActionConfig, solver: Optional[SolverConfig] = None,
                 expected_class: Optional[HomotopyClass] = None,
                 spectral_modes: Optional[int] = None) -> CriticalPoint:
    """
    Damped Newton on (horizontal gradient, D_phi psi - eps_k Pi F_psi).

    Jacobian-vector products are forward differences of the frame residual;
    linear solves use MINRES with a GMRES fallback. Steps are halved until
    the combined residual sqrt(||G_H||_2^2 + ||grad^V||_{1/2}^2) decreases.

    Args:
        phi0: Starting map
        psi0: Starting spinor tangent along phi0
        config: Action configuration
        solver: Solver configuration
        expected_class: Class the iterates must stay in
        spectral_modes: Resolve this many Dirac modes at the result for the summary

    Returns:
        Best iterate; converged=False when damping is exhausted or the cap is hit
    """
    solver = solver or SolverConfig()
    expected = _expected_class(phi0, expected_class)
    phi = phi0
    psi = phi.project_spinor(np.asarray(spinor_values(psi0), dtype=complex))
    norm = _combined_norm(phi, psi, config)
    if not np.isfinite(norm):
        raise ConvergenceError("initial residual is not finite", diagnostics={'residual': norm})
    history = [{'iteration': 0, 'residual': norm, 'damping': 0.0, 'krylov': 'none'}]
    logger.info("newton_solve: alpha=%g, eps=%g, residual0=%.3e", config.alpha, config.perturbation_scale, norm)

    converged = norm <= solver.grad_tol
    reason = 'converged' if converged else 'max_iters'
    iteration = 0
    while not converged and iteration < solver.newton_max_iters:
        iteration += 1
        residual = _FrameResidual(phi, psi, config)
        z0 = np.zeros(residual.size)
        F0 = residual(z0)
        fnorm = float(np.linalg.norm(F0))
        scale = max(1.0, float(np.max(np.abs(phi.values))), float(np.max(np.abs(psi), initial=0.0)))

        def jvp(x: np.ndarray) -> np.ndarray:
            xn = float(np.linalg.norm(x))
            if xn == 0.0:
                return np.zeros_like(x)
            tau = solver.jvp_step * scale / xn
            return (residual(tau * x) - F0) / tau

        J = LinearOperator((residual.size, residual.size), matvec=jvp, dtype=float)
        delta, _ = minres(J, -F0, rtol=solver.krylov_tol, maxiter=solver.krylov_maxiter)
        method = 'minres'
        if np.linalg.norm(jvp(delta) + F0) > GMRES_FALLBACK_RATIO * fnorm:
            delta, _ = gmres(J, -F0, rtol=solver.krylov_tol, maxiter=solver.krylov_maxiter, restart=50)
            method = 'gmres'

        peak = float(np.max(np.linalg.norm(np.einsum('...lk,...k->...l', residual.frame,
                                                     residual.split(delta)[0]), axis=-1)))
        t = 1.0
        if peak > _step_cap(phi, solver):
            t = _step_cap(phi, solver) / peak
        improved = False
        for _ in range(solver.newton_max_halvings + 1):
            try:
                cand_phi, cand_psi = residual.state(t * delta)
                check_class(cand_phi, expected)
                cand_norm = _combined_norm(cand_phi, cand_psi, config)
            except SdafError:
                cand_norm = np.inf
            if cand_norm < norm:
                improved = True
                break
            t *= 0.5
        if not improved:
            reason = 'damping_exhausted'
            logger.warning("newton_solve: no decrease after %d halvings at iteration %d (residual %.3e)",
                           solver.newton_max_halvings, iteration, norm)
            break
        phi, psi, norm = cand_phi, cand_psi, cand_norm
        history.append({'iteration': iteration, 'residual': norm, 'damping': t, 'krylov': method})
        logger.debug("newton iter %d: residual=%.3e damping=%g (%s)", iteration, norm, t, method)
        converged = norm <= solver.grad_tol
        if converged:
            reason = 'converged'

    point_class = 'saddle-candidate' if l2_norm(phi.domain, psi) > NONTRIVIAL_TOL else 'minimizer'
    point = _build_point(phi, psi, config, point_class, converged, iteration, history, spectral_modes,
                         diagnostics={'reason': reason})
    logger.info("newton_solve: %s after %d iterations, residual=%.3e, nontrivial=%s",
                reason, iteration, norm, point.nontrivial)
    return point


# =============================================================================
# PSEUDO-GRADIENT FLOW
# =============================================================================

@dataclass
class FlowTrajectory:
    """
    Accepted states of the negative pseudo-gradient flow.

    Each record holds t, action, the dual norm of dL, ||omega||, eta,
    dL(omega) measured along the step, both pseudo-gradient margins (2||dL|| - ||omega|| and
    dL(omega) - ||dL||^2) and the predicted decrease dt * eta * dL(omega).
    """
    phi: MapField
    psi: np.ndarray
    records: List[dict]
    accepted: int
    rejected: int
    stalled: bool
    diagnostics: Dict[str, object] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records)

    def violations(self, tol: float = FLOW_MARGIN_TOL) -> int:
        """Recorded states where a pseudo-gradient inequality fails beyond tol * max(1, ||dL||^2)."""
        frame = self.to_frame()
        if frame.empty:
            return 0
        scale = tol * np.maximum(1.0, frame['dual_norm'] ** 2)
        bad = (frame['norm_margin'] < -scale) | (frame['descent_margin'] < -scale)
        return int(bad.sum())

    @property
    def total_decrease(self) -> float:
        frame = self.to_frame()
        return float(frame['action'].iloc[0] - frame['action'].iloc[-1]) if len(frame) else 0.0

    @property
    def predicted_decrease(self) -> float:
        frame = self.to_frame()
        return float(frame['predicted_decrease'].sum()) if len(frame) else 0.0


def _pseudo_gradient(phi: MapField, psi: np.ndarray, config: ActionConfig, a: float) -> dict:
    """
    omega = (3/2 G_H, Pi a grad^V) and the two pseudo-gradient margins.

    ||dL|| comes from the Riesz representatives, ||omega|| from the step
    arrays and dL(omega) from a central difference of the action along
    omega, so wrong gradients show up as negative margins.
    """
    domain = phi.domain
    gh = horizontal_gradient(phi, psi, config)
    gv = vertical_gradient(phi, psi, config)
    V = 1.5 * gh
    Y = phi.project_spinor(a * gv)
    dual = float(np.hypot(l2_norm(domain, gh), h_half_norm(domain, gv)))
    omega = float(np.hypot(l2_norm(domain, V), h_half_norm(domain, Y)))
    eta = 1.0 if omega <= 1.0 else 1.0 / omega
    if omega > 0.0:
        d_omega = omega * directional_derivative(phi, psi, config, V / omega, Y / omega, PSEUDO_GRADIENT_FD_STEP)
    else:
        d_omega = 0.0
    return {
        'V': V, 'Y': Y, 'dual_norm': dual, 'omega_norm': omega, 'eta': eta, 'dL_omega': d_omega,
        'norm_margin': 2.0 * dual - omega, 'descent_margin': d_omega - dual ** 2,
    }


def pseudo_gradient_flow(phi: MapField, psi, config: ActionConfig, solver: Optional[SolverConfig] = None,
                         horizon: Optional[float] = None,
                         expected_class: Optional[HomotopyClass] = None) -> FlowTrajectory:
    """
    Integrate d/dt (phi, psi) = -eta omega with omega = (3/2 G_H, a grad^V).

    Explicit steps: the map moves by retraction, the spinor by an ambient
    step projected along the old map and transported to the new one. A step
    that raises the action beyond 10 machine epsilons is rejected and the
    step size halved; flow_max_rejections consecutive rejections stop the run.
    """
    solver = solver or SolverConfig()
    horizon = solver.flow_horizon if horizon is None else horizon
    a = solver.pseudo_gradient_a
    expected = _expected_class(phi, expected_class)
    target = phi.target
    cap = _step_cap(phi, solver)
    psi = phi.project_spinor(np.asarray(spinor_values(psi), dtype=complex))

    current = action(phi, psi, config).total
    field_ = _pseudo_gradient(phi, psi, config, a)
    t = 0.0
    dt = solver.flow_dt
    records = []
    accepted = rejected = streak = 0
    stalled = False
    logger.info("pseudo_gradient_flow: T=%g, dt=%g, a=%g, L0=%.10g", horizon, dt, a, current)

    def record(predicted: float) -> None:
        records.append({
            't': t, 'action': current,
            **{k: field_[k] for k in ('dual_norm', 'omega_norm', 'eta', 'dL_omega', 'norm_margin',
                                       'descent_margin')},
            'predicted_decrease': predicted,
        })

    record(0.0)
    while t < horizon - 1e-14 * max(1.0, horizon):
        step = min(dt, horizon - t)
        eta = field_['eta']
        move = -step * eta * field_['V']
        peak = float(np.max(np.linalg.norm(move, axis=-1)))
        if peak > cap:
            step *= cap / peak
            move *= cap / peak
        try:
            new_phi = phi.with_values(target.retract(phi.values, move))
            check_class(new_phi, expected)
            stepped = psi - step * eta * field_['Y']
            new_psi = transport_spinor(phi, new_phi, stepped)
            trial = action(new_phi, new_psi, config).total
        except SdafError as exc:
            logger.debug("flow step rejected at t=%g: %s", t, exc)
            trial = np.inf
        if trial <= current + 10.0 * np.finfo(float).eps * abs(current):
            predicted = step * eta * field_['dL_omega']
            phi, psi, current = new_phi, new_psi, trial
            t += step
            field_ = _pseudo_gradient(phi, psi, config, a)
            record(predicted)
            accepted += 1
            streak = 0
            dt = min(2.0 * dt, solver.flow_dt)
        else:
            rejected += 1
            streak += 1
            dt *= 0.5
            if streak >= solver.flow_max_rejections or dt < MIN_STEP:
                stalled = True
                logger.warning("pseudo_gradient_flow: %d consecutive rejections at t=%g", streak, t)
                break

    logger.info("pseudo_gradient_flow: t=%g, L=%.10g, accepted=%d, rejected=%d", t, current, accepted, rejected)
    return FlowTrajectory(phi=phi, psi=psi, records=records, accepted=accepted, rejected=rejected,
                          stalled=stalled, diagnostics={'final_time': t, 'final_dt': dt})


# =============================================================================
# CONTINUATION
# =============================================================================

@dataclass
class ContinuationResult:
    """
    Stage-by-stage output of a continuation run.

    Attributes:
        points: Converged or best-effort critical point per (alpha, k) stage
        trace: One row per stage
        energy_bound: Lambda
        quartic_slopes: Per alpha, fitted slope of log int |psi|^4 against log k
        failures: Stages that raised, with the error message
    """
    points: List[CriticalPoint]
    trace: pd.DataFrame
    energy_bound: float
    quartic_slopes: Dict[float, float]
    failures: List[dict] = field(default_factory=list)

    @property
    def bounded(self) -> bool:
        return bool(self.trace['within_bound'].all()) if len(self.trace) else True

    @property
    def final(self) -> Optional[CriticalPoint]:
        return self.points[-1] if self.points else None

    def to_frame(self) -> pd.DataFrame:
        return self.trace.copy()


def _unit_direction(phi: MapField, psi: np.ndarray) -> Optional[np.ndarray]:
    norm = h_half_norm(phi.domain, psi)
    return psi / norm if norm > NONTRIVIAL_TOL else None


def _fit_slope(x: List[float], y: List[float]) -> Optional[float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (x > 0) & (y > 0)
    if mask.sum() < 2:
        return None
    model = LinearRegression().fit(np.log(x[mask]).reshape(-1, 1), np.log(y[mask]))
    return float(model.coef_[0])


def continuation_run(schedule: ContinuationSchedule, phi0: MapField,
                     expected_class: Optional[HomotopyClass] = None) -> ContinuationResult:
    """
    Follow critical points along the alpha ladder (outer) and the k ladder (inner).

    Per alpha the map is first minimised (warm-started from the previous
    alpha). Per k the trivial branch runs Newton from psi = 0; the nontrivial
    branch starts the mountain pass along the previous spinor, transported
    to the minimiser, falling back to e+, and then corrects with Newton.
    Stage failures are recorded and the run continues.
    """
    solver = schedule.solver
    expected = _expected_class(phi0, expected_class)
    phi = phi0
    points = []
    rows = []
    failures = []
    slopes = {}
    logger.info("continuation_run: alphas=%s, ks=%s, branch=%s", schedule.alphas, schedule.ks, schedule.branch)

    for alpha in schedule.alphas:
        try:
            minimiser = minimize_alpha_energy(phi, alpha, solver, expected)
        except SdafError as exc:
            failures.append({'alpha': alpha, 'k': None, 'stage': 'minimize', 'error': str(exc)})
            logger.warning("continuation: minimisation failed at alpha=%g: %s", alpha, exc)
            continue
        phi = minimiser.phi
        m_theta = minimiser.action.alpha_energy
        previous = None
        ks, quartics = [], []
        for k in schedule.ks:
            config = schedule.action_config(alpha, k)
            try:
                if schedule.branch == 'trivial':
                    point = newton_solve(phi, np.zeros(phi.domain.grid_shape + (2, phi.dim), dtype=complex),
                                         config, solver, expected)
                else:
                    point = _nontrivial_stage(phi, previous, config, solver, expected, schedule.spectral_modes)
            except SdafError as exc:
                failures.append({'alpha': alpha, 'k': k, 'stage': schedule.branch, 'error': str(exc)})
                logger.warning("continuation: stage alpha=%g k=%g failed: %s", alpha, k, exc)
                continue
            if point.nontrivial:
                previous = (point.phi, point.psi)
            energy = bound_energy(point.phi, point.psi, alpha)
            quartic = spinor_quartic(point.phi, point.psi)
            points.append(point)
            ks.append(k)
            quartics.append(quartic)
            rows.append({
                'alpha': alpha, 'k': k, 'perturbation_scale': config.perturbation_scale,
                'action': point.action.total, 'alpha_energy': point.action.alpha_energy, 'm_theta': m_theta,
                'bound_energy': energy, 'within_bound': bool(energy <= schedule.energy_bound),
                'spinor_quartic': quartic,
                'horizontal_residual': point.horizontal_residual, 'vertical_residual': point.vertical_residual,
                'unperturbed_horizontal_residual': point.unperturbed_residuals[0],
                'unperturbed_vertical_residual': point.unperturbed_residuals[1],
                'converged': point.converged, 'nontrivial': point.nontrivial,
                'classification': point.classification,
            })
            logger.info("stage alpha=%g k=%g: L=%.8g, E=%.6g (Lambda=%g), converged=%s",
                        alpha, k, point.action.total, energy, schedule.energy_bound, point.converged)
        slope = _fit_slope(ks, quartics)
        if slope is not None:
            slopes[alpha] = slope

    trace = pd.DataFrame(rows)
    exceeded = int((~trace['within_bound']).sum()) if len(trace) else 0
    logger.info("continuation_run: %d stages, %d over the energy bound, %d failures",
                len(points), exceeded, len(failures))
    return ContinuationResult(points=points, trace=trace, energy_bound=schedule.energy_bound,
                              quartic_slopes=slopes, failures=failures)


def _nontrivial_stage(phi: MapField, previous: Optional[Tuple[MapField, np.ndarray]], config: ActionConfig,
                      solver: SolverConfig, expected: HomotopyClass, modes: int) -> CriticalPoint:
    direction = None
    if previous is not None:
        try:
            direction = _unit_direction(phi, transport_spinor(previous[0], phi, previous[1]))
        except SdafError:
            direction = None
    point = None
    if direction is not None:
        try:
            start = mountain_pass_init(phi, config, direction=direction, modes=modes)
            point = newton_solve(start.phi, start.psi, config, solver, expected)
        except ConvergenceError as exc:
            logger.info("warm start failed (%s); falling back to e+", exc)
            point = None
    if point is None or not point.converged:
        start = mountain_pass_init(phi, config, modes=modes)
        fallback = newton_solve(start.phi, start.psi, config, solver, expected)
        if point is None or fallback.combined_residual < point.combined_residual:
            point = fallback
    return point
