"""
functional.py - Discrete Perturbed Action L^alpha_k
alpha-energy, Dirac action along the map, perturbation term, the twisted
Dirac operator, first variations (horizontal and vertical gradients) and
the second variation of E^alpha along geodesic variations.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np

from errors import ConfigurationError
from geometry.domain import div, grad, integrate, l2_norm
from geometry.fields import MapField, SpinorField, check_tangency, spinor_values
from geometry.spin import h_half_norm, l2_inner, resolvent_precondition, untwisted_dirac
from geometry.target import transport_spinor

from .configs import ActionConfig
from .perturbations import spinor_modulus_sq

logger = logging.getLogger(__name__)

__all__ = [
    'ActionValue', 'MapField', 'SpinorField',
    'alpha_energy', 'twisted_dirac', 'dirac_action', 'perturbation_F', 'action',
    'horizontal_gradient', 'vertical_gradient', 'directional_derivative', 'second_variation',
]


@dataclass
class ActionValue:
    """Decomposition total = alpha_energy + dirac_action - perturbation_scale * perturbation."""
    total: float
    alpha_energy: float
    dirac_action: float
    perturbation: float
    perturbation_scale: float

    def to_dict(self) -> dict:
        return asdict(self)


# =============================================================================
# ENERGIES
# =============================================================================

def alpha_energy(phi: MapField, alpha: float) -> float:
    """
    E^alpha(phi) = 1/2 int (1 + |d phi|^2)^alpha.

    alpha = 1 is accepted here (Dirichlet limit) even though actions need alpha > 1.
    """
    if alpha < 1.0:
        raise ConfigurationError(f"alpha must be >= 1 for the alpha-energy, got {alpha}", key="action.alpha")
    density = phi.energy_density()
    return 0.5 * integrate(phi.domain, (1.0 + density) ** alpha)


def dirichlet_energy(phi: MapField) -> float:
    """1/2 int |d phi|^2."""
    return 0.5 * integrate(phi.domain, phi.energy_density())


def bound_energy(phi: MapField, psi, alpha: float) -> float:
    """int (|d phi|^{2 alpha} + |psi|^4), the quantity bounded by Lambda along continuation."""
    density = phi.energy_density() ** alpha + spinor_modulus_sq(spinor_values(psi)) ** 2
    return integrate(phi.domain, density)


def spinor_quartic(phi: MapField, psi) -> float:
    """int |psi|^4."""
    return integrate(phi.domain, spinor_modulus_sq(spinor_values(psi)) ** 2)


# =============================================================================
# DIRAC TERMS
# =============================================================================

def twisted_dirac(phi: MapField, psi) -> np.ndarray:
    """
    D_phi psi = Pi_phi (sum_beta e_beta . d_beta psi), the ambient form of the
    Dirac operator along phi.

    Args:
        phi: Map
        psi: Spinor tangent along phi

    Returns:
        Spinor values (n, n, 2, L) tangent along phi

    Raises:
        TangencyError: when psi has a normal component
    """
    values = spinor_values(psi)
    check_tangency(phi, values)
    return phi.project_spinor(untwisted_dirac(phi.domain, values))


def dirac_action(phi: MapField, psi) -> float:
    """1/2 Re(psi, D_phi psi)_2."""
    values = spinor_values(psi)
    return 0.5 * float(np.real(l2_inner(phi.domain, values, twisted_dirac(phi, values))))


# =============================================================================
# PERTURBATION
# =============================================================================

def perturbation_F(phi: MapField, psi, config: ActionConfig) -> float:
    """int F(phi, psi) for the configured hook."""
    hook = config.hook()
    return integrate(phi.domain, hook.density(phi.values, spinor_values(psi)))


def perturbation_grad_psi(phi: MapField, psi, config: ActionConfig) -> np.ndarray:
    """Pi F_psi, so that d/dt int F(phi, psi + tY) = Re(F_psi, Y)_2 for tangent Y."""
    return phi.project_spinor(config.hook().grad_psi(phi.values, spinor_values(psi)))


def perturbation_grad_phi(phi: MapField, psi, config: ActionConfig) -> np.ndarray:
    """Ambient F_phi (not projected)."""
    return config.hook().grad_phi(phi.values, spinor_values(psi))


def action(phi: MapField, psi, config: ActionConfig) -> ActionValue:
    """L^alpha_k(phi, psi) with its decomposition."""
    energy = alpha_energy(phi, config.alpha)
    dirac = dirac_action(phi, psi)
    pert = perturbation_F(phi, psi, config) if config.perturbation_scale > 0 else 0.0
    total = energy + dirac - config.perturbation_scale * pert
    return ActionValue(total=total, alpha_energy=energy, dirac_action=dirac,
                       perturbation=pert, perturbation_scale=config.perturbation_scale)


# =============================================================================
# FIRST VARIATION
# =============================================================================

def tension(phi: MapField, alpha: float) -> np.ndarray:
    """-div(alpha (1 + |d phi|^2)^{alpha-1} grad phi), ambient and unprojected."""
    weight = alpha * (1.0 + phi.energy_density()) ** (alpha - 1.0)
    flux = weight[None, :, :, None] * phi.grad()
    return -div(phi.domain, flux)


def horizontal_gradient(phi: MapField, psi, config: ActionConfig) -> np.ndarray:
    """
    L^2 gradient of the action in the map direction, with psi carried by
    parallel transport.

    Combines the alpha-tension, the curvature coupling Re<dPi(X) psi, D psi>
    and the perturbation terms F_phi + Re<dPi(X) psi, F_psi>; curved terms
    vanish for flat targets.

    Returns:
        Tangent vector field (n, n, L) along phi
    """
    values = spinor_values(psi)
    check_tangency(phi, values)
    target = phi.target
    G = tension(phi, config.alpha)
    if not target.is_flat and np.any(values):
        G = G + target.projector_derivative_adjoint(phi.values, values, untwisted_dirac(phi.domain, values))
    if config.perturbation_scale > 0:
        hook = config.hook()
        forcing = hook.grad_phi(phi.values, values)
        if not target.is_flat and np.any(values):
            forcing = forcing + target.projector_derivative_adjoint(phi.values, values,
                                                                    hook.grad_psi(phi.values, values))
        G = G - config.perturbation_scale * forcing
    return phi.project_tangent(G)


def vertical_residual(phi: MapField, psi, config: ActionConfig) -> np.ndarray:
    """D_phi psi - eps_k Pi F_psi, the residual of the Dirac equation."""
    residual = twisted_dirac(phi, psi)
    if config.perturbation_scale > 0:
        residual = residual - config.perturbation_scale * perturbation_grad_psi(phi, psi, config)
    return residual


def vertical_gradient(phi: MapField, psi, config: ActionConfig) -> np.ndarray:
    """
    H^{1/2} gradient (1 + |D|)^{-1}(D_phi psi - eps_k F_psi) in the spinor
    direction. Its H^{1/2} pairing with any Y equals Re(D_phi psi - eps_k F_psi, Y)_2.
    """
    return resolvent_precondition(phi.domain, vertical_residual(phi, psi, config))


def residual_norms(phi: MapField, psi, config: ActionConfig) -> Tuple[float, float]:
    """(||horizontal gradient||_2, ||vertical gradient||_{1/2,2})."""
    gh = horizontal_gradient(phi, psi, config)
    gv = vertical_gradient(phi, psi, config)
    return l2_norm(phi.domain, gh), h_half_norm(phi.domain, gv)


def perturbed_state(phi: MapField, psi: np.ndarray, V: np.ndarray, Y: np.ndarray, t: float):
    """(R_phi(tV), transport of psi + tY onto the moved map)."""
    moved = phi.with_values(phi.target.retract(phi.values, t * V))
    return moved, transport_spinor(phi, moved, psi + t * Y)


def directional_derivative(phi: MapField, psi, config: ActionConfig, V: np.ndarray, Y: np.ndarray,
                           step: float = 1e-4) -> float:
    """
    Central difference of the action along (V, Y): the map moves by
    retraction, the spinor by psi + tY transported to the moved map.
    """
    values = np.asarray(spinor_values(psi), dtype=complex)
    plus = action(*perturbed_state(phi, values, V, Y, step), config).total
    minus = action(*perturbed_state(phi, values, V, Y, -step), config).total
    return (plus - minus) / (2.0 * step)


# =============================================================================
# SECOND VARIATION
# =============================================================================

def _pair(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """sum over beta and ambient index of a * b, per vertex."""
    return np.sum(a * b, axis=(0, 3))


def second_variation(phi: MapField, V: np.ndarray, W: np.ndarray, alpha: float) -> float:
    """
    Hessian of E^alpha along geodesic variations in the directions V, W:

        int 2 alpha (alpha-1) (1+|d phi|^2)^{alpha-2} <d phi, dV><d phi, dW>
          + alpha (1+|d phi|^2)^{alpha-1} (<dV, dW> - <d phi, d((V.W) phi)>)

    The last term carries the sphere's geodesic acceleration -|V|^2 phi and
    is absent for flat targets.

    Raises:
        TangencyError: when V or W is not tangent along phi
    """
    if alpha < 1.0:
        raise ConfigurationError(f"alpha must be >= 1, got {alpha}", key="action.alpha")
    target = phi.target
    if not target.is_flat:
        target.check_tangent(phi.values, np.asarray(V), np.asarray(W), name="variation field")
    domain = phi.domain
    dphi = phi.grad()
    dV = grad(domain, V)
    dW = grad(domain, W)
    base = 1.0 + phi.energy_density()
    density = 2.0 * alpha * (alpha - 1.0) * base ** (alpha - 2.0) * _pair(dphi, dV) * _pair(dphi, dW)
    coupling = _pair(dV, dW)
    if not target.is_flat:
        acceleration = np.sum(V * W, axis=-1)[..., None] * phi.values
        coupling = coupling - _pair(dphi, grad(domain, acceleration))
    density = density + alpha * base ** (alpha - 1.0) * coupling
    return integrate(domain, density)


def convexity_lower_bound(phi: MapField, V: np.ndarray, alpha: float) -> float:
    """alpha int (1+|d phi|^2)^{alpha-2} [(1+|d phi|^2)|dV|^2 + 2(alpha-1)<dV, d phi>^2]."""
    dphi = phi.grad()
    dV = grad(phi.domain, V)
    base = 1.0 + phi.energy_density()
    density = alpha * base ** (alpha - 2.0) * (base * _pair(dV, dV) + 2.0 * (alpha - 1.0) * _pair(dV, dphi) ** 2)
    return integrate(phi.domain, density)
