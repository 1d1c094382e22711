"""
perturbations.py - Perturbation Hooks F(phi, psi)
Pointwise nonlinearities with their psi- and phi-derivatives. Arguments are
vectorised: map values (..., L), spinor values (..., 2, L).
"""

from abc import ABC, abstractmethod
from typing import List

import numpy as np

from errors import ConfigurationError


def spinor_modulus_sq(psi: np.ndarray) -> np.ndarray:
    """|psi|^2 summed over spinor and ambient indices, shape (...)."""
    return np.sum(np.abs(psi) ** 2, axis=(-2, -1))


class Perturbation(ABC):
    """
    F with density F(phi, psi), F_psi (spinor, the real-gradient: dF[Y] = Re<F_psi, Y>)
    and F_phi (ambient vector, unprojected).
    """
    name: str = "perturbation"
    mu: float = 0.0

    @abstractmethod
    def density(self, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """Pointwise F."""

    @abstractmethod
    def grad_psi(self, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """Pointwise F_psi."""

    @abstractmethod
    def grad_phi(self, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """Pointwise F_phi."""

    def describe(self) -> dict:
        return {'name': self.name, 'mu': self.mu}


class PowerPerturbation(Perturbation):
    """F = c |psi|^mu; F_phi = 0. The canonical choice has c = 1."""
    name = "power"

    def __init__(self, mu: float, coefficient: float = 1.0):
        if mu <= 0:
            raise ConfigurationError(f"power exponent must be positive, got {mu}", key="action.mu")
        self.mu = float(mu)
        self.coefficient = float(coefficient)

    def density(self, phi, psi):
        return self.coefficient * spinor_modulus_sq(psi) ** (self.mu / 2.0)

    def grad_psi(self, phi, psi):
        sq = spinor_modulus_sq(psi)
        safe = np.where(sq > 0, sq, 1.0)
        factor = np.where(sq > 0, safe ** (self.mu / 2.0 - 1.0), 0.0)
        return (self.coefficient * self.mu * factor)[..., None, None] * psi

    def grad_phi(self, phi, psi):
        return np.zeros(np.shape(phi), dtype=float)

    def describe(self):
        return {'name': self.name, 'mu': self.mu, 'coefficient': self.coefficient}


class CanonicalPerturbation(PowerPerturbation):
    """F = |psi|^mu with mu = 4 alpha / (3 alpha - 2) by default."""
    name = "canonical"

    def __init__(self, mu: float):
        if mu <= 2:
            raise ConfigurationError(f"mu must be > 2, got {mu}", key="action.mu")
        super().__init__(mu, coefficient=1.0)


class WeightedQuadraticPerturbation(Perturbation):
    """
    F = g(phi) |psi|^2 with g(p) = 1 + strength * sum_l sin^2(wavenumber * p_l).

    Depends on phi, so it exercises the F_phi code paths; g is periodic in the
    lift for wavenumber = pi / period.
    """
    name = "weighted_quadratic"
    mu = 2.0

    def __init__(self, strength: float = 0.5, wavenumber: float = 1.0):
        if strength < 0:
            raise ConfigurationError("weight strength must be non-negative", key="action.perturbation_params.strength")
        self.strength = float(strength)
        self.wavenumber = float(wavenumber)

    def weight(self, phi: np.ndarray) -> np.ndarray:
        return 1.0 + self.strength * np.sum(np.sin(self.wavenumber * phi) ** 2, axis=-1)

    def weight_gradient(self, phi: np.ndarray) -> np.ndarray:
        return self.strength * self.wavenumber * np.sin(2.0 * self.wavenumber * phi)

    def density(self, phi, psi):
        return self.weight(phi) * spinor_modulus_sq(psi)

    def grad_psi(self, phi, psi):
        return 2.0 * self.weight(phi)[..., None, None] * psi

    def grad_phi(self, phi, psi):
        return self.weight_gradient(phi) * spinor_modulus_sq(psi)[..., None]

    def describe(self):
        return {'name': self.name, 'strength': self.strength, 'wavenumber': self.wavenumber}


# Available perturbations (name -> class)
PERTURBATIONS = {
    'canonical': CanonicalPerturbation,
    'power': PowerPerturbation,
    'weighted_quadratic': WeightedQuadraticPerturbation,
}


def get_available_perturbations() -> List[str]:
    """Return list of available perturbation names."""
    return list(PERTURBATIONS.keys())


def get_perturbation(name: str, **params) -> Perturbation:
    """Instantiate a perturbation hook by name."""
    if name not in PERTURBATIONS:
        raise ConfigurationError(f"Perturbation '{name}' not found. Available: {get_available_perturbations()}",
                                 key="action.perturbation")
    return PERTURBATIONS[name](**params)
