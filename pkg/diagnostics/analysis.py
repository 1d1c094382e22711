"""
analysis.py - Energy and Residual Analysis
Concentration scans for the epsilon-regularity monitor, energy and residual
summaries of a state, and classification of computed critical points.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from errors import ConfigurationError
from geometry.domain import integrate
from geometry.fields import MapField, spinor_values
from variational.configs import ActionConfig
from variational.functional import (
    action,
    alpha_energy,
    bound_energy,
    dirichlet_energy,
    residual_norms,
    spinor_quartic,
)
from variational.solver import NONTRIVIAL_TOL, CriticalPoint

logger = logging.getLogger(__name__)

# Constants
DEFAULT_EPSILON0 = 0.1
EPSILON0_SWEEP = (0.02, 0.05, 0.1, 0.2)
MIN_RADIUS_CELLS = 2


@dataclass
class ConcentrationMap:
    """
    Local Dirichlet energies int_{B(x, r)} |d phi|^2 at every grid center.

    Attributes:
        energies: (n, n) local energies
        flags: (n, n) energies >= epsilon0
        radius: Ball radius r
        epsilon0: Flag threshold
        total_energy: int |d phi|^2 over the torus
        cover_sum: Sum of local energies over a disjoint sub-cover
        sweep: Flag count per threshold of the sensitivity sweep
        rescaled: r^{2 alpha - 2} int_B |d phi|^{2 alpha} per center (when alpha is given)
        alpha: Exponent used for the rescaled energy
    """
    energies: np.ndarray
    flags: np.ndarray
    radius: float
    epsilon0: float
    total_energy: float
    cover_sum: float
    sweep: Dict[float, int]
    centers: tuple = field(repr=False, default=())
    rescaled: Optional[np.ndarray] = None
    alpha: Optional[float] = None

    @property
    def flag_count(self) -> int:
        return int(self.flags.sum())

    @property
    def cover_ok(self) -> bool:
        return bool(self.cover_sum <= self.total_energy * (1.0 + 1e-12) + 1e-15)

    def flagged_centers(self) -> np.ndarray:
        """(x, y) coordinates of flagged centers."""
        X, Y = self.centers
        return np.column_stack([X[self.flags], Y[self.flags]])

    def summary(self) -> dict:
        out = {
            'radius': self.radius,
            'epsilon0': self.epsilon0,
            'flag_count': self.flag_count,
            'max_local_energy': float(self.energies.max()),
            'total_energy': self.total_energy,
            'cover_sum': self.cover_sum,
            'cover_ok': self.cover_ok,
            'sweep': {str(k): v for k, v in self.sweep.items()},
        }
        if self.rescaled is not None:
            out['max_rescaled_energy'] = float(self.rescaled.max())
            out['alpha'] = self.alpha
        return out

    def to_frame(self) -> pd.DataFrame:
        """(x, y, local_energy, flagged[, rescaled_energy]) rows in grid order."""
        X, Y = self.centers
        data = {
            'x': X.ravel(),
            'y': Y.ravel(),
            'local_energy': self.energies.ravel(),
            'flagged': self.flags.ravel(),
        }
        if self.rescaled is not None:
            data['rescaled_energy'] = self.rescaled.ravel()
        return pd.DataFrame(data)


def _disk_kernel(n: int, h: float, radius: float) -> np.ndarray:
    offsets = np.arange(n)
    offsets = np.minimum(offsets, n - offsets) * h
    return (offsets[:, None] ** 2 + offsets[None, :] ** 2 <= radius ** 2 * (1.0 + 1e-12)).astype(float)


def _ball_sums(density: np.ndarray, kernel: np.ndarray, weight: float) -> np.ndarray:
    # symmetric kernel: circular convolution equals correlation
    sums = np.real(np.fft.ifft2(np.fft.fft2(density) * np.fft.fft2(kernel))) * weight
    return np.maximum(sums, 0.0)


def concentration_scan(phi: MapField, radius: float, epsilon0: float = DEFAULT_EPSILON0,
                       alpha: Optional[float] = None,
                       sweep: Sequence[float] = EPSILON0_SWEEP) -> ConcentrationMap:
    """
    Scan local Dirichlet energies over balls of radius r centred at every vertex.

    Args:
        phi: Map
        radius: Ball radius r, at least two grid cells
        epsilon0: Concentration threshold
        alpha: When given, also report the rescaled alpha-energy per ball
        sweep: Thresholds for the flag-count sensitivity sweep

    Raises:
        ConfigurationError: when r < 2h or r exceeds half the side length
    """
    domain = phi.domain
    if radius < MIN_RADIUS_CELLS * domain.h * (1.0 - 1e-12):
        raise ConfigurationError(f"radius {radius:g} is below {MIN_RADIUS_CELLS} grid cells (h = {domain.h:g})",
                                 key="diagnostics.radius")
    if radius > 0.5 * domain.side_length:
        raise ConfigurationError(f"radius {radius:g} exceeds half the side length {domain.side_length:g}",
                                 key="diagnostics.radius")
    density = phi.energy_density()
    kernel = _disk_kernel(domain.n, domain.h, radius)
    energies = _ball_sums(density, kernel, domain.weight)
    flags = energies >= epsilon0

    rescaled = None
    if alpha is not None:
        rescaled = radius ** (2.0 * alpha - 2.0) * _ball_sums(density ** alpha, kernel, domain.weight)

    # lattice of centers spaced more than 2r apart gives disjoint balls
    step = int(np.floor(2.0 * radius / domain.h)) + 1
    count = domain.n // step
    lattice = np.arange(count) * step
    cover_sum = float(energies[np.ix_(lattice, lattice)].sum()) if count > 1 else float(energies[0, 0])

    sweep_counts = {float(eps): int(np.sum(energies >= eps)) for eps in sorted(set(sweep) | {epsilon0})}
    scan = ConcentrationMap(
        energies=energies, flags=flags, radius=float(radius), epsilon0=float(epsilon0),
        total_energy=integrate(domain, density), cover_sum=cover_sum, sweep=sweep_counts,
        centers=domain.coordinates(), rescaled=rescaled, alpha=alpha,
    )
    logger.info("concentration_scan: r=%g, eps0=%g, flags=%d, max=%.4g",
                radius, epsilon0, scan.flag_count, float(energies.max()))
    return scan


# =============================================================================
# STATE SUMMARIES
# =============================================================================

def energy_report(phi: MapField, psi, config: ActionConfig) -> dict:
    """Energies of a state together with the action decomposition."""
    values = spinor_values(psi)
    return {
        'alpha_energy': alpha_energy(phi, config.alpha),
        'dirichlet_energy': dirichlet_energy(phi),
        'spinor_quartic': spinor_quartic(phi, values),
        'bound_energy': bound_energy(phi, values, config.alpha),
        'action': action(phi, values, config).to_dict(),
    }


def residual_report(phi: MapField, psi, config: ActionConfig) -> dict:
    """Perturbed and unperturbed residual norms of the Euler-Lagrange system."""
    gh, gv = residual_norms(phi, psi, config)
    uh, uv = residual_norms(phi, psi, config.unperturbed())
    return {
        'horizontal': gh,
        'vertical': gv,
        'combined': float(np.hypot(gh, gv)),
        'unperturbed_horizontal': uh,
        'unperturbed_vertical': uv,
    }


def classify_critical_point(point: CriticalPoint, m_theta: float, rtol: float = 1e-6) -> dict:
    """
    Place a critical point in the nontriviality dichotomy.

    Returns one of 'nontrivial' (psi != 0), 'non_minimizing_alpha_harmonic'
    (psi = 0 and action above m_theta) or 'minimizer' (psi = 0, action at
    m_theta). On flat targets the middle case contradicts uniqueness of
    alpha-harmonic maps in a class and is flagged.
    """
    psi_norm = float(np.sqrt(integrate(point.phi.domain, np.sum(np.abs(point.psi) ** 2, axis=(-2, -1)))))
    gap = point.action.total - m_theta
    tol = rtol * max(1.0, abs(m_theta))
    if psi_norm > NONTRIVIAL_TOL:
        kind = 'nontrivial'
    elif gap > tol:
        kind = 'non_minimizing_alpha_harmonic'
    else:
        kind = 'minimizer'
    contradiction = kind == 'non_minimizing_alpha_harmonic' and point.phi.target.is_flat
    if contradiction:
        logger.warning("alpha-harmonic map above m_theta on a flat target (gap %.3e)", gap)
    return {
        'classification': kind,
        'psi_norm': psi_norm,
        'action_gap': gap,
        'contradicts_uniqueness': contradiction,
    }
