"""
fields.py - Maps and Spinors Along Maps
MapField (on-manifold values or torus lifts with their winding) and
SpinorField (spinors fiberwise tangent to the target along a map), plus
factories for the affine, constant, random smooth and bubble maps used by
solvers, experiments and tests.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from errors import ProjectionError, ShapeMismatchError, TangencyError
from .domain import SurfaceDomain, gradient_density, grad
from .spin import PlainSpinorField, check_spinor
from .target import TANGENCY_TOL, FlatTorus2, HomotopyClass, RoundSphere, TargetManifold

logger = logging.getLogger(__name__)

ON_MANIFOLD_TOL = 1e-10
BUBBLE_CORE = 0.25
BUBBLE_CUTOFF = 0.45


@dataclass
class MapField:
    """
    Discrete map from the grid into the target.

    Attributes:
        values: Array (n, n, L); torus targets hold lift values
        target: Target manifold
        domain: Grid the map lives on
        winding: 2x2 integer winding matrix (torus targets only)
    """
    values: np.ndarray
    target: TargetManifold
    domain: SurfaceDomain
    winding: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        arr = np.asarray(self.domain.check(self.values, "map"), dtype=float)
        if arr.ndim != 3 or arr.shape[2] != self.target.ambient_dim:
            raise ShapeMismatchError(
                f"map must be (n, n, {self.target.ambient_dim}) for target {self.target.name}, got {arr.shape}"
            )
        defect = self.target.on_manifold_defect(arr)
        if defect > ON_MANIFOLD_TOL:
            raise ProjectionError(f"map values leave {self.target.name} by {defect:.3e}")
        self.values = arr
        if self.target.is_flat:
            W = np.zeros((2, 2), dtype=int) if self.winding is None else np.asarray(self.winding, dtype=int)
            self.winding = W
        else:
            self.winding = None

    @property
    def jump(self) -> Optional[np.ndarray]:
        return self.target.seam_jump(self.winding) if self.target.is_flat else None

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    def grad(self) -> np.ndarray:
        """Forward differences (2, n, n, L) with lift seams accounted for."""
        return grad(self.domain, self.values, jump=self.jump)

    def energy_density(self) -> np.ndarray:
        """|d phi|^2 per vertex."""
        return gradient_density(self.domain, self.values, jump=self.jump)

    def with_values(self, values: np.ndarray) -> 'MapField':
        return MapField(values, self.target, self.domain, winding=self.winding)

    def declared_class(self) -> Optional[HomotopyClass]:
        """Class carried by the map itself (torus winding); None for sphere maps."""
        if self.target.is_flat:
            return HomotopyClass.torus(self.winding)
        return None

    def frame(self) -> np.ndarray:
        """Tangent frame (n, n, L, 2) along the map."""
        return self.target.tangent_frame(self.values)

    def project_tangent(self, v: np.ndarray) -> np.ndarray:
        return self.target.project_tangent(self.values, v)

    def project_spinor(self, psi: np.ndarray) -> np.ndarray:
        return self.target.project_spinor(self.values, psi)


@dataclass
class SpinorField:
    """Spinor values (n, n, 2, L) tangent to the target along `phi`."""
    values: np.ndarray
    phi: MapField

    def __post_init__(self):
        arr = check_spinor(self.phi.domain, np.asarray(self.values, dtype=complex))
        if arr.shape[3] != self.phi.dim:
            raise ShapeMismatchError(f"spinor has {arr.shape[3]} ambient components, map has {self.phi.dim}")
        check_tangency(self.phi, arr)
        self.values = arr

    @classmethod
    def zeros(cls, phi: MapField) -> 'SpinorField':
        return cls(np.zeros(phi.domain.grid_shape + (2, phi.dim), dtype=complex), phi)

    @classmethod
    def from_ambient(cls, phi: MapField, values: np.ndarray) -> 'SpinorField':
        """Project arbitrary ambient spinor values onto the tangent bundle along phi."""
        return cls(phi.project_spinor(np.asarray(values, dtype=complex)), phi)

    @property
    def domain(self) -> SurfaceDomain:
        return self.phi.domain

    def plain(self) -> PlainSpinorField:
        return PlainSpinorField(self.values, self.phi.domain)


def check_tangency(phi: MapField, psi: np.ndarray) -> None:
    """Raise TangencyError when psi has a normal component along phi."""
    if phi.target.is_flat:
        return
    normal = psi - phi.project_spinor(psi)
    scale = max(1.0, float(np.abs(psi).max()) if psi.size else 1.0)
    defect = float(np.abs(normal).max()) if normal.size else 0.0
    if defect > TANGENCY_TOL * scale:
        raise TangencyError(f"spinor is not tangent along the map (normal part {defect:.3e})")


def spinor_values(psi) -> np.ndarray:
    """Raw (n, n, 2, L) array from a SpinorField, PlainSpinorField or ndarray."""
    if isinstance(psi, (SpinorField, PlainSpinorField)):
        return psi.values
    return np.asarray(psi, dtype=complex)


# =============================================================================
# MAP FACTORIES
# =============================================================================

def affine_map(domain: SurfaceDomain, target: FlatTorus2, winding: Sequence[Sequence[int]] = ((1, 0), (0, 1)),
               offset: Tuple[float, float] = (0.0, 0.0)) -> MapField:
    """
    Affine torus map of winding W: lift(x) = (P / side_length) W x + offset.

    With period == side_length and W = Id this is the identity map.
    """
    W = np.asarray(winding, dtype=int)
    X, Y = domain.coordinates()
    scale = target.period / domain.side_length
    lift = scale * (W[None, None, :, 0] * X[..., None] + W[None, None, :, 1] * Y[..., None])
    lift = lift + np.asarray(offset, dtype=float)
    return MapField(lift, target, domain, winding=W)


def constant_map(domain: SurfaceDomain, target: TargetManifold, point: Sequence[float]) -> MapField:
    p = np.asarray(point, dtype=float)
    if not target.is_flat:
        p = target.project(p)
    values = np.broadcast_to(p, domain.grid_shape + (target.ambient_dim,)).copy()
    return MapField(values, target, domain)


def smooth_noise(domain: SurfaceDomain, rng: np.random.Generator, tail: Tuple[int, ...] = (),
                 modes: int = 2, complex_valued: bool = False) -> np.ndarray:
    """
    Random trigonometric polynomial with frequencies |m_beta| <= modes,
    normalised to unit max-norm.
    """
    X, Y = domain.coordinates()
    k = 2.0 * np.pi / domain.side_length
    expand = (slice(None), slice(None)) + (None,) * len(tail)
    out = np.zeros(domain.grid_shape + tuple(tail), dtype=complex if complex_valued else float)
    for mx in range(-modes, modes + 1):
        for my in range(-modes, modes + 1):
            phase = k * (mx * X + my * Y)
            cos, sin = np.cos(phase)[expand], np.sin(phase)[expand]
            term = cos * rng.standard_normal(tail) + sin * rng.standard_normal(tail)
            if complex_valued:
                term = term + 1j * (cos * rng.standard_normal(tail) + sin * rng.standard_normal(tail))
            out = out + term / (1.0 + mx * mx + my * my)
    peak = float(np.abs(out).max())
    return out / peak if peak > 0 else out


def random_smooth_map(domain: SurfaceDomain, target: TargetManifold, rng: np.random.Generator,
                      amplitude: float = 0.2, modes: int = 2,
                      winding: Optional[Sequence[Sequence[int]]] = None) -> MapField:
    """
    Smooth random map. Torus: affine map of the given winding plus a periodic
    perturbation of max-norm `amplitude` (in units of the period). Sphere: a
    degree-0 map obtained by projecting a perturbed constant map.
    """
    noise = smooth_noise(domain, rng, (target.ambient_dim,), modes=modes)
    if target.is_flat:
        base = affine_map(domain, target, winding if winding is not None else ((0, 0), (0, 0)))
        return base.with_values(base.values + amplitude * target.period * noise)
    pole = rng.standard_normal(target.ambient_dim)
    pole /= np.linalg.norm(pole)
    return MapField(target.project(pole + amplitude * noise), target, domain)


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 1 for t <= 0, 0 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    a = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    b = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    return a / (a + b)


def bubble_map(domain: SurfaceDomain, center: Tuple[float, float], scale: float,
               target: Optional[RoundSphere] = None) -> MapField:
    """
    Degree-one inverse stereographic bubble of size `scale` centred at `center`.

    The stereographic coordinate is divided by a smooth cutoff that falls
    from 1 at BUBBLE_CORE to 0 at BUBBLE_CUTOFF (fractions of the side
    length), so the map equals the north pole across the periodic seam.
    """
    target = target or RoundSphere()
    X, Y = domain.coordinates()
    L = domain.side_length
    dx = (X - center[0] + L / 2) % L - L / 2
    dy = (Y - center[1] + L / 2) % L - L / 2
    rho = np.hypot(dx, dy) / L
    chi = _smooth_step((rho - BUBBLE_CORE) / (BUBBLE_CUTOFF - BUBBLE_CORE))
    wx, wy = dx / scale, dy / scale
    w2 = wx ** 2 + wy ** 2
    values = np.stack([2 * wx * chi, 2 * wy * chi, w2 - chi ** 2], axis=-1) / (w2 + chi ** 2)[..., None]
    return MapField(target.project(values), target, domain)


def random_tangent_field(phi: MapField, rng: np.random.Generator, modes: int = 2) -> np.ndarray:
    """Smooth random tangent vector field along phi, unit max-norm before projection."""
    noise = smooth_noise(phi.domain, rng, (phi.dim,), modes=modes)
    return phi.project_tangent(noise)


def random_tangent_spinor(phi: MapField, rng: np.random.Generator, modes: int = 2) -> np.ndarray:
    """Smooth random complex spinor tangent along phi."""
    noise = smooth_noise(phi.domain, rng, (2, phi.dim), modes=modes, complex_valued=True)
    return phi.project_spinor(noise)


