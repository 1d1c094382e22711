"""
target.py - Embedded Target Manifolds
Round sphere S^2 in R^3 and the flat torus R^2/(P Z)^2 (stored in the lift
chart, Clifford-embedded in R^4 for validation): projection, tangent
projectors, curvature, geodesics, parallel transport and homotopy classes.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from errors import ConfigurationError, ProjectionError, TangencyError, TransportError, WindingError

if TYPE_CHECKING:
    from .fields import MapField, SpinorField

logger = logging.getLogger(__name__)

# Constants
TANGENCY_TOL = 1e-10
PROJECTION_FLOOR = 1e-8
WINDING_INCREMENT_LIMIT = 0.45     # fraction of the period allowed per grid edge
DEGREE_EDGE_LIMIT = np.pi / 2      # largest edge angle for a trusted degree count


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


# =============================================================================
# HOMOTOPY CLASSES
# =============================================================================

@dataclass(frozen=True)
class HomotopyClass:
    """
    Free homotopy class data: a 2x2 integer winding matrix for torus targets
    (column beta = winding along the domain cycle beta) or an integer degree
    for the sphere.
    """
    kind: str
    winding: Optional[tuple] = None
    degree: Optional[int] = None

    @classmethod
    def torus(cls, winding) -> 'HomotopyClass':
        W = np.asarray(winding, dtype=int)
        if W.shape != (2, 2):
            raise ConfigurationError(f"winding matrix must be 2x2, got {W.shape}", key="class.winding")
        return cls(kind='winding', winding=tuple(map(tuple, W.tolist())))

    @classmethod
    def sphere(cls, degree: int) -> 'HomotopyClass':
        return cls(kind='degree', degree=int(degree))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.winding, dtype=int)

    def to_dict(self) -> dict:
        if self.kind == 'winding':
            return {'kind': 'winding', 'winding': [list(r) for r in self.winding]}
        return {'kind': 'degree', 'degree': self.degree}


# =============================================================================
# TARGET INTERFACE
# =============================================================================

class TargetManifold(ABC):
    """
    Embedded surface N in R^L. Every method is vectorised over leading axes:
    points and vectors are (..., L), spinor values are (..., 2, L).
    """
    name: str = "target"
    ambient_dim: int = 0
    intrinsic_dim: int = 2
    injectivity_radius: float = 0.0
    is_flat: bool = False

    @abstractmethod
    def project(self, p: np.ndarray) -> np.ndarray:
        """Nearest-point projection onto N."""

    @abstractmethod
    def tangent_projector(self, p: np.ndarray) -> np.ndarray:
        """Orthogonal projector onto T_pN, shape (..., L, L)."""

    @abstractmethod
    def tangent_frame(self, p: np.ndarray) -> np.ndarray:
        """Orthonormal tangent frame, shape (..., L, 2)."""

    @abstractmethod
    def second_fundamental_form(self, p: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Normal vector II(X, Y)."""

    @abstractmethod
    def geodesic(self, p: np.ndarray, v: np.ndarray, t: float = 1.0) -> np.ndarray:
        """exp_p(t v)."""

    @abstractmethod
    def parallel_transport(self, p: np.ndarray, q: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Transport w in T_pN to T_qN along the minimal geodesic; w is (..., L)."""

    @abstractmethod
    def distance(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Geodesic distance."""

    @abstractmethod
    def retract(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Retraction used by constrained steps."""

    @abstractmethod
    def projector_derivative_adjoint(self, p: np.ndarray, psi: np.ndarray, chi: np.ndarray) -> np.ndarray:
        """
        Ambient vector G with <G, X> = Re<dPi_p(X) psi, chi> summed over spinor
        components, for spinors psi, chi of shape (..., 2, L).
        """

    @abstractmethod
    def on_manifold_defect(self, p: np.ndarray) -> float:
        """Largest distance of the given points from N (0 for lifts)."""

    def project_tangent(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.einsum('...lm,...m->...l', self.tangent_projector(p), v)

    def project_spinor(self, p: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """Apply Id (x) Pi_p to spinor values (..., 2, L)."""
        return np.einsum('...lm,...am->...al', self.tangent_projector(p), psi)

    def seam_jump(self, winding: Optional[np.ndarray]) -> Optional[np.ndarray]:
        """Offsets a lift gains across the domain seams; None when values are periodic."""
        return None

    def check_tangent(self, p: np.ndarray, *vectors: np.ndarray, name: str = "vector") -> None:
        for v in vectors:
            normal = v - self.project_tangent(p, v)
            defect = float(np.abs(normal).max()) if normal.size else 0.0
            if defect > TANGENCY_TOL * max(1.0, float(np.abs(v).max()) if v.size else 1.0):
                raise TangencyError(f"{name} is not tangent to {self.name} (normal part {defect:.3e})")

    def curvature_op(self, p: np.ndarray, X: np.ndarray, Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
        """
        Riemann curvature R(X, Y)Z with the convention <R(X,Y)Y, X> = sectional curvature.

        Raises:
            TangencyError: if X, Y or Z is not tangent at p
        """
        self.check_tangent(p, X, Y, Z, name="curvature argument")
        return self.curvature_from_second_fundamental_form(p, X, Y, Z)

    def curvature_from_second_fundamental_form(self, p: np.ndarray, X: np.ndarray,
                                               Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
        """Gauss equation <R(X,Y)Z, W> = <II(Y,Z), II(X,W)> - <II(X,Z), II(Y,W)>."""
        frame = self.tangent_frame(p)
        out = np.zeros(np.broadcast(X, Y, Z).shape)
        for k in range(self.intrinsic_dim):
            W = frame[..., :, k]
            coeff = (_dot(self.second_fundamental_form(p, Y, Z), self.second_fundamental_form(p, X, W))
                     - _dot(self.second_fundamental_form(p, X, Z), self.second_fundamental_form(p, Y, W)))
            out = out + coeff[..., None] * W
        return out

    def describe(self) -> dict:
        return {'name': self.name, 'ambient_dim': self.ambient_dim,
                'injectivity_radius': self.injectivity_radius, 'flat': self.is_flat}


# =============================================================================
# ROUND SPHERE
# =============================================================================

class RoundSphere(TargetManifold):
    """Unit sphere S^2 in R^3; sectional curvature +1."""
    name = "sphere"
    ambient_dim = 3
    injectivity_radius = np.pi
    is_flat = False

    def project(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        r = np.linalg.norm(p, axis=-1, keepdims=True)
        worst = float(r.min()) if r.size else 1.0
        if worst < PROJECTION_FLOOR:
            raise ProjectionError(f"cannot project onto the sphere: point at distance {worst:.3e} "
                                  f"from the centre has no nearest point")
        if float(np.abs(r - 1.0).max()) >= self.injectivity_radius:
            raise ProjectionError("point lies outside the tubular neighbourhood of the sphere")
        return p / r

    def tangent_projector(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.eye(3) - p[..., :, None] * p[..., None, :]

    def tangent_frame(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        # seed with the coordinate axis least aligned with p
        axis = np.argmin(np.abs(p), axis=-1)
        seed = np.eye(3)[axis]
        t1 = seed - _dot(seed, p)[..., None] * p
        t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
        t2 = np.cross(p, t1)
        return np.stack([t1, t2], axis=-1)

    def second_fundamental_form(self, p, X, Y):
        return -_dot(X, Y)[..., None] * np.asarray(p, dtype=float)

    def curvature_closed_form(self, X, Y, Z):
        """<Y,Z> X - <X,Z> Y."""
        return _dot(Y, Z)[..., None] * X - _dot(X, Z)[..., None] * Y

    def geodesic(self, p, v, t=1.0):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float) * t
        speed = np.linalg.norm(v, axis=-1, keepdims=True)
        safe = np.where(speed > 0, speed, 1.0)
        return np.cos(speed) * p + np.where(speed > 0, np.sin(speed) / safe, 1.0) * v

    def distance(self, p, q):
        c = np.clip(_dot(p, q), -1.0, 1.0)
        s = np.linalg.norm(np.cross(p, q), axis=-1)
        return np.arctan2(s, c)

    def parallel_transport(self, p, q, w):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        denom = 1.0 + _dot(p, q)
        if float(np.min(denom, initial=np.inf)) < 1e-12:
            raise TransportError("antipodal points: the minimal geodesic is not unique")
        coeff = _dot(q, w) / denom
        return w - coeff[..., None] * (p + q)

    def retract(self, p, v):
        return self.project(np.asarray(p) + np.asarray(v))

    def projector_derivative_adjoint(self, p, psi, chi):
        p_psi = np.einsum('...l,...al->...a', p, psi)
        p_chi = np.einsum('...l,...al->...a', p, chi)
        G = (np.einsum('...a,...am->...m', np.conj(p_psi), chi)
             + np.einsum('...am,...a->...m', np.conj(psi), p_chi))
        return -np.real(G)

    def on_manifold_defect(self, p):
        return float(np.abs(np.linalg.norm(p, axis=-1) - 1.0).max())


# =============================================================================
# FLAT TORUS
# =============================================================================

class FlatTorus2(TargetManifold):
    """
    Flat torus R^2/(P Z)^2 held in the lift (universal cover) chart. Maps keep
    their winding matrix separately; `embed` gives the isometric Clifford
    torus in R^4.
    """
    name = "torus"
    ambient_dim = 2
    is_flat = True

    def __init__(self, period: float = 2.0 * np.pi):
        if period <= 0:
            raise ConfigurationError(f"torus period must be positive, got {period}", key="target.period")
        self.period = float(period)
        self.injectivity_radius = self.period / 2.0

    def project(self, p):
        return np.mod(np.asarray(p, dtype=float), self.period)

    def tangent_projector(self, p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(np.eye(2), p.shape[:-1] + (2, 2))

    def tangent_frame(self, p):
        return self.tangent_projector(p)

    def project_tangent(self, p, v):
        return np.asarray(v)

    def project_spinor(self, p, psi):
        return np.asarray(psi)

    def second_fundamental_form(self, p, X, Y):
        return np.zeros(np.broadcast(X, Y).shape)

    def geodesic(self, p, v, t=1.0):
        return np.asarray(p, dtype=float) + t * np.asarray(v, dtype=float)

    def distance(self, p, q):
        d = (np.asarray(q) - np.asarray(p) + self.period / 2) % self.period - self.period / 2
        return np.linalg.norm(d, axis=-1)

    def parallel_transport(self, p, q, w):
        return np.array(w, copy=True)

    def retract(self, p, v):
        return np.asarray(p, dtype=float) + np.asarray(v, dtype=float)

    def projector_derivative_adjoint(self, p, psi, chi):
        return np.zeros(np.asarray(psi).shape[:-2] + (2,))

    def on_manifold_defect(self, p):
        return 0.0 if np.all(np.isfinite(p)) else np.inf

    def seam_jump(self, winding):
        if winding is None:
            return np.zeros((2, 2))
        W = np.asarray(winding, dtype=float)
        # jump[beta] = P * W[:, beta]
        return self.period * W.T

    def embed(self, lift: np.ndarray) -> np.ndarray:
        """Isometric Clifford embedding of lift values (..., 2) into R^4."""
        radius = self.period / (2.0 * np.pi)
        angle = np.asarray(lift) / radius
        return radius * np.stack([np.cos(angle[..., 0]), np.sin(angle[..., 0]),
                                  np.cos(angle[..., 1]), np.sin(angle[..., 1])], axis=-1)

    def describe(self):
        info = super().describe()
        info['period'] = self.period
        return info


# =============================================================================
# FIELD-LEVEL OPERATIONS
# =============================================================================

def transport_spinor(phi_old: 'MapField', phi_new: 'MapField', psi: np.ndarray) -> np.ndarray:
    """
    Transport spinor values tangent along phi_old to spinors tangent along
    phi_new, vertex by vertex (identity on C^2, parallel transport on R^L).

    Args:
        phi_old: Map the spinor is tangent along
        phi_new: Destination map
        psi: Spinor values (n, n, 2, L)

    Returns:
        Spinor values (n, n, 2, L) tangent along phi_new

    Raises:
        TransportError: when the maps are too far apart to transport safely
    """
    target = phi_old.target
    p = phi_old.values
    q = phi_new.values
    gap = float(np.max(target.distance(p, q), initial=0.0))
    if target.is_flat:
        gap = float(np.max(np.linalg.norm(q - p, axis=-1), initial=0.0))
    if gap >= target.injectivity_radius:
        raise TransportError(f"maps differ by {gap:.3e} >= injectivity radius "
                             f"{target.injectivity_radius:.3e}; shrink the step")
    pp = p[:, :, None, :]
    qq = q[:, :, None, :]
    moved = target.parallel_transport(pp, qq, psi)
    return target.project_spinor(q, moved)


def winding_of(phi: 'MapField') -> HomotopyClass:
    """
    Discrete homotopy class of a map, computed from its values on N only.

    Torus targets: increments between neighbouring vertices are reduced to
    (-P/2, P/2] and summed around each grid cycle. Sphere targets: the signed
    solid angles of the triangulated grid image are summed.

    Raises:
        WindingError: when an increment is too large to trust
    """
    if phi.target.is_flat:
        return HomotopyClass.torus(_torus_winding(phi))
    return HomotopyClass.sphere(_sphere_degree(phi))


def _torus_winding(phi: 'MapField') -> np.ndarray:
    period = phi.target.period
    angles = phi.target.project(phi.values)
    W = np.zeros((2, 2), dtype=int)
    for axis in (0, 1):
        step = np.roll(angles, -1, axis=axis) - angles
        step = (step + period / 2) % period - period / 2
        if float(np.abs(step).max()) > WINDING_INCREMENT_LIMIT * period:
            raise WindingError(f"ill-conditioned winding: an edge increment along axis {axis} "
                               f"exceeds {WINDING_INCREMENT_LIMIT} of the period")
        totals = step.sum(axis=axis) / period
        rounded = np.round(totals)
        if float(np.abs(totals - rounded).max()) > 1e-6 or np.ptp(rounded, axis=0).max() > 0:
            raise WindingError(f"inconsistent winding along axis {axis}")
        W[:, axis] = rounded.reshape(-1, 2)[0].astype(int)
    return W


def _sphere_degree(phi: 'MapField') -> int:
    p00 = phi.values
    p10 = np.roll(p00, -1, axis=0)
    p01 = np.roll(p00, -1, axis=1)
    p11 = np.roll(p10, -1, axis=1)
    edges = [phi.target.distance(p00, p10), phi.target.distance(p00, p01),
             phi.target.distance(p10, p11), phi.target.distance(p00, p11)]
    if max(float(e.max()) for e in edges) > DEGREE_EDGE_LIMIT:
        raise WindingError("ill-conditioned degree: grid image has edges longer than pi/2")
    total = _solid_angle(p00, p10, p11).sum() + _solid_angle(p00, p11, p01).sum()
    degree = total / (4.0 * np.pi)
    if abs(degree - round(degree)) > 1e-6:
        raise WindingError(f"non-integer degree {degree:.6f}")
    return int(round(degree))


def _solid_angle(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Signed solid angle of the spherical triangle (a, b, c)."""
    numer = _dot(a, np.cross(b, c))
    denom = 1.0 + _dot(a, b) + _dot(b, c) + _dot(c, a)
    return 2.0 * np.arctan2(numer, denom)


def check_class(phi: 'MapField', expected: HomotopyClass) -> HomotopyClass:
    """Compute the class of `phi` and raise WindingError if it differs from `expected`."""
    found = winding_of(phi)
    if found != expected:
        raise WindingError(f"map is in class {found.to_dict()}, expected {expected.to_dict()}")
    return found


# Available targets (name -> factory)
TARGETS = {
    'sphere': RoundSphere,
    'torus': FlatTorus2,
}


def get_available_targets():
    """Return list of available target names."""
    return list(TARGETS.keys())


def get_target(name: str, **params) -> TargetManifold:
    """Instantiate a target manifold by name."""
    if name not in TARGETS:
        raise ConfigurationError(f"Target '{name}' not found. Available: {get_available_targets()}",
                                 key="target.kind")
    return TARGETS[name](**params)
