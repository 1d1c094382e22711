"""
domain.py - Discrete Flat Torus Domain
Periodic n x n grid on R^2/(L Z)^2 with a spin structure, staggered
finite-difference calculus, vertex-lumped quadrature and Sobolev-type norms.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from errors import ConfigurationError, ShapeMismatchError

logger = logging.getLogger(__name__)

# Constants
MIN_RESOLUTION = 4
SPIN_STRUCTURES = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class SurfaceDomain:
    """
    Flat square torus sampled on a periodic grid.

    Attributes:
        n: Grid resolution per axis
        side_length: Torus side L (domain is R^2/(L Z)^2)
        spin_structure: (s1, s2) with +1 periodic / -1 antiperiodic spinors per axis
    """
    n: int
    side_length: float
    spin_structure: Tuple[int, int] = (1, 1)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_RESOLUTION:
            raise ConfigurationError(f"grid resolution must be an integer >= {MIN_RESOLUTION}, got {self.n}", key="n")
        if not np.isfinite(self.side_length) or self.side_length <= 0:
            raise ConfigurationError(f"side_length must be positive, got {self.side_length}", key="side_length")
        spin = tuple(int(s) for s in self.spin_structure)
        if spin not in SPIN_STRUCTURES:
            raise ConfigurationError(f"spin_structure must be a pair of +/-1, got {self.spin_structure}",
                                     key="spin_structure")
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'side_length', float(self.side_length))
        object.__setattr__(self, 'spin_structure', spin)

    @property
    def h(self) -> float:
        return self.side_length / self.n

    @property
    def vertex_count(self) -> int:
        return self.n * self.n

    @property
    def area(self) -> float:
        return self.side_length ** 2

    @property
    def weight(self) -> float:
        """Quadrature weight per vertex."""
        return self.h ** 2

    @property
    def grid_shape(self) -> Tuple[int, int]:
        return (self.n, self.n)

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Vertex coordinates (X, Y), each shaped (n, n)."""
        x = np.arange(self.n) * self.h
        return np.meshgrid(x, x, indexing='ij')

    def check(self, values: np.ndarray, name: str = "field") -> np.ndarray:
        """Return `values` as an array after verifying the leading grid axes."""
        arr = np.asarray(values)
        if arr.ndim < 2 or arr.shape[:2] != self.grid_shape:
            raise ShapeMismatchError(
                f"{name} has shape {arr.shape}; expected leading axes {self.grid_shape}"
            )
        return arr

    def describe(self) -> dict:
        return {
            'n': self.n,
            'side_length': self.side_length,
            'spin_structure': list(self.spin_structure),
            'h': self.h,
            'vertices': self.vertex_count,
        }


def build_domain(n: int, side_length: float, spin_structure: Tuple[int, int] = (1, 1)) -> SurfaceDomain:
    """
    Build a flat torus domain.

    Args:
        n: Grid resolution per axis (>= 4)
        side_length: Torus side length (> 0)
        spin_structure: Pair of signs selecting periodic/antiperiodic spinors

    Returns:
        SurfaceDomain

    Raises:
        ConfigurationError: on n < 4 or nonpositive side length
    """
    domain = SurfaceDomain(n=n, side_length=side_length, spin_structure=tuple(spin_structure))
    logger.debug("Built domain n=%d L=%g spin=%s", domain.n, domain.side_length, domain.spin_structure)
    return domain


# =============================================================================
# FIELD CARRIERS
# =============================================================================

@dataclass
class ScalarField:
    """Real scalar values on the grid vertices."""
    values: np.ndarray
    domain: SurfaceDomain

    def __post_init__(self):
        self.values = np.asarray(self.domain.check(self.values, "scalar field"), dtype=float)
        if self.values.ndim != 2:
            raise ShapeMismatchError(f"scalar field must be (n, n), got {self.values.shape}")

    def grad(self) -> np.ndarray:
        return grad(self.domain, self.values)

    def integrate(self) -> float:
        return integrate(self.domain, self.values)


@dataclass
class VectorField:
    """R^L-valued values on the grid vertices, shape (n, n, L)."""
    values: np.ndarray
    domain: SurfaceDomain
    jump: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.domain.check(self.values, "vector field"), dtype=float)
        if self.values.ndim != 3:
            raise ShapeMismatchError(f"vector field must be (n, n, L), got {self.values.shape}")

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    def grad(self) -> np.ndarray:
        return grad(self.domain, self.values, jump=self.jump)


# =============================================================================
# DIFFERENTIAL OPERATORS
# =============================================================================

def grad(domain: SurfaceDomain, f: np.ndarray, jump: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Forward (staggered) difference gradient on the periodic grid.

    Component beta lives on the edge midpoint x + h/2 e_beta. When `jump` is
    given the field is a lift that gains jump[beta] across the seam of axis
    beta, i.e. f(x + L e_beta) = f(x) + jump[beta].

    Args:
        domain: Grid the field lives on
        f: Array shaped (n, n, ...)
        jump: Optional array shaped (2, ...) of seam offsets

    Returns:
        Array shaped (2, n, n, ...)
    """
    f = domain.check(f)
    out = np.empty((2,) + f.shape, dtype=np.result_type(f, float))
    for axis in (0, 1):
        ahead = np.roll(f, -1, axis=axis)
        if jump is not None:
            index = [slice(None)] * f.ndim
            index[axis] = -1
            ahead[tuple(index)] = ahead[tuple(index)] + np.asarray(jump)[axis]
        out[axis] = (ahead - f) / domain.h
    return out


def div(domain: SurfaceDomain, v: np.ndarray) -> np.ndarray:
    """
    Backward difference divergence, the exact negative adjoint of `grad`.

    Args:
        domain: Grid the field lives on
        v: Array shaped (2, n, n, ...)

    Returns:
        Array shaped (n, n, ...)
    """
    v = np.asarray(v)
    if v.shape[0] != 2:
        raise ShapeMismatchError(f"vector field must have leading axis 2, got {v.shape}")
    domain.check(v[0], "divergence argument")
    return ((v[0] - np.roll(v[0], 1, axis=0)) + (v[1] - np.roll(v[1], 1, axis=1))) / domain.h


def laplacian(domain: SurfaceDomain, f: np.ndarray, jump: Optional[np.ndarray] = None) -> np.ndarray:
    """Five-point Laplacian div(grad f)."""
    return div(domain, grad(domain, f, jump=jump))


def integrate(domain: SurfaceDomain, f: np.ndarray):
    """
    Vertex-lumped quadrature h^2 * sum over the grid.

    Returns a float for scalar fields and an array over trailing axes otherwise.
    """
    f = domain.check(f)
    total = f.sum(axis=(0, 1)) * domain.weight
    if np.ndim(total) == 0:
        return float(total) if not np.iscomplexobj(total) else complex(total)
    return total


def inner(domain: SurfaceDomain, f: np.ndarray, g: np.ndarray) -> float:
    """Real L^2 inner product Re sum h^2 conj(f) g over every component."""
    f = domain.check(f)
    g = domain.check(g)
    if f.shape != g.shape:
        raise ShapeMismatchError(f"inner product of shapes {f.shape} and {g.shape}")
    return float(np.real(np.vdot(f, g)) * domain.weight)


def l2_norm(domain: SurfaceDomain, f: np.ndarray) -> float:
    return float(np.sqrt(max(inner(domain, f, f), 0.0)))


def pointwise_norm_sq(values: np.ndarray, skip: int = 2) -> np.ndarray:
    """Sum of |component|^2 over every axis after the first `skip` ones."""
    values = np.asarray(values)
    sq = np.abs(values) ** 2 if np.iscomplexobj(values) else values ** 2
    return sq.reshape(sq.shape[:skip] + (-1,)).sum(axis=-1)


def gradient_density(domain: SurfaceDomain, f: np.ndarray, jump: Optional[np.ndarray] = None) -> np.ndarray:
    """|df|^2 per vertex, summing the forward differences of both axes."""
    g = grad(domain, f, jump=jump)
    return pointwise_norm_sq(g[0]) + pointwise_norm_sq(g[1])


def sobolev_norm(domain: SurfaceDomain, f: np.ndarray, p: float = 2.0,
                 jump: Optional[np.ndarray] = None) -> float:
    """
    Discrete W^{1,p} norm (int |f|^p + int |df|^p)^{1/p}.

    Used to measure map perturbations in the W^{1,2 alpha} sense.
    """
    value = pointwise_norm_sq(domain.check(f)) ** (p / 2.0)
    slope = gradient_density(domain, f, jump=jump) ** (p / 2.0)
    return float((integrate(domain, value) + integrate(domain, slope)) ** (1.0 / p))


def shift(f: np.ndarray, steps: int = 1, axis: int = 0) -> np.ndarray:
    """Translate a periodic field by whole grid cells."""
    return np.roll(f, steps, axis=axis)


def periodic_distance(domain: SurfaceDomain, center: Tuple[float, float]) -> np.ndarray:
    """Distance on the torus from `center` to every vertex."""
    X, Y = domain.coordinates()
    L = domain.side_length
    dx = (X - center[0] + L / 2) % L - L / 2
    dy = (Y - center[1] + L / 2) % L - L / 2
    return np.sqrt(dx ** 2 + dy ** 2)
