"""
spin.py - Spinor Algebra on the Flat Torus
Clifford frame, spinor fields with values in C^2 (x) R^L, the untwisted
Dirac operator with spin-structure seams, its Fourier symbol and the
functional calculus (1 + |D|)^{-1} used by the vertical gradient.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from caching import cached_abs_symbol, cached_frequencies, cached_twist
from errors import FrequencyError, ShapeMismatchError
from .domain import SurfaceDomain

logger = logging.getLogger(__name__)

# Pauli matrices
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)

SPINOR_AXIS = 2
FREQUENCY_TOL = 1e-12


@dataclass(frozen=True)
class CliffordFrame:
    """Clifford multiplication by the two orthonormal frame vectors, e_beta = i sigma_beta."""
    e1: np.ndarray
    e2: np.ndarray

    @property
    def generators(self) -> Tuple[np.ndarray, np.ndarray]:
        return (self.e1, self.e2)

    def anticommutator_defect(self) -> float:
        """max |e_b e_c + e_c e_b + 2 delta_bc Id| over both indices."""
        eye = np.eye(2)
        worst = 0.0
        for b, eb in enumerate(self.generators):
            for c, ec in enumerate(self.generators):
                target = -2.0 * eye if b == c else np.zeros((2, 2))
                worst = max(worst, float(np.abs(eb @ ec + ec @ eb - target).max()))
        return worst

    def skew_defect(self) -> float:
        """max |e + e^H|; zero for skew-adjoint multiplication."""
        return max(float(np.abs(e + e.conj().T).max()) for e in self.generators)


CLIFFORD = CliffordFrame(e1=1j * SIGMA_1, e2=1j * SIGMA_2)


def clifford_mul(X: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """
    Clifford multiplication X . xi for a tangent 2-vector X and spinor xi.

    Args:
        X: Array (..., 2) of tangent vectors
        xi: Array (..., 2) of C^2 spinors

    Returns:
        Array (..., 2)
    """
    X = np.asarray(X, dtype=float)
    xi = np.asarray(xi, dtype=complex)
    return (X[..., 0:1] * (xi @ CLIFFORD.e1.T)) + (X[..., 1:2] * (xi @ CLIFFORD.e2.T))


def apply_spin_matrix(matrix: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix on the spinor axis of a (n, n, 2, L) array."""
    return np.einsum('ab,ijbl->ijal', matrix, psi)


# =============================================================================
# SPINOR FIELDS
# =============================================================================

@dataclass
class PlainSpinorField:
    """Spinor field with values in C^2 (x) R^L, shape (n, n, 2, L); no tangency constraint."""
    values: np.ndarray
    domain: SurfaceDomain

    def __post_init__(self):
        arr = np.asarray(self.domain.check(self.values, "spinor field"), dtype=complex)
        if arr.ndim != 4 or arr.shape[SPINOR_AXIS] != 2:
            raise ShapeMismatchError(f"spinor field must be (n, n, 2, L), got {arr.shape}")
        self.values = arr

    @property
    def target_dim(self) -> int:
        return self.values.shape[3]

    @classmethod
    def zeros(cls, domain: SurfaceDomain, target_dim: int) -> 'PlainSpinorField':
        return cls(np.zeros(domain.grid_shape + (2, target_dim), dtype=complex), domain)

    def dirac(self) -> 'PlainSpinorField':
        return PlainSpinorField(untwisted_dirac(self.domain, self.values), self.domain)

    def precondition(self) -> 'PlainSpinorField':
        return PlainSpinorField(resolvent_precondition(self.domain, self.values), self.domain)

    def h_half_norm(self) -> float:
        return h_half_norm(self.domain, self.values)


def check_spinor(domain: SurfaceDomain, psi: np.ndarray) -> np.ndarray:
    psi = domain.check(psi, "spinor field")
    if psi.ndim != 4 or psi.shape[SPINOR_AXIS] != 2:
        raise ShapeMismatchError(f"spinor field must be (n, n, 2, L), got {psi.shape}")
    return psi


def central_difference(domain: SurfaceDomain, psi: np.ndarray, axis: int) -> np.ndarray:
    """
    Symmetric difference (psi(x+h) - psi(x-h)) / 2h along `axis`.

    Values crossing the seam pick up the spin-structure sign of that axis.
    """
    sign = domain.spin_structure[axis]
    ahead = np.roll(psi, -1, axis=axis)
    behind = np.roll(psi, 1, axis=axis)
    if sign < 0:
        last = [slice(None)] * psi.ndim
        first = [slice(None)] * psi.ndim
        last[axis] = -1
        first[axis] = 0
        ahead[tuple(last)] *= -1
        behind[tuple(first)] *= -1
    return (ahead - behind) / (2.0 * domain.h)


def untwisted_dirac(domain: SurfaceDomain, psi: np.ndarray) -> np.ndarray:
    """
    Untwisted Dirac operator D psi = sum_beta e_beta . d_beta psi acting componentwise on R^L.

    Args:
        domain: Grid with spin structure
        psi: Array (n, n, 2, L)

    Returns:
        Array (n, n, 2, L)
    """
    psi = check_spinor(domain, np.asarray(psi, dtype=complex))
    out = apply_spin_matrix(CLIFFORD.e1, central_difference(domain, psi, 0))
    out += apply_spin_matrix(CLIFFORD.e2, central_difference(domain, psi, 1))
    return out


# =============================================================================
# FOURIER SYMBOL & FUNCTIONAL CALCULUS
# =============================================================================

def symbol_components(domain: SurfaceDomain, frequency: Tuple[float, float]) -> np.ndarray:
    """
    Sine symbol (s_1, s_2) of the central difference at an admissible frequency.

    Raises:
        FrequencyError: when a component is not integer (periodic axis) or
            half-integer (antiperiodic axis)
    """
    comps = []
    for axis, theta in enumerate(frequency):
        offset = 0.0 if domain.spin_structure[axis] > 0 else 0.5
        if abs((theta - offset) - round(theta - offset)) > FREQUENCY_TOL:
            kind = "integer" if offset == 0.0 else "half-integer"
            raise FrequencyError(
                f"frequency {tuple(frequency)} not admissible: axis {axis} needs a {kind} value "
                f"for spin structure {domain.spin_structure}"
            )
        comps.append(np.sin(2.0 * np.pi * theta / domain.n) / domain.h)
    return np.array(comps)


def symbol_matrix(domain: SurfaceDomain, frequency: Tuple[float, float]) -> np.ndarray:
    """2x2 Fourier symbol -(s_1 sigma_1 + s_2 sigma_2) of the untwisted Dirac operator."""
    s = symbol_components(domain, frequency)
    return -(s[0] * SIGMA_1 + s[1] * SIGMA_2)


def dirac_symbol(domain: SurfaceDomain, frequency: Tuple[float, float]) -> Tuple[float, float]:
    """
    Exact eigenvalues (-|s|, +|s|) of the stencil symbol at a lattice frequency.

    Args:
        domain: Grid with spin structure
        frequency: Lattice momentum pair theta (integer or half-integer per axis)

    Returns:
        Pair (minus, plus)
    """
    mag = float(np.linalg.norm(symbol_components(domain, frequency)))
    return (-mag, mag)


def admissible_frequencies(domain: SurfaceDomain) -> np.ndarray:
    """All admissible frequency pairs, shape (n*n, 2), in FFT order."""
    fx, fy = cached_frequencies(domain.n, domain.spin_structure)
    FX, FY = np.meshgrid(fx, fy, indexing='ij')
    return np.stack([FX.ravel(), FY.ravel()], axis=1)


def symbol_spectrum(domain: SurfaceDomain, target_dim: int = 1, band: Optional[float] = None) -> np.ndarray:
    """
    Sorted eigenvalues of the untwisted operator predicted by the symbol.

    Args:
        domain: Grid with spin structure
        target_dim: Number of R^L components (multiplicity factor)
        band: If given, keep only frequencies with |theta_beta| <= band on both axes

    Returns:
        Array of eigenvalues sorted by (|lambda|, lambda)
    """
    freqs = admissible_frequencies(domain)
    if band is not None:
        freqs = freqs[np.all(np.abs(freqs) <= band, axis=1)]
    values = []
    for theta in freqs:
        lo, hi = dirac_symbol(domain, tuple(theta))
        values.extend([lo, hi] * target_dim)
    values = np.array(values)
    order = np.lexsort((values, np.abs(values)))
    return values[order]


def plane_wave_spinor(domain: SurfaceDomain, frequency: Tuple[float, float], sign: int = 1,
                      component: int = 0, target_dim: int = 1) -> Tuple[np.ndarray, float]:
    """
    Unit-L^2 eigenspinor u e^{i k.x} (x) e_component of the untwisted operator.

    Args:
        domain: Grid with spin structure
        frequency: Admissible lattice frequency
        sign: +1 for the eigenvalue +|s|, -1 for -|s|
        component: Ambient component carrying the spinor
        target_dim: Ambient dimension L

    Returns:
        Tuple of (values (n, n, 2, L), eigenvalue)
    """
    M = symbol_matrix(domain, frequency)
    mag = float(np.linalg.norm(symbol_components(domain, frequency)))
    if mag == 0.0:
        u = np.array([1.0, 0.0], dtype=complex) if sign > 0 else np.array([0.0, 1.0], dtype=complex)
        eigenvalue = 0.0
    else:
        w, V = np.linalg.eigh(M)
        idx = 1 if sign > 0 else 0
        u = V[:, idx]
        eigenvalue = float(w[idx])
    idx = np.arange(domain.n)
    I, J = np.meshgrid(idx, idx, indexing='ij')
    phase = np.exp(2j * np.pi * (frequency[0] * I + frequency[1] * J) / domain.n)
    values = np.zeros(domain.grid_shape + (2, target_dim), dtype=complex)
    values[:, :, :, component] = phase[:, :, None] * u[None, None, :]
    values /= np.sqrt(domain.area)
    return values, eigenvalue


def functional_calculus(domain: SurfaceDomain, psi: np.ndarray,
                        multiplier: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """
    Apply f(|D|) by Fourier diagonalisation.

    Antiperiodic axes are untwisted by the phase e^{-i pi j/n} before the FFT,
    so half-integer frequencies land on the FFT grid.
    """
    psi = check_spinor(domain, np.asarray(psi, dtype=complex))
    twist = cached_twist(domain.n, domain.spin_structure)[:, :, None, None]
    abs_symbol = cached_abs_symbol(domain.n, domain.side_length, domain.spin_structure)
    coeffs = np.fft.fft2(psi * np.conj(twist), axes=(0, 1))
    coeffs *= multiplier(abs_symbol)[:, :, None, None]
    return np.fft.ifft2(coeffs, axes=(0, 1)) * twist


def low_frequency_part(domain: SurfaceDomain, psi: np.ndarray) -> np.ndarray:
    """
    Keep the Fourier modes with |theta_x|, |theta_y| <= n/4.

    The central difference also vanishes at theta = n/2; those doubler
    modes fall outside the band.
    """
    psi = check_spinor(domain, np.asarray(psi, dtype=complex))
    twist = cached_twist(domain.n, domain.spin_structure)[:, :, None, None]
    fx, fy = cached_frequencies(domain.n, domain.spin_structure)
    band = np.outer(np.abs(fx) <= domain.n / 4, np.abs(fy) <= domain.n / 4)
    coeffs = np.fft.fft2(psi * np.conj(twist), axes=(0, 1))
    coeffs *= band[:, :, None, None]
    return np.fft.ifft2(coeffs, axes=(0, 1)) * twist


def resolvent_precondition(domain: SurfaceDomain, psi: np.ndarray) -> np.ndarray:
    """Apply (1 + |D|)^{-1}, the H^{1/2} Riesz map used by the vertical gradient."""
    return functional_calculus(domain, psi, lambda s: 1.0 / (1.0 + s))


def apply_one_plus_abs_dirac(domain: SurfaceDomain, psi: np.ndarray) -> np.ndarray:
    """Apply (1 + |D|)."""
    return functional_calculus(domain, psi, lambda s: 1.0 + s)


def apply_abs_dirac(domain: SurfaceDomain, psi: np.ndarray) -> np.ndarray:
    return functional_calculus(domain, psi, lambda s: s)


def l2_inner(domain: SurfaceDomain, psi: np.ndarray, chi: np.ndarray) -> complex:
    """Complex L^2 product (psi, chi) = sum h^2 conj(psi) chi."""
    return complex(np.vdot(psi, chi) * domain.weight)


def h_half_inner(domain: SurfaceDomain, psi: np.ndarray, chi: np.ndarray) -> float:
    """Real H^{1/2} product Re((1 + |D|) psi, chi)_2."""
    return float(np.real(l2_inner(domain, apply_one_plus_abs_dirac(domain, psi), chi)))


def h_half_norm_sq(domain: SurfaceDomain, psi: np.ndarray) -> float:
    return max(h_half_inner(domain, psi, psi), 0.0)


def h_half_norm(domain: SurfaceDomain, psi: np.ndarray) -> float:
    """||psi||_{1/2,2} = sqrt(Re((1 + |D|) psi, psi)_2)."""
    return float(np.sqrt(h_half_norm_sq(domain, psi)))


# =============================================================================
# SPARSE ASSEMBLY
# =============================================================================

def central_difference_matrix(domain: SurfaceDomain, axis: int) -> sp.csr_matrix:
    """Sparse (n^2 x n^2) matrix of `central_difference` along `axis` on scalar data."""
    n = domain.n
    sign = domain.spin_structure[axis]
    forward = sp.diags([np.ones(n - 1)], [1], shape=(n, n), format='lil')
    forward[n - 1, 0] = sign
    backward = sp.diags([np.ones(n - 1)], [-1], shape=(n, n), format='lil')
    backward[0, n - 1] = sign
    one_d = (forward.tocsr() - backward.tocsr()) / (2.0 * domain.h)
    eye = sp.identity(n, format='csr')
    if axis == 0:
        return sp.kron(one_d, eye, format='csr')
    return sp.kron(eye, one_d, format='csr')


def dirac_matrix(domain: SurfaceDomain, target_dim: int = 1) -> sp.csr_matrix:
    """
    Sparse Hermitian matrix of the untwisted operator on C^{n*n*2*L}.

    Unknowns are ordered like the C-order reshape of a (n, n, 2, L) array.
    """
    D = (sp.kron(central_difference_matrix(domain, 0), CLIFFORD.e1)
         + sp.kron(central_difference_matrix(domain, 1), CLIFFORD.e2))
    if target_dim > 1:
        D = sp.kron(D, sp.identity(target_dim), format='csr')
    return D.tocsr()
