"""
spectral.py - Spectrum of the Twisted Dirac Operator
Low-lying eigenpairs of D_phi on spinors tangent along phi, spectral
projections P+/P0/P-, the gap lambda+(phi) and the mountain-pass
direction e+.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from caching import cached_frequencies, field_fingerprint
from errors import SpectralError
from geometry.domain import SurfaceDomain, l2_norm
from geometry.fields import MapField, SpinorField, spinor_values
from geometry.spin import apply_one_plus_abs_dirac, dirac_matrix, l2_inner, low_frequency_part, plane_wave_spinor

from .functional import twisted_dirac

logger = logging.getLogger(__name__)

# Constants
DENSE_LIMIT = 2048          # reduced unknowns solved with dense eigh
DEFAULT_MODES = 16
ZERO_THRESHOLD_FACTOR = 1e-6
SHIFT_FACTOR = 1e-3         # shift-invert offset relative to the spectral scale
PENCIL_DIAGONAL_TOL = 1e-12

SIGNS = {'+': 1, '0': 0, '-': -1, 1: 1, 0: 0, -1: -1}


@dataclass
class SpectralData:
    """
    Eigenpairs of D_phi nearest zero.

    Attributes:
        eigenvalues: (m,) sorted by (|lambda|, lambda)
        eigenspinors: (m, n, n, 2, L), L^2-orthonormal and tangent along phi
        zero_threshold: |lambda| below this counts as kernel
        lambda_plus: Gap over the resolved positive subspace (None if empty)
        e_plus: Unit-H^{1/2} minimiser of the gap quotient (None if empty)
        residuals: ||D_phi e_i - lambda_i e_i||_2
        fingerprint: Hash of the map values the data belongs to
        method: 'fft', 'dense' or 'shift-invert'
        total_dim: Complex dimension of the tangent spinor space
        weight: Quadrature weight h^2 of the grid
        band_weights: ||P_band e_i||_2^2, the share of each mode with |theta| <= n/4
    """
    eigenvalues: np.ndarray
    eigenspinors: np.ndarray
    zero_threshold: float
    lambda_plus: Optional[float]
    e_plus: Optional[np.ndarray]
    residuals: np.ndarray
    fingerprint: str
    method: str
    total_dim: int
    weight: float
    band_weights: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return len(self.eigenvalues)

    def signs(self) -> np.ndarray:
        """+1 / 0 / -1 per mode."""
        out = np.sign(self.eigenvalues).astype(int)
        out[np.abs(self.eigenvalues) < self.zero_threshold] = 0
        return out

    def indices(self, sign) -> np.ndarray:
        if sign not in SIGNS:
            raise SpectralError(f"unknown spectral sign {sign!r}; use '+', '0' or '-'")
        return np.flatnonzero(self.signs() == SIGNS[sign])

    @property
    def kernel_dim(self) -> int:
        return int(np.sum(self.signs() == 0))

    @property
    def physical_kernel_dim(self) -> int:
        """Kernel modes inside the band |theta| <= n/4 (doublers at theta = n/2 excluded)."""
        if self.band_weights is None:
            return self.kernel_dim
        return int(round(float(np.sum(self.band_weights[self.signs() == 0]))))

    def summary(self) -> dict:
        return {
            'method': self.method,
            'modes': self.m,
            'negative': int(np.sum(self.signs() < 0)),
            'kernel': self.kernel_dim,
            'physical_kernel': self.physical_kernel_dim,
            'positive': int(np.sum(self.signs() > 0)),
            'lambda_plus': self.lambda_plus,
            'lowest_positive': float(self.eigenvalues[self.signs() > 0].min()) if np.any(self.signs() > 0) else None,
            'max_residual': float(self.residuals.max()) if self.m else 0.0,
            'zero_threshold': self.zero_threshold,
        }

    def to_frame(self) -> pd.DataFrame:
        """(index, eigenvalue, residual, band_weight) rows sorted by |eigenvalue|."""
        frame = pd.DataFrame({
            'index': np.arange(self.m),
            'eigenvalue': self.eigenvalues,
            'residual': self.residuals,
        })
        if self.band_weights is not None:
            frame['band_weight'] = self.band_weights
        return frame


@dataclass
class ProjectionResult:
    """Projected spinor with a flag set when psi is not fully inside the resolved span."""
    values: np.ndarray
    partial: bool
    resolved_fraction: float


# =============================================================================
# EIGENSOLVES
# =============================================================================

def dirac_spectrum(phi: MapField, m: int = DEFAULT_MODES, zero_threshold: Optional[float] = None) -> SpectralData:
    """
    The m eigenpairs of D_phi with smallest |lambda|.

    Flat targets have a constant projector, so plane waves diagonalise D_phi
    exactly; curved targets use the frame-reduced sparse operator.

    Args:
        phi: Map the spinors are tangent along
        m: Number of eigenpairs
        zero_threshold: Kernel cut-off; defaults to 1e-6 * 2 pi / side_length

    Returns:
        SpectralData including lambda+ and e+ when positive modes are resolved

    Raises:
        SpectralError: on m < 1 or eigensolver failure
    """
    domain = phi.domain
    total = domain.vertex_count * 2 * phi.target.intrinsic_dim
    if m < 1:
        raise SpectralError(f"need at least one eigenpair, got m={m}")
    m = min(m, total)
    if zero_threshold is None:
        zero_threshold = ZERO_THRESHOLD_FACTOR * 2.0 * np.pi / domain.side_length

    if phi.target.is_flat:
        eigenvalues, eigenspinors = _flat_spectrum(domain, phi.dim, m)
        method = 'fft'
    else:
        eigenvalues, eigenspinors, method = _reduced_spectrum(phi, m, zero_threshold)

    residuals = np.array([
        l2_norm(domain, twisted_dirac(phi, e) - lam * e) for lam, e in zip(eigenvalues, eigenspinors)
    ])
    band_weights = np.array([
        np.real(l2_inner(domain, e, low_frequency_part(domain, e))) for e in eigenspinors
    ])
    data = SpectralData(eigenvalues=eigenvalues, eigenspinors=eigenspinors, zero_threshold=zero_threshold,
                        lambda_plus=None, e_plus=None, residuals=residuals,
                        fingerprint=field_fingerprint(phi.values), method=method, total_dim=total,
                        weight=domain.weight, band_weights=band_weights)
    positive = data.indices('+')
    if positive.size:
        data.lambda_plus, data.e_plus = _solve_gap(domain, eigenvalues[positive], eigenspinors[positive])
    logger.debug("dirac_spectrum: %s, m=%d, kernel=%d, lambda+=%s", method, m, data.kernel_dim, data.lambda_plus)
    return data


def _flat_spectrum(domain: SurfaceDomain, target_dim: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    fx, fy = cached_frequencies(domain.n, domain.spin_structure)
    candidates = []
    for theta_x in fx:
        for theta_y in fy:
            s = np.hypot(np.sin(2 * np.pi * theta_x / domain.n), np.sin(2 * np.pi * theta_y / domain.n)) / domain.h
            for sign in (-1, 1):
                for comp in range(target_dim):
                    candidates.append((abs(s), sign * s, sign, float(theta_x), float(theta_y), comp))
    candidates.sort(key=lambda c: (round(c[0], 12), round(c[1], 12), c[3], c[4], c[2], c[5]))
    eigenvalues = np.empty(m)
    eigenspinors = np.empty((m,) + domain.grid_shape + (2, target_dim), dtype=complex)
    for i, (_, _, sign, theta_x, theta_y, comp) in enumerate(candidates[:m]):
        values, lam = plane_wave_spinor(domain, (theta_x, theta_y), sign=sign, component=comp, target_dim=target_dim)
        eigenvalues[i] = lam
        eigenspinors[i] = values
    return eigenvalues, eigenspinors


def frame_matrix(phi: MapField) -> sp.csr_matrix:
    """Sparse map from frame coordinates (n, n, 2, 2) to ambient spinors (n, n, 2, L)."""
    n = phi.domain.n
    L = phi.dim
    frame = phi.frame()
    I, J, A, Lx, K = np.meshgrid(np.arange(n), np.arange(n), np.arange(2), np.arange(L), np.arange(2),
                                 indexing='ij')
    rows = ((I * n + J) * 2 + A) * L + Lx
    cols = ((I * n + J) * 2 + A) * 2 + K
    data = frame[I, J, Lx, K]
    return sp.csr_matrix((data.ravel(), (rows.ravel(), cols.ravel())), shape=(n * n * 2 * L, n * n * 4))


def _reduced_spectrum(phi: MapField, m: int, zero_threshold: float):
    domain = phi.domain
    T = frame_matrix(phi)
    A = (T.T @ dirac_matrix(domain, phi.dim) @ T).tocsc()
    N = A.shape[0]
    if N <= DENSE_LIMIT:
        w, V = la.eigh(A.toarray())
        method = 'dense'
    else:
        sigma = SHIFT_FACTOR * 2.0 * np.pi / domain.side_length
        try:
            w, V = eigsh(A, k=m, sigma=sigma, which='LM')
            method = 'shift-invert'
        except (ArpackNoConvergence, ArpackError, RuntimeError) as exc:
            logger.warning("shift-invert eigsh failed (%s); retrying with which='SM'", exc)
            try:
                w, V = eigsh(A, k=m, which='SM', maxiter=20 * N)
                method = 'smallest-magnitude'
            except (ArpackNoConvergence, ArpackError) as exc2:
                raise SpectralError(f"eigensolver did not converge for N={N}, m={m}: {exc2}") from exc2
    order = np.lexsort((w, np.abs(w)))[:m]
    w = w[order]
    V = V[:, order]
    shape = domain.grid_shape + (2, phi.dim)
    spinors = np.stack([(T @ V[:, i]).reshape(shape) / domain.h for i in range(V.shape[1])])
    return np.asarray(w, dtype=float), spinors, method


def _solve_gap(domain: SurfaceDomain, eigenvalues: np.ndarray, eigenspinors: np.ndarray) -> Tuple[float, np.ndarray]:
    """Minimise Re(psi, D psi) over the span with ||psi||_{1/2,2} = 1 as a Hermitian pencil."""
    weighted = np.stack([apply_one_plus_abs_dirac(domain, e) for e in eigenspinors])
    p = len(eigenvalues)
    flat_e = eigenspinors.reshape(p, -1)
    B = (np.conj(flat_e) @ weighted.reshape(p, -1).T) * domain.weight
    B = 0.5 * (B + B.conj().T)
    diag = np.real(np.diag(B))
    off = B - np.diag(np.diag(B))
    if float(np.abs(off).max(initial=0.0)) <= PENCIL_DIAGONAL_TOL * float(diag.max()):
        ratios = eigenvalues / diag
        i = int(np.argmin(ratios))
        return float(ratios[i]), eigenspinors[i] / np.sqrt(diag[i])
    w, Y = la.eigh(np.diag(eigenvalues).astype(complex), B)
    vector = np.tensordot(Y[:, 0], eigenspinors, axes=1)
    return float(w[0]), vector


# =============================================================================
# PROJECTIONS & GAP
# =============================================================================

def spectral_projection(data: SpectralData, psi: Union[SpinorField, np.ndarray], sign,
                        phi: Optional[MapField] = None) -> ProjectionResult:
    """
    Project psi onto the resolved eigenspinors of the given sign.

    Args:
        data: Spectral data of the map psi is tangent along
        psi: Spinor (a SpinorField carries its own map)
        sign: '+', '0' or '-'
        phi: Map to verify against the data fingerprint

    Raises:
        SpectralError: when the data was computed for another map
    """
    if phi is None and isinstance(psi, SpinorField):
        phi = psi.phi
    if phi is not None and field_fingerprint(phi.values) != data.fingerprint:
        raise SpectralError("spectral data belongs to a different map; recompute the spectrum")
    values = spinor_values(psi)
    E = data.eigenspinors
    weight = data.weight
    coeffs = (np.conj(E.reshape(data.m, -1)) @ values.ravel()) * weight
    selected = data.indices(sign)
    projected = np.tensordot(coeffs[selected], E[selected], axes=1) if selected.size else np.zeros_like(values)
    resolved = np.tensordot(coeffs, E, axes=1)
    norm = float(np.sqrt(np.sum(np.abs(values) ** 2) * weight))
    remainder = float(np.sqrt(np.sum(np.abs(values - resolved) ** 2) * weight))
    partial = remainder > 1e-10 * max(norm, np.finfo(float).tiny)
    fraction = float(np.sqrt(np.sum(np.abs(resolved) ** 2) * weight)) / norm if norm > 0 else 1.0
    return ProjectionResult(values=projected, partial=bool(partial), resolved_fraction=fraction)


def lambda_plus(phi: MapField, data: SpectralData) -> float:
    """
    inf Re(psi, D_phi psi)_2 over the resolved positive subspace with ||psi||_{1/2,2} = 1.

    Raises:
        SpectralError: when no positive mode is resolved or the data is stale
    """
    if field_fingerprint(phi.values) != data.fingerprint:
        raise SpectralError("spectral data belongs to a different map; recompute the spectrum")
    if data.lambda_plus is None:
        raise SpectralError(f"no positive eigenvalue among the {data.m} resolved modes; increase m")
    return data.lambda_plus


def stabilised_lambda_plus(phi: MapField, m: int = DEFAULT_MODES, rtol: float = 1e-6, max_modes: int = 256,
                           zero_threshold: Optional[float] = None) -> Tuple[float, SpectralData]:
    """Double m until lambda+ changes by less than rtol (relative)."""
    data = dirac_spectrum(phi, m, zero_threshold)
    previous = data.lambda_plus
    while m < min(max_modes, data.total_dim):
        m = min(2 * m, data.total_dim)
        data = dirac_spectrum(phi, m, zero_threshold)
        if previous is not None and data.lambda_plus is not None \
                and abs(data.lambda_plus - previous) <= rtol * abs(previous):
            break
        previous = data.lambda_plus
    if data.lambda_plus is None:
        raise SpectralError(f"no positive eigenvalue among {data.m} modes")
    return data.lambda_plus, data
