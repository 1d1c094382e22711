import numpy as np
import pytest

from errors import FrequencyError, ShapeMismatchError
from geometry.domain import build_domain
from geometry.spin import (
    CLIFFORD,
    apply_one_plus_abs_dirac,
    clifford_mul,
    dirac_matrix,
    dirac_symbol,
    h_half_norm,
    plane_wave_spinor,
    resolvent_precondition,
    symbol_spectrum,
    untwisted_dirac,
)


def test_clifford_relations():
    assert CLIFFORD.anticommutator_defect() < 1e-14
    assert CLIFFORD.skew_defect() < 1e-14
    xi = np.array([1.0 + 0.5j, -0.25j])
    X = np.array([0.3, -1.2])
    # X . X . xi = -|X|^2 xi
    np.testing.assert_allclose(clifford_mul(X, clifford_mul(X, xi)), -np.dot(X, X) * xi, atol=1e-14)


@pytest.mark.parametrize("spin, frequency", [
    ((1, 1), (1.0, 2.0)),
    ((-1, 1), (0.5, -1.0)),
    ((-1, -1), (-1.5, 0.5)),
])
def test_plane_waves_are_eigenspinors(spin, frequency):
    domain = build_domain(8, 2 * np.pi, spin)
    for sign in (-1, 1):
        psi, lam = plane_wave_spinor(domain, frequency, sign=sign, target_dim=2)
        np.testing.assert_allclose(untwisted_dirac(domain, psi), lam * psi, atol=1e-12)
        assert lam == pytest.approx(sign * dirac_symbol(domain, frequency)[1])
        assert h_half_norm(domain, psi) == pytest.approx(np.sqrt(1.0 + abs(lam)), rel=1e-12)


def test_frequency_must_match_spin_structure():
    domain = build_domain(8, 2 * np.pi, (1, 1))
    with pytest.raises(FrequencyError):
        plane_wave_spinor(domain, (0.5, 0.0))


def test_sparse_matrix_matches_stencil_and_is_hermitian(rng):
    domain = build_domain(6, 3.0, (-1, 1))
    psi = rng.standard_normal((6, 6, 2, 2)) + 1j * rng.standard_normal((6, 6, 2, 2))
    D = dirac_matrix(domain, 2)
    np.testing.assert_allclose(D @ psi.ravel(), untwisted_dirac(domain, psi).ravel(), atol=1e-12)
    assert abs(D - D.conj().T).max() < 1e-14


@pytest.mark.parametrize("spin", [(1, 1), (-1, -1)])
def test_symbol_spectrum_matches_dense_eigenvalues(spin):
    domain = build_domain(6, 2 * np.pi, spin)
    dense = np.linalg.eigvalsh(dirac_matrix(domain, 1).toarray())
    np.testing.assert_allclose(np.sort(symbol_spectrum(domain, 1)), np.sort(dense), atol=1e-12)


def test_resolvent_inverts_one_plus_abs_dirac(rng):
    domain = build_domain(8, 2 * np.pi, (-1, 1))
    psi = rng.standard_normal((8, 8, 2, 3)) + 1j * rng.standard_normal((8, 8, 2, 3))
    back = resolvent_precondition(domain, apply_one_plus_abs_dirac(domain, psi))
    np.testing.assert_allclose(back, psi, atol=1e-12)


def test_spinor_shape_is_checked(domain):
    with pytest.raises(ShapeMismatchError):
        untwisted_dirac(domain, np.zeros((8, 8, 3, 2)))


def test_dirac_commutes_with_ambient_permutations(domain, rng):
    psi = rng.standard_normal(domain.grid_shape + (2, 3)) + 1j * rng.standard_normal(domain.grid_shape + (2, 3))
    order = [2, 0, 1]
    np.testing.assert_allclose(untwisted_dirac(domain, psi[..., order]), untwisted_dirac(domain, psi)[..., order],
                               atol=1e-12)


def test_h_half_norm_is_a_norm(domain, rng):
    def sample():
        shape = domain.grid_shape + (2, 2)
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    for _ in range(20):
        psi, chi = sample(), sample()
        c = complex(rng.standard_normal(), rng.standard_normal())
        assert h_half_norm(domain, psi) > 0.0
        assert h_half_norm(domain, c * psi) == pytest.approx(abs(c) * h_half_norm(domain, psi), rel=1e-10)
        assert h_half_norm(domain, psi + chi) <= h_half_norm(domain, psi) + h_half_norm(domain, chi) + 1e-12
    assert h_half_norm(domain, np.zeros(domain.grid_shape + (2, 2), dtype=complex)) == 0.0


def test_antiperiodic_axis_bounds_smallest_singular_value():
    n, side = 16, 2 * np.pi
    domain = build_domain(n, side, (-1, 1))
    smallest = np.linalg.svd(dirac_matrix(domain).toarray(), compute_uv=False).min()
    # discrete symbol of the lowest antiperiodic mode, within O(h^2) of pi / side
    assert smallest == pytest.approx(np.sin(np.pi / n) / domain.h, rel=1e-10)
    assert smallest >= (np.pi / side) * (1.0 - (np.pi / n) ** 2 / 6.0)
