import numpy as np
import pytest

from errors import SpectralError
from geometry.domain import build_domain
from geometry.fields import affine_map, constant_map
from geometry.spin import h_half_norm, symbol_spectrum
from geometry.target import RoundSphere
from variational import dirac_spectrum, lambda_plus, spectral_projection, stabilised_lambda_plus


def _lowest_symbol(domain):
    return np.sqrt(2.0) * np.sin(np.pi / domain.n) / domain.h


def test_flat_spectrum_without_kernel(antiperiodic_identity):
    data = dirac_spectrum(antiperiodic_identity, 16)
    assert data.method == 'fft'
    assert data.kernel_dim == 0
    assert data.residuals.max() < 1e-12
    s = _lowest_symbol(antiperiodic_identity.domain)
    np.testing.assert_allclose(np.abs(data.eigenvalues), s, rtol=1e-12)
    assert data.lambda_plus == pytest.approx(s / (1.0 + s), rel=1e-12)
    assert h_half_norm(antiperiodic_identity.domain, data.e_plus) == pytest.approx(1.0, rel=1e-12)
    summary = data.summary()
    assert summary['positive'] == summary['negative'] == 8


def test_periodic_spin_structure_has_kernel(identity_map):
    data = dirac_spectrum(identity_map, 24)
    # constant spinors and the theta = n/2 doublers
    assert data.kernel_dim == 16
    assert np.all(np.abs(data.eigenvalues[:16]) < data.zero_threshold)
    # only the constant spinors lie in the band |theta| <= n/4
    assert data.physical_kernel_dim == 2 * identity_map.dim
    assert data.summary()['physical_kernel'] == 4
    weights = data.to_frame()['band_weight']
    assert sorted(np.round(weights[:16], 12)) == [0.0] * 12 + [1.0] * 4


@pytest.mark.parametrize('spin_structure', [(-1, 1), (1, -1), (-1, -1)])
def test_twisted_spin_structures_have_no_kernel(spin_structure, torus):
    phi = affine_map(build_domain(8, 2 * np.pi, spin_structure), torus)
    data = dirac_spectrum(phi, 24)
    assert data.kernel_dim == 0
    assert data.physical_kernel_dim == 0


def test_sphere_constant_map_reduces_to_flat_symbol():
    domain = build_domain(4, 2 * np.pi)
    phi = constant_map(domain, RoundSphere(), [0.0, 0.0, 1.0])
    data = dirac_spectrum(phi, 48)
    assert data.method == 'dense'
    expected = symbol_spectrum(domain, 2)[:48]
    np.testing.assert_allclose(np.sort(data.eigenvalues), np.sort(expected), atol=1e-10)
    assert data.residuals.max() < 1e-10
    s = 1.0 / domain.h
    assert data.lambda_plus == pytest.approx(s / (1.0 + s), rel=1e-10)


def test_projections_split_resolved_spinors(antiperiodic_identity, rng):
    data = dirac_spectrum(antiperiodic_identity, 16)
    coeffs = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    psi = np.tensordot(coeffs, data.eigenspinors, axes=1)
    plus = spectral_projection(data, psi, '+', phi=antiperiodic_identity)
    minus = spectral_projection(data, psi, '-', phi=antiperiodic_identity)
    zero = spectral_projection(data, psi, '0', phi=antiperiodic_identity)
    assert not plus.partial
    np.testing.assert_allclose(plus.values + minus.values + zero.values, psi, atol=1e-12)
    np.testing.assert_allclose(zero.values, 0.0, atol=1e-14)
    with pytest.raises(SpectralError):
        spectral_projection(data, psi, 'up')


def test_stale_spectral_data_is_rejected(antiperiodic_identity):
    data = dirac_spectrum(antiperiodic_identity, 8)
    other = affine_map(antiperiodic_identity.domain, antiperiodic_identity.target, offset=(0.1, 0.0))
    with pytest.raises(SpectralError):
        lambda_plus(other, data)
    with pytest.raises(SpectralError):
        spectral_projection(data, data.eigenspinors[0], '+', phi=other)
    assert lambda_plus(antiperiodic_identity, data) == data.lambda_plus


def test_stabilised_gap_and_mode_count(antiperiodic_identity):
    value, data = stabilised_lambda_plus(antiperiodic_identity, m=8, max_modes=64)
    assert value == pytest.approx(dirac_spectrum(antiperiodic_identity, 16).lambda_plus, rel=1e-12)
    assert data.m >= 16
    with pytest.raises(SpectralError):
        dirac_spectrum(antiperiodic_identity, 0)
