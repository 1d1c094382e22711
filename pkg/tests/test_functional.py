import numpy as np
import pytest

from errors import ConfigurationError, TangencyError
from geometry.domain import build_domain
from geometry.fields import random_smooth_map, random_tangent_field, random_tangent_spinor
from geometry.spin import l2_inner, plane_wave_spinor
from variational import (
    ActionConfig,
    ContinuationSchedule,
    SolverConfig,
    action,
    alpha_energy,
    convexity_lower_bound,
    dirac_action,
    get_perturbation,
    horizontal_gradient,
    residual_norms,
    second_variation,
    twisted_dirac,
)


def test_default_mu_and_alpha_window():
    config = ActionConfig(alpha=1.5)
    assert config.mu == pytest.approx(2.4)
    assert config.existence_window()['satisfied']
    with pytest.raises(ConfigurationError) as info:
        ActionConfig(alpha=2.0)
    assert info.value.key == "action.mu"
    ActionConfig(alpha=2.0, mu=3.0)
    with pytest.raises(ConfigurationError):
        ActionConfig(alpha=1.0)
    with pytest.raises(ConfigurationError):
        ActionConfig.from_k(0.0, alpha=1.5)
    assert ActionConfig.from_k(8, alpha=1.5).perturbation_scale == pytest.approx(0.125)


def test_solver_and_schedule_validation():
    with pytest.raises(ConfigurationError):
        SolverConfig(pseudo_gradient_a=2.0)
    with pytest.raises(ConfigurationError):
        ContinuationSchedule(alphas=[1.2, 1.5])
    with pytest.raises(ConfigurationError):
        ContinuationSchedule(ks=[8, 4])
    with pytest.raises(ConfigurationError):
        ContinuationSchedule(branch='sideways')


def test_unknown_perturbation():
    with pytest.raises(ConfigurationError) as info:
        get_perturbation('cubic')
    assert info.value.key == "action.perturbation"


def test_alpha_energy_of_constant_and_identity(domain, identity_map, north_pole_map):
    assert alpha_energy(north_pole_map, 1.7) == pytest.approx(0.5 * domain.area)
    # forward differences of the identity lift are exact: |d phi|^2 = 2
    assert alpha_energy(identity_map, 1.5) == pytest.approx(0.5 * domain.area * 3.0 ** 1.5, rel=1e-12)
    with pytest.raises(ConfigurationError):
        alpha_energy(identity_map, 0.5)


def test_identity_is_critical_with_zero_spinor(identity_map):
    psi = np.zeros(identity_map.domain.grid_shape + (2, 2), dtype=complex)
    gh, gv = residual_norms(identity_map, psi, ActionConfig(alpha=1.3, perturbation_scale=0.5))
    assert gh < 1e-10
    assert gv == 0.0


def test_dirac_action_of_plane_wave(antiperiodic_identity):
    domain = antiperiodic_identity.domain
    psi, lam = plane_wave_spinor(domain, (0.5, 1.5), sign=1, component=1, target_dim=2)
    assert dirac_action(antiperiodic_identity, psi) == pytest.approx(0.5 * lam, rel=1e-12)
    value = action(antiperiodic_identity, psi, ActionConfig(alpha=1.5))
    assert value.total == pytest.approx(value.alpha_energy + 0.5 * lam)
    assert value.perturbation == 0.0


def test_perturbation_enters_with_negative_sign(antiperiodic_identity):
    domain = antiperiodic_identity.domain
    psi, _ = plane_wave_spinor(domain, (0.5, 0.5), target_dim=2)
    config = ActionConfig(alpha=1.5, perturbation_scale=0.25, mu=4.0)
    value = action(antiperiodic_identity, psi, config)
    # |psi|^2 = 1 / area at every vertex
    assert value.perturbation == pytest.approx(1.0 / domain.area, rel=1e-12)
    assert value.total == pytest.approx(value.alpha_energy + value.dirac_action - 0.25 / domain.area)


def test_dirac_requires_tangent_spinors(north_pole_map):
    psi = np.zeros(north_pole_map.domain.grid_shape + (2, 3), dtype=complex)
    psi[..., 0, 2] = 1.0
    with pytest.raises(TangencyError):
        twisted_dirac(north_pole_map, psi)
    with pytest.raises(TangencyError):
        horizontal_gradient(north_pole_map, psi, ActionConfig(alpha=1.5))


def test_second_variation_matches_energy_curvature(domain, torus, rng):
    phi = random_smooth_map(domain, torus, rng, amplitude=0.1, winding=((1, 0), (0, 1)))
    V = random_tangent_field(phi, rng)
    alpha = 1.4
    t = 1e-3
    energies = [alpha_energy(phi.with_values(phi.values + s * V), alpha) for s in (-t, 0.0, t)]
    numeric = (energies[0] - 2.0 * energies[1] + energies[2]) / t ** 2
    analytic = second_variation(phi, V, V, alpha)
    assert numeric == pytest.approx(analytic, rel=1e-5)
    assert analytic == pytest.approx(convexity_lower_bound(phi, V, alpha), rel=1e-12)
    assert analytic > 0.0


def test_second_variation_is_symmetric_on_sphere(domain, sphere, rng):
    phi = random_smooth_map(domain, sphere, rng, amplitude=0.2)
    V = random_tangent_field(phi, rng)
    W = random_tangent_field(phi, rng)
    assert second_variation(phi, V, W, 1.5) == pytest.approx(second_variation(phi, W, V, 1.5), rel=1e-10)
    with pytest.raises(TangencyError):
        second_variation(phi, phi.values, W, 1.5)


@pytest.mark.parametrize("spin", [(1, 1), (-1, 1), (-1, -1)])
def test_twisted_dirac_is_symmetric_on_sphere_maps(sphere, rng, spin):
    domain = build_domain(8, 2 * np.pi, spin)
    phi = random_smooth_map(domain, sphere, rng, amplitude=0.2)
    psi = random_tangent_spinor(phi, rng)
    chi = random_tangent_spinor(phi, rng)
    left = np.real(l2_inner(domain, twisted_dirac(phi, psi), chi))
    right = np.real(l2_inner(domain, psi, twisted_dirac(phi, chi)))
    assert left == pytest.approx(right, rel=1e-10, abs=1e-12)
