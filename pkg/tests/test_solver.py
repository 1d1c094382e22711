import numpy as np
import pytest

import variational.solver as solver_module
from errors import ConvergenceError
from geometry.fields import random_smooth_map, random_tangent_spinor
from geometry.target import HomotopyClass, winding_of
from variational import (
    ActionConfig,
    ContinuationSchedule,
    SolverConfig,
    continuation_run,
    minimize_alpha_energy,
    mountain_pass_init,
    newton_solve,
    pseudo_gradient_flow,
)

SADDLE_CONFIG = dict(alpha=1.5, perturbation_scale=0.25, mu=4.0)


def test_minimiser_reaches_affine_energy(domain, torus, rng):
    phi0 = random_smooth_map(domain, torus, rng, amplitude=0.05, winding=((1, 0), (0, 1)))
    point = minimize_alpha_energy(phi0, 1.2)
    assert point.converged
    assert point.classification == 'minimizer'
    assert not point.nontrivial
    assert point.action.alpha_energy == pytest.approx(0.5 * domain.area * 3.0 ** 1.2, rel=1e-10)
    assert point.homotopy_class == HomotopyClass.torus(((1, 0), (0, 1)))
    energies = point.history_frame()['energy']
    assert energies.iloc[-1] <= energies.iloc[0]


def test_minimiser_raises_on_iteration_cap(domain, torus, rng):
    phi0 = random_smooth_map(domain, torus, rng, amplitude=0.1, winding=((1, 0), (0, 1)))
    with pytest.raises(ConvergenceError) as info:
        minimize_alpha_energy(phi0, 1.5, SolverConfig(max_iters=1))
    assert 'gradient_norm' in info.value.diagnostics


def test_mountain_pass_needs_a_perturbation(antiperiodic_identity):
    with pytest.raises(ConvergenceError):
        mountain_pass_init(antiperiodic_identity, ActionConfig(alpha=1.5))


def test_decoupled_saddle_on_flat_torus(antiperiodic_identity):
    phi = antiperiodic_identity
    config = ActionConfig(**SADDLE_CONFIG)
    m_theta = minimize_alpha_energy(phi, config.alpha).action.alpha_energy
    start = mountain_pass_init(phi, config)
    assert start.height > start.base
    assert start.R2 > start.radius > 0.0

    point = newton_solve(start.phi, start.psi, config, spectral_modes=16)
    assert point.converged
    assert point.nontrivial
    assert point.classification == 'saddle-candidate'

    s = np.sqrt(2.0) * np.sin(np.pi / 8) / phi.domain.h
    modulus = np.sum(np.abs(point.psi) ** 2, axis=(-2, -1))
    # D psi = 4 eps |psi|^2 psi on a single eigenvalue s
    np.testing.assert_allclose(modulus, s / (4.0 * config.perturbation_scale), rtol=1e-6)
    area = phi.domain.area
    expected = m_theta + area * s ** 2 / (16.0 * config.perturbation_scale)
    assert point.action.total == pytest.approx(expected, rel=1e-6)
    assert point.action.total > m_theta
    assert point.spectral['kernel'] == 0


def test_newton_from_zero_spinor_stays_trivial(antiperiodic_identity):
    point = newton_solve(antiperiodic_identity, np.zeros((8, 8, 2, 2), dtype=complex),
                         ActionConfig(**SADDLE_CONFIG))
    assert point.converged
    assert point.iterations == 0
    assert point.classification == 'minimizer'
    assert not point.nontrivial


def test_flow_decreases_action_without_violations(antiperiodic_identity, rng):
    psi = 0.1 * random_tangent_spinor(antiperiodic_identity, rng)
    trajectory = pseudo_gradient_flow(antiperiodic_identity, psi, ActionConfig(**SADDLE_CONFIG), horizon=0.05)
    frame = trajectory.to_frame()
    assert not trajectory.stalled
    assert trajectory.accepted >= 5
    assert trajectory.violations() == 0
    assert np.all(np.diff(frame['action']) <= 1e-12 * np.abs(frame['action'].iloc[0]))
    assert trajectory.total_decrease >= 0.0
    assert trajectory.predicted_decrease > 0.0
    assert trajectory.diagnostics['final_time'] == pytest.approx(0.05)
    # G_H vanishes on the affine map, so dL(omega) = a ||grad^V||^2 with a = 1.5
    np.testing.assert_allclose(frame['dL_omega'], 1.5 * frame['dual_norm'] ** 2, rtol=1e-5)


def test_flow_margins_catch_a_wrong_vertical_gradient(antiperiodic_identity, rng, monkeypatch):
    exact = solver_module.vertical_gradient
    monkeypatch.setattr(solver_module, 'vertical_gradient', lambda phi, psi, config: -exact(phi, psi, config))
    psi = 0.1 * random_tangent_spinor(antiperiodic_identity, rng)
    trajectory = pseudo_gradient_flow(antiperiodic_identity, psi, ActionConfig(**SADDLE_CONFIG), horizon=0.05)
    first = trajectory.to_frame().iloc[0]
    assert first['dL_omega'] < 0.0
    assert first['descent_margin'] < -first['dual_norm'] ** 2
    assert trajectory.violations() >= 1


def test_flow_keeps_the_homotopy_class(domain, torus, rng):
    phi = random_smooth_map(domain, torus, rng, amplitude=0.05, winding=((1, 0), (0, 1)))
    psi = np.zeros(domain.grid_shape + (2, 2), dtype=complex)
    trajectory = pseudo_gradient_flow(phi, psi, ActionConfig(alpha=1.5), horizon=0.1)
    assert trajectory.total_decrease > 0.0
    assert winding_of(trajectory.phi) == HomotopyClass.torus(((1, 0), (0, 1)))


def test_trivial_continuation_converges_at_every_stage(identity_map):
    schedule = ContinuationSchedule(alphas=[1.5, 1.3], ks=[4, 8], energy_bound=1000.0, branch='trivial')
    result = continuation_run(schedule, identity_map)
    assert not result.failures
    assert len(result.points) == 4
    assert result.trace['converged'].all()
    assert not result.trace['nontrivial'].any()
    assert result.bounded
    assert result.final.config.alpha == 1.3


def test_nontrivial_continuation_quartic_growth(antiperiodic_identity):
    schedule = ContinuationSchedule(alphas=[1.5], ks=[4, 8], energy_bound=1000.0, mu=4.0, spectral_modes=16)
    result = continuation_run(schedule, antiperiodic_identity)
    assert not result.failures
    assert result.trace['nontrivial'].all()
    assert result.trace['converged'].all()
    # |psi|^2 = s k / 4, so int |psi|^4 grows like k^2
    assert result.quartic_slopes[1.5] == pytest.approx(2.0, rel=1e-4)


def test_energy_bound_is_monitored(identity_map):
    schedule = ContinuationSchedule(alphas=[1.5], ks=[4], energy_bound=1.0, branch='trivial')
    result = continuation_run(schedule, identity_map)
    assert not result.bounded
    assert not result.trace['within_bound'].iloc[0]
