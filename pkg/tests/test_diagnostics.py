import json

import numpy as np
import pytest

from diagnostics import (
    FAIL,
    NOT_APPLICABLE,
    PASS,
    DiagnosticsReport,
    classify_critical_point,
    concentration_scan,
    convexity_experiment,
    energy_report,
    generate_pdf_report,
    gradient_check,
    minimax_estimates,
    residual_report,
    uniqueness_experiment,
)
from diagnostics.reporting import _flatten
from errors import ConfigurationError, WindingError
from geometry.domain import build_domain
from geometry.fields import affine_map, bubble_map, random_smooth_map, random_tangent_spinor
from geometry.target import FlatTorus2
from variational import ActionConfig, newton_solve

SCALES = (0.2, 0.08, 0.04, 0.02)
RADIUS = 0.125
# above half of the 8 pi bubble energy
EPSILON0 = 15.0


@pytest.fixture
def unit_domain():
    return build_domain(256, 1.0)


def test_bubble_flags_grow_as_scale_shrinks(unit_domain):
    counts = []
    for scale in SCALES:
        scan = concentration_scan(bubble_map(unit_domain, (0.5, 0.5), scale), RADIUS, epsilon0=EPSILON0)
        counts.append(scan.flag_count)
        assert scan.cover_ok
    assert counts[0] == 0
    assert all(a < b for a, b in zip(counts, counts[1:]))


def test_bubble_ball_energy_near_continuum(unit_domain):
    s = 0.08
    scan = concentration_scan(bubble_map(unit_domain, (0.5, 0.5), s), RADIUS, epsilon0=EPSILON0)
    continuum = 8 * np.pi * RADIUS ** 2 / (RADIUS ** 2 + s ** 2)
    assert scan.energies[128, 128] == pytest.approx(continuum, rel=0.1)
    assert scan.total_energy > 0.9 * 8 * np.pi
    centers = scan.flagged_centers()
    assert len(centers) > 0
    assert np.all(np.hypot(centers[:, 0] - 0.5, centers[:, 1] - 0.5) < RADIUS)


def test_identity_has_uniform_local_energy():
    domain = build_domain(32, 1.0)
    phi = affine_map(domain, FlatTorus2(1.0))
    scan = concentration_scan(phi, 0.25, alpha=1.5)
    assert np.ptp(scan.energies) < 1e-10
    # 197 lattice points within 8 cells of the center
    assert scan.energies[0, 0] == pytest.approx(197 * 2 * domain.h ** 2, rel=1e-10)
    assert scan.energies[0, 0] == pytest.approx(2 * np.pi * 0.25 ** 2, abs=0.02)
    assert scan.total_energy == pytest.approx(2.0)
    assert scan.flag_count == domain.vertex_count
    assert scan.summary()['max_rescaled_energy'] > 0.0
    assert len(scan.to_frame()) == domain.vertex_count
    assert concentration_scan(phi, 0.25, epsilon0=EPSILON0).flag_count == 0


def test_scan_radius_limits():
    domain = build_domain(32, 1.0)
    phi = affine_map(domain, FlatTorus2(1.0))
    with pytest.raises(ConfigurationError) as info:
        concentration_scan(phi, 0.05)
    assert info.value.key == "diagnostics.radius"
    with pytest.raises(ConfigurationError):
        concentration_scan(phi, 0.6)


def test_energy_and_residual_reports(identity_map):
    psi = np.zeros((8, 8, 2, 2), dtype=complex)
    config = ActionConfig(alpha=1.5)
    energies = energy_report(identity_map, psi, config)
    assert energies['spinor_quartic'] == 0.0
    assert energies['dirichlet_energy'] == pytest.approx(identity_map.domain.area)
    residuals = residual_report(identity_map, psi, config)
    assert residuals['combined'] < 1e-10


def test_gradient_check_on_torus(domain, torus, rng):
    phi = random_smooth_map(domain, torus, rng, amplitude=0.1, winding=((1, 0), (0, 1)))
    psi = 0.3 * random_tangent_spinor(phi, rng)
    verdict = gradient_check(phi, psi, ActionConfig(alpha=1.5, perturbation_scale=0.25, mu=4.0),
                             directions=10, rng=rng, tol=1e-5)
    assert verdict.verdict == PASS
    assert verdict.measurements['max_relative_error'] < 1e-5


def test_minimax_geometry_holds_at_flat_minimiser(antiperiodic_identity, rng):
    config = ActionConfig(alpha=1.5, perturbation_scale=0.25, mu=4.0)
    estimate = minimax_estimates(antiperiodic_identity, config, samples=200, rng=rng)
    assert estimate.holds
    assert estimate.a <= estimate.m_theta + 1e-9
    assert estimate.b > estimate.m_theta
    assert estimate.rho > 0.0
    assert estimate.to_dict()['samples'] == 200


def test_uniqueness_on_flat_torus(domain, torus, rng):
    verdict = uniqueness_experiment(domain, torus, ((1, 0), (0, 1)), 1.5, trials=3, rng=rng)
    assert verdict.verdict == PASS
    assert verdict.measurements['max_deviation'] < 1e-6


def test_uniqueness_refused_on_sphere(domain, sphere):
    verdict = uniqueness_experiment(domain, sphere, None, 1.5)
    assert verdict.verdict == NOT_APPLICABLE


def test_convexity_along_geodesic_homotopy(domain, torus, rng):
    phi0 = affine_map(domain, torus)
    phi1 = random_smooth_map(domain, torus, rng, amplitude=0.1, winding=((1, 0), (0, 1)))
    verdict = convexity_experiment(phi0, phi1, 1.3)
    assert verdict.verdict == PASS
    assert len(verdict.measurements['second_differences']) == 9
    with pytest.raises(WindingError):
        convexity_experiment(phi0, affine_map(domain, torus, ((2, 0), (0, 1))), 1.3)


def test_convexity_not_applicable_on_sphere(domain, sphere, rng):
    phi0 = random_smooth_map(domain, sphere, rng, amplitude=0.1)
    phi1 = random_smooth_map(domain, sphere, rng, amplitude=0.1)
    assert convexity_experiment(phi0, phi1, 1.5).verdict == NOT_APPLICABLE


def test_classification_of_trivial_points(identity_map):
    point = newton_solve(identity_map, np.zeros((8, 8, 2, 2), dtype=complex), ActionConfig(alpha=1.5))
    m_theta = point.action.total
    assert classify_critical_point(point, m_theta)['classification'] == 'minimizer'
    above = classify_critical_point(point, m_theta - 1.0)
    assert above['classification'] == 'non_minimizing_alpha_harmonic'
    assert above['contradicts_uniqueness']


def test_report_json_and_pdf():
    report = DiagnosticsReport(experiment='solve', energies={'alpha_energy': np.float64(1.5)},
                               results={'ratio': float('nan'), 'winding': ((1, 0), (0, 1))})
    report.add_experiment('gradient_check', PASS, {'log': ['fine']})
    assert report.passed
    report.add_experiment('minimax', FAIL, {'log': ['b below m']})
    assert report.verdict == FAIL
    data = json.loads(report.to_json())
    assert data['energies']['alpha_energy'] == 1.5
    assert data['results']['ratio'] == 'nan'
    assert data['results']['winding'] == [[1, 0], [0, 1]]
    assert data['experiments']['minimax']['verdict'] == FAIL
    pdf = generate_pdf_report(report)
    assert pdf.startswith(b'%PDF')


def test_nested_report_sections_are_flattened():
    nested = {'kernel': 16, 'action': {'total': 2.5, 'parts': {'dirac': 0.0}}, 'empty': {}}
    assert _flatten(nested) == {'kernel': 16, 'action.total': 2.5, 'action.parts.dirac': 0.0}
    report = DiagnosticsReport(experiment='spectrum', energies={'action': {'total': 2.5}},
                               results={'spectrum': {'kernel': 16, 'physical_kernel': 4}})
    assert generate_pdf_report(report).startswith(b'%PDF')
