import numpy as np
import pytest

from errors import ConfigurationError, ProjectionError, TangencyError, TransportError, WindingError
from geometry.domain import build_domain
from geometry.fields import (
    MapField,
    SpinorField,
    affine_map,
    bubble_map,
    constant_map,
    random_smooth_map,
    random_tangent_spinor,
)
from geometry.target import HomotopyClass, check_class, get_target, transport_spinor, winding_of


def _tangent(p, rng):
    v = rng.standard_normal(3)
    return v - np.dot(v, p) * p


def test_sphere_curvature_matches_closed_form(sphere, rng):
    p = sphere.project(rng.standard_normal(3))
    X, Y, Z = (_tangent(p, rng) for _ in range(3))
    np.testing.assert_allclose(sphere.curvature_op(p, X, Y, Z), sphere.curvature_closed_form(X, Y, Z), atol=1e-12)
    sectional = np.dot(sphere.curvature_op(p, X, Y, Y), X)
    assert sectional == pytest.approx(np.dot(X, X) * np.dot(Y, Y) - np.dot(X, Y) ** 2, rel=1e-10)


def test_curvature_rejects_normal_vectors(sphere):
    p = np.array([0.0, 0.0, 1.0])
    X = np.array([1.0, 0.0, 0.0])
    with pytest.raises(TangencyError):
        sphere.curvature_op(p, X, X, p)


def test_torus_is_flat(torus, rng):
    p = rng.standard_normal(2)
    X, Y, Z = rng.standard_normal((3, 2))
    np.testing.assert_allclose(torus.curvature_op(p, X, Y, Z), 0.0)
    np.testing.assert_array_equal(torus.parallel_transport(p, p + 1.0, X), X)


def test_sphere_transport_is_isometric(sphere, rng):
    p = sphere.project(rng.standard_normal(3))
    q = sphere.project(p + 0.3 * _tangent(p, rng))
    w = _tangent(p, rng)
    moved = sphere.parallel_transport(p, q, w)
    assert np.linalg.norm(moved) == pytest.approx(np.linalg.norm(w), rel=1e-12)
    assert np.dot(moved, q) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(TransportError):
        sphere.parallel_transport(p, -p, w)


def test_projection_fails_at_centre(sphere):
    with pytest.raises(ProjectionError):
        sphere.project(np.zeros(3))


def test_geodesic_stays_on_sphere(sphere, rng):
    p = sphere.project(rng.standard_normal(3))
    v = _tangent(p, rng)
    v /= np.linalg.norm(v)
    q = sphere.geodesic(p, v, 0.7)
    assert np.linalg.norm(q) == pytest.approx(1.0)
    assert sphere.distance(p, q) == pytest.approx(0.7 * np.linalg.norm(v), rel=1e-10)


@pytest.mark.parametrize("winding", [((1, 0), (0, 1)), ((1, 2), (0, 1)), ((0, 0), (0, 0)), ((-1, 0), (1, 2))])
def test_affine_winding_is_recovered(domain, torus, winding):
    phi = affine_map(domain, torus, winding)
    assert winding_of(phi) == HomotopyClass.torus(winding)


def test_random_map_keeps_its_class(domain, torus, rng):
    phi = random_smooth_map(domain, torus, rng, amplitude=0.05, winding=((2, 0), (1, 1)))
    assert check_class(phi, HomotopyClass.torus(((2, 0), (1, 1)))).winding == ((2, 0), (1, 1))
    with pytest.raises(WindingError):
        check_class(phi, HomotopyClass.torus(((1, 0), (0, 1))))


def test_bubble_has_unit_degree_and_constant_has_zero():
    domain = build_domain(32, 1.0)
    bubble = bubble_map(domain, (0.5, 0.5), 0.125)
    assert abs(winding_of(bubble).degree) == 1
    constant = constant_map(domain, bubble.target, [0.0, 1.0, 0.0])
    assert winding_of(constant) == HomotopyClass.sphere(0)


def test_torus_target_requires_positive_period():
    with pytest.raises(ConfigurationError):
        get_target('torus', period=0.0)
    with pytest.raises(ConfigurationError) as info:
        get_target('hyperbolic')
    assert info.value.key == "target.kind"


def test_map_values_must_lie_on_target(domain, sphere):
    with pytest.raises(ProjectionError):
        MapField(np.ones(domain.grid_shape + (3,)), sphere, domain)


def test_spinor_tangency_and_transport(domain, sphere, rng):
    phi = random_smooth_map(domain, sphere, rng, amplitude=0.2)
    psi = random_tangent_spinor(phi, rng)
    SpinorField(psi, phi)
    normal = phi.values[:, :, None, :] * np.ones((1, 1, 2, 1))
    with pytest.raises(TangencyError):
        SpinorField(psi + normal, phi)
    step = 0.05 * phi.project_tangent(rng.standard_normal(phi.values.shape))
    moved_map = phi.with_values(sphere.retract(phi.values, step))
    moved = transport_spinor(phi, moved_map, psi)
    SpinorField(moved, moved_map)
    np.testing.assert_allclose(np.linalg.norm(moved, axis=-1), np.linalg.norm(psi, axis=-1), rtol=1e-10)


def test_sphere_curvature_antisymmetry_and_bianchi(sphere, rng):
    for _ in range(5):
        p = sphere.project(rng.standard_normal(3))
        X, Y, Z = (_tangent(p, rng) for _ in range(3))
        R = sphere.curvature_op
        np.testing.assert_allclose(R(p, X, Y, Z), -R(p, Y, X, Z), atol=1e-12)
        np.testing.assert_allclose(R(p, X, Y, Z) + R(p, Y, Z, X) + R(p, Z, X, Y), 0.0, atol=1e-12)
