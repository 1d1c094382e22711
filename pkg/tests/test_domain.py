import numpy as np
import pytest

from errors import ConfigurationError, ShapeMismatchError
from geometry.domain import (
    build_domain,
    div,
    grad,
    inner,
    integrate,
    laplacian,
    periodic_distance,
    shift,
    sobolev_norm,
)


def test_rejects_coarse_grid_and_bad_side():
    with pytest.raises(ConfigurationError) as info:
        build_domain(3, 1.0)
    assert info.value.key == "n"
    with pytest.raises(ConfigurationError):
        build_domain(8, 0.0)
    with pytest.raises(ConfigurationError):
        build_domain(8, 1.0, (1, 0))


def test_describe_and_quadrature(domain):
    assert domain.h == pytest.approx(2 * np.pi / 8)
    assert integrate(domain, np.ones(domain.grid_shape)) == pytest.approx(domain.area)
    info = domain.describe()
    assert info['vertices'] == 64
    assert info['spin_structure'] == [1, 1]


def test_divergence_is_negative_adjoint_of_gradient(domain, rng):
    f = rng.standard_normal(domain.grid_shape)
    v = rng.standard_normal((2,) + domain.grid_shape)
    lhs = inner(domain, grad(domain, f)[0], v[0]) + inner(domain, grad(domain, f)[1], v[1])
    assert lhs == pytest.approx(-inner(domain, f, div(domain, v)), rel=1e-12)


def test_five_point_laplacian_eigenvalue(domain):
    X, _ = domain.coordinates()
    f = np.sin(2 * np.pi * X / domain.side_length)
    expected = -(4.0 / domain.h ** 2) * np.sin(np.pi * domain.h / domain.side_length) ** 2
    np.testing.assert_allclose(laplacian(domain, f), expected * f, atol=1e-12)


def test_gradient_of_lift_uses_seam_jump(domain):
    X, Y = domain.coordinates()
    lift = X + 2 * Y
    jump = np.array([domain.side_length, 2 * domain.side_length])
    g = grad(domain, lift, jump=jump)
    np.testing.assert_allclose(g[0], 1.0, atol=1e-12)
    np.testing.assert_allclose(g[1], 2.0, atol=1e-12)


def test_shape_checks(domain):
    with pytest.raises(ShapeMismatchError):
        integrate(domain, np.ones((4, 4)))
    with pytest.raises(ShapeMismatchError):
        inner(domain, np.ones((8, 8)), np.ones((8, 8, 2)))


def test_sobolev_norm_of_constant(domain):
    assert sobolev_norm(domain, 2.0 * np.ones(domain.grid_shape)) == pytest.approx(2.0 * domain.side_length)


def test_periodic_distance_wraps(domain):
    d = periodic_distance(domain, (0.0, 0.0))
    assert d[0, 0] == 0.0
    assert d[-1, 0] == pytest.approx(domain.h)


def _grad_error(n):
    domain = build_domain(n, 2.0 * np.pi)
    X, Y = domain.coordinates()
    f = np.sin(X) * np.cos(Y)
    # forward differences approximate the derivative at the edge midpoint x + h/2
    exact = np.cos(X + 0.5 * domain.h) * np.cos(Y)
    return float(np.abs(grad(domain, f)[0] - exact).max())


def _div_error(n):
    domain = build_domain(n, 2.0 * np.pi)
    X, Y = domain.coordinates()
    half = 0.5 * domain.h
    v = np.stack([np.sin(X + half) * np.cos(Y), np.cos(X) * np.sin(Y + half)])
    return float(np.abs(div(domain, v) - 2.0 * np.cos(X) * np.cos(Y)).max())


@pytest.mark.parametrize("error", [_grad_error, _div_error])
def test_second_order_convergence(error):
    errors = [error(n) for n in (16, 32, 64)]
    for coarse, fine in zip(errors, errors[1:]):
        assert 3.5 <= coarse / fine <= 4.5


@pytest.mark.parametrize("axis", [0, 1])
def test_translation_equivariance(domain, rng, axis):
    f = rng.standard_normal(domain.grid_shape + (3,))
    v = rng.standard_normal((2,) + domain.grid_shape + (3,))
    np.testing.assert_allclose(grad(domain, shift(f, 1, axis)), shift(grad(domain, f), 1, axis + 1), atol=1e-12)
    np.testing.assert_allclose(div(domain, shift(v, 1, axis + 1)), shift(div(domain, v), 1, axis), atol=1e-12)
    np.testing.assert_allclose(integrate(domain, shift(f, 1, axis)), integrate(domain, f), rtol=1e-12)
