"""Shared fixtures: small grids, targets and maps."""

import numpy as np
import pytest

from geometry.domain import build_domain
from geometry.fields import affine_map, constant_map
from geometry.target import FlatTorus2, RoundSphere


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def domain():
    return build_domain(8, 2 * np.pi)


@pytest.fixture
def antiperiodic_domain():
    return build_domain(8, 2 * np.pi, (-1, -1))


@pytest.fixture
def torus():
    return FlatTorus2(2 * np.pi)


@pytest.fixture
def sphere():
    return RoundSphere()


@pytest.fixture
def identity_map(domain, torus):
    return affine_map(domain, torus)


@pytest.fixture
def antiperiodic_identity(antiperiodic_domain, torus):
    return affine_map(antiperiodic_domain, torus)


@pytest.fixture
def north_pole_map(domain, sphere):
    return constant_map(domain, sphere, [0.0, 0.0, 1.0])
