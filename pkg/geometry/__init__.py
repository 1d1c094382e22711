"""
geometry package - Discrete Domain, Spinors and Targets
Contains the flat-torus grid calculus, spinor algebra with the untwisted
Dirac operator, embedded target manifolds and the map/spinor carriers
"""

from .domain import (
    SurfaceDomain,
    ScalarField,
    VectorField,
    build_domain,
    grad,
    div,
    laplacian,
    integrate,
    inner,
    l2_norm,
    gradient_density,
    sobolev_norm,
    periodic_distance
)

from .spin import (
    CLIFFORD,
    CliffordFrame,
    PlainSpinorField,
    clifford_mul,
    untwisted_dirac,
    dirac_symbol,
    symbol_spectrum,
    plane_wave_spinor,
    resolvent_precondition,
    apply_one_plus_abs_dirac,
    l2_inner,
    h_half_inner,
    h_half_norm,
    dirac_matrix
)

from .target import (
    TargetManifold,
    RoundSphere,
    FlatTorus2,
    HomotopyClass,
    transport_spinor,
    winding_of,
    check_class,
    get_target,
    get_available_targets
)

from .fields import (
    MapField,
    SpinorField,
    affine_map,
    constant_map,
    random_smooth_map,
    bubble_map,
    random_tangent_field,
    random_tangent_spinor
)

__all__ = [
    'SurfaceDomain',
    'ScalarField',
    'VectorField',
    'build_domain',
    'grad',
    'div',
    'laplacian',
    'integrate',
    'inner',
    'l2_norm',
    'gradient_density',
    'sobolev_norm',
    'periodic_distance',
    'CLIFFORD',
    'CliffordFrame',
    'PlainSpinorField',
    'clifford_mul',
    'untwisted_dirac',
    'dirac_symbol',
    'symbol_spectrum',
    'plane_wave_spinor',
    'resolvent_precondition',
    'apply_one_plus_abs_dirac',
    'l2_inner',
    'h_half_inner',
    'h_half_norm',
    'dirac_matrix',
    'TargetManifold',
    'RoundSphere',
    'FlatTorus2',
    'HomotopyClass',
    'transport_spinor',
    'winding_of',
    'check_class',
    'get_target',
    'get_available_targets',
    'MapField',
    'SpinorField',
    'affine_map',
    'constant_map',
    'random_smooth_map',
    'bubble_map',
    'random_tangent_field',
    'random_tangent_spinor'
]
