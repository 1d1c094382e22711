"""
variational package - Perturbed Action, Spectrum and Solvers
Contains the action configurations and perturbation hooks, the discrete
functional with its gradients, the twisted Dirac spectrum and the
critical-point solvers
"""

from .configs import (
    ActionConfig,
    SolverConfig,
    ContinuationSchedule,
    default_mu
)

from .perturbations import (
    Perturbation,
    PowerPerturbation,
    CanonicalPerturbation,
    WeightedQuadraticPerturbation,
    get_perturbation,
    get_available_perturbations
)

from .functional import (
    ActionValue,
    action,
    alpha_energy,
    dirichlet_energy,
    bound_energy,
    spinor_quartic,
    twisted_dirac,
    dirac_action,
    perturbation_F,
    horizontal_gradient,
    vertical_gradient,
    vertical_residual,
    residual_norms,
    second_variation,
    convexity_lower_bound
)

from .spectral import (
    SpectralData,
    ProjectionResult,
    dirac_spectrum,
    spectral_projection,
    lambda_plus,
    stabilised_lambda_plus
)

from .solver import (
    CriticalPoint,
    MountainPass,
    FlowTrajectory,
    ContinuationResult,
    minimize_alpha_energy,
    mountain_pass_init,
    newton_solve,
    pseudo_gradient_flow,
    continuation_run
)

__all__ = [
    'ActionConfig',
    'SolverConfig',
    'ContinuationSchedule',
    'default_mu',
    'Perturbation',
    'PowerPerturbation',
    'CanonicalPerturbation',
    'WeightedQuadraticPerturbation',
    'get_perturbation',
    'get_available_perturbations',
    'ActionValue',
    'action',
    'alpha_energy',
    'dirichlet_energy',
    'bound_energy',
    'spinor_quartic',
    'twisted_dirac',
    'dirac_action',
    'perturbation_F',
    'horizontal_gradient',
    'vertical_gradient',
    'vertical_residual',
    'residual_norms',
    'second_variation',
    'convexity_lower_bound',
    'SpectralData',
    'ProjectionResult',
    'dirac_spectrum',
    'spectral_projection',
    'lambda_plus',
    'stabilised_lambda_plus',
    'CriticalPoint',
    'MountainPass',
    'FlowTrajectory',
    'ContinuationResult',
    'minimize_alpha_energy',
    'mountain_pass_init',
    'newton_solve',
    'pseudo_gradient_flow',
    'continuation_run'
]
