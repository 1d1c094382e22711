"""
configs.py - Action, Solver and Continuation Configurations
Runtime knobs for the perturbed functional and the critical-point solvers,
with documented defaults and validation that names the offending key.
"""

from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional

from errors import ConfigurationError

from .perturbations import Perturbation, get_perturbation


def default_mu(alpha: float) -> float:
    """Exponent 4 alpha / (3 alpha - 2) of the canonical perturbation |psi|^mu."""
    return 4.0 * alpha / (3.0 * alpha - 2.0)


@dataclass
class ActionConfig:
    """
    Parameters of L^alpha_k = E^alpha + dirac_action - eps_k * F.

    Attributes:
        alpha: Exponent in (1, 2]
        perturbation_scale: eps_k = 1/k >= 0
        mu: Perturbation exponent; defaults to 4 alpha / (3 alpha - 2)
        perturbation: Registry name of the perturbation hook
        perturbation_params: Extra keyword arguments for the hook
        growth_p: Growth exponent p recorded for the (F1) window check
        growth_q: Exponent q recorded for the (F3)/(F7) checks
    """
    alpha: float = 1.5
    perturbation_scale: float = 0.0
    mu: Optional[float] = None
    perturbation: str = 'canonical'
    perturbation_params: dict = field(default_factory=dict)
    growth_p: Optional[float] = None
    growth_q: Optional[float] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (1.0 < self.alpha <= 2.0):
            raise ConfigurationError(f"alpha must lie in (1, 2], got {self.alpha}", key="action.alpha")
        if self.perturbation_scale < 0:
            raise ConfigurationError(f"perturbation scale must be >= 0, got {self.perturbation_scale}",
                                     key="action.perturbation_scale")
        if self.mu is None:
            mu = default_mu(self.alpha)
            if mu <= 2.0:
                raise ConfigurationError(
                    f"default mu = 4 alpha/(3 alpha - 2) = {mu:g} at alpha = {self.alpha:g} is not > 2; "
                    f"supply mu > 2 explicitly", key="action.mu")
            self.mu = mu
        elif self.perturbation == 'canonical' and self.mu <= 2.0:
            raise ConfigurationError(f"mu must be > 2, got {self.mu}", key="action.mu")
        if self.growth_p is None:
            self.growth_p = self.mu

    @classmethod
    def from_k(cls, k: float, **kwargs) -> 'ActionConfig':
        if k <= 0:
            raise ConfigurationError(f"k must be positive, got {k}", key="action.k")
        return cls(perturbation_scale=1.0 / k, **kwargs)

    @property
    def k(self) -> Optional[float]:
        return 1.0 / self.perturbation_scale if self.perturbation_scale > 0 else None

    def hook(self) -> Perturbation:
        params = dict(self.perturbation_params)
        if self.perturbation in ('canonical', 'power'):
            params.setdefault('mu', self.mu)
        return get_perturbation(self.perturbation, **params)

    def unperturbed(self) -> 'ActionConfig':
        return replace(self, perturbation_scale=0.0)

    def with_scale(self, scale: float) -> 'ActionConfig':
        return replace(self, perturbation_scale=scale)

    def existence_window(self) -> dict:
        """Status of 4 alpha/(3 alpha - 2) <= mu <= p <= 3 mu / 4 + 1."""
        lower = default_mu(self.alpha)
        upper = 0.75 * self.mu + 1.0
        p = self.growth_p
        return {
            'lower': lower,
            'mu': self.mu,
            'p': p,
            'upper': upper,
            'satisfied': bool(lower - 1e-12 <= self.mu <= p + 1e-12 and p <= upper + 1e-12),
        }

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolverConfig:
    """
    Iteration controls shared by minimisation, Newton and the flow.

    Attributes:
        max_iters: Gradient-descent iteration cap
        grad_tol: Tolerance on the combined residual norm
        armijo: Sufficient-decrease constant
        backtrack: Step shrink factor in the line search
        max_backtracks: Line-search attempts before failure
        memory: Window of the non-monotone line search
        step_cap_fraction: Largest vertex move as a fraction of the injectivity radius
        newton_max_iters: Newton iteration cap
        newton_max_halvings: Damping halvings before Newton gives up
        krylov_tol: Relative tolerance of the inner linear solves
        krylov_maxiter: Inner iteration cap
        jvp_step: Relative forward-difference step for Jacobian-vector products
        pseudo_gradient_a: Spinor weight a in (1, 2) of the pseudo-gradient field
        flow_dt: Initial flow time step
        flow_horizon: Flow end time T
        flow_max_rejections: Consecutive rejected steps before the flow stops
    """
    max_iters: int = 5000
    grad_tol: float = 1e-8
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40
    memory: int = 8
    step_cap_fraction: float = 0.25
    newton_max_iters: int = 30
    newton_max_halvings: int = 12
    krylov_tol: float = 1e-12
    krylov_maxiter: int = 2000
    jvp_step: float = 1e-6
    pseudo_gradient_a: float = 1.5
    flow_dt: float = 1e-2
    flow_horizon: float = 1.0
    flow_max_rejections: int = 30

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (1.0 < self.pseudo_gradient_a < 2.0):
            raise ConfigurationError(f"pseudo-gradient constant a must lie in (1, 2), got {self.pseudo_gradient_a}",
                                     key="solver.pseudo_gradient_a")
        if self.grad_tol <= 0:
            raise ConfigurationError("grad_tol must be positive", key="solver.grad_tol")
        if not (0.0 < self.backtrack < 1.0):
            raise ConfigurationError("backtrack factor must lie in (0, 1)", key="solver.backtrack")
        if not (0.0 < self.step_cap_fraction < 1.0):
            raise ConfigurationError("step_cap_fraction must lie in (0, 1)", key="solver.step_cap_fraction")
        if self.max_iters < 1 or self.newton_max_iters < 1:
            raise ConfigurationError("iteration caps must be >= 1", key="solver.max_iters")
        if self.flow_dt <= 0 or self.flow_horizon < 0:
            raise ConfigurationError("flow step must be positive and horizon non-negative", key="solver.flow_dt")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ContinuationSchedule:
    """
    Ladders for the alpha -> 1, k -> infinity continuation.

    Attributes:
        alphas: Decreasing alpha values in (1, 2]
        ks: Increasing positive perturbation indices k (eps_k = 1/k)
        energy_bound: Lambda for the int(|d phi|^{2 alpha} + |psi|^4) monitor
        solver: Per-stage solver configuration
        mu: Fixed perturbation exponent; None uses the alpha-dependent default
        branch: 'nontrivial' (mountain pass + Newton) or 'trivial' (psi = 0)
        spectral_modes: Eigenpairs resolved when e+ is needed
    """
    alphas: List[float] = field(default_factory=lambda: [1.5])
    ks: List[float] = field(default_factory=lambda: [4, 8, 16, 32])
    energy_bound: float = 100.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    mu: Optional[float] = None
    branch: str = 'nontrivial'
    spectral_modes: int = 24

    def __post_init__(self):
        if isinstance(self.solver, dict):
            self.solver = SolverConfig(**self.solver)
        self.validate()

    def validate(self) -> None:
        if not self.alphas or not self.ks:
            raise ConfigurationError("alpha and k ladders must be non-empty", key="schedule.alphas")
        if any(b >= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise ConfigurationError(f"alpha ladder must decrease, got {self.alphas}", key="schedule.alphas")
        if any(not (1.0 < a <= 2.0) for a in self.alphas):
            raise ConfigurationError(f"alpha ladder must stay in (1, 2], got {self.alphas}", key="schedule.alphas")
        if any(b <= a for a, b in zip(self.ks, self.ks[1:])) or min(self.ks) <= 0:
            raise ConfigurationError(f"k ladder must be positive and increasing, got {self.ks}", key="schedule.ks")
        if self.energy_bound <= 0:
            raise ConfigurationError("energy bound Lambda must be positive", key="schedule.energy_bound")
        if self.branch not in BRANCHES:
            raise ConfigurationError(f"Branch '{self.branch}' not found. Available: {list(BRANCHES)}",
                                     key="schedule.branch")

    def action_config(self, alpha: float, k: float, **kwargs) -> ActionConfig:
        return ActionConfig(alpha=alpha, perturbation_scale=1.0 / k, mu=self.mu, **kwargs)

    def to_dict(self) -> dict:
        return asdict(self)


BRANCHES = ('nontrivial', 'trivial')
