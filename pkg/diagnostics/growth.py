"""
growth.py - Growth Conditions of Perturbation Hooks
Samples a hook over |psi| decades and fits exponents by log-log regression to
check the structural conditions (F1)-(F5) the existence theory needs, with
(F6)/(F7) and the exponent windows reported alongside.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression

from errors import ConfigurationError
from variational.configs import ActionConfig
from variational.perturbations import Perturbation, spinor_modulus_sq

logger = logging.getLogger(__name__)

# Constants
DECADES = (-3, 3)
POINTS_PER_DECADE = 5
LARGE_RANGE = (1.0, 1e3)
SMALL_RANGE = (1e-3, 1e-1)
REQUIRED = ('F1', 'F2', 'F3', 'F4', 'F5')


@dataclass
class GrowthReport:
    """
    Per-condition results with fitted exponents.

    Attributes:
        conditions: name -> {'passed', 'value', 'detail', 'required'}
        fitted_mu: Slope of log F against log |psi| over all decades
        verdict: 'PASS' when every required condition holds
        samples: Sampled magnitudes with worst-case hook values
        windows: Existence and regularity exponent windows (when a config is given)
    """
    conditions: Dict[str, dict]
    fitted_mu: Optional[float]
    verdict: str
    samples: pd.DataFrame = field(repr=False, default=None)
    windows: Dict[str, dict] = field(default_factory=dict)
    log: List[str] = field(default_factory=list)

    @property
    def failed(self) -> List[str]:
        return [name for name, c in self.conditions.items() if c['required'] and not c['passed']]

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop('samples')
        return out


def _slope(t: np.ndarray, values: np.ndarray, bounds) -> Optional[float]:
    mask = (t >= bounds[0] * (1 - 1e-12)) & (t <= bounds[1] * (1 + 1e-12)) & (values > 0)
    if mask.sum() < 2:
        return None
    model = LinearRegression().fit(np.log(t[mask]).reshape(-1, 1), np.log(values[mask]))
    return float(model.coef_[0])


def _unit_spinors(rng: np.random.Generator, count: int, target_dim: int) -> np.ndarray:
    raw = rng.standard_normal((count, 2, target_dim)) + 1j * rng.standard_normal((count, 2, target_dim))
    return raw / np.sqrt(spinor_modulus_sq(raw))[:, None, None]


def growth_condition_check(hook: Perturbation, rng: Optional[np.random.Generator] = None, target_dim: int = 2,
                           directions: int = 8, map_points: int = 8, alpha: float = 1.5,
                           config: Optional[ActionConfig] = None) -> GrowthReport:
    """
    Sample (F1)-(F7) for a perturbation hook.

    Magnitudes |psi| run over the decades 1e-3..1e3; each magnitude is
    paired with random unit spinor directions and random map points, and
    the worst case over the pairs enters the fits.

    Args:
        hook: Perturbation providing density, grad_psi and grad_phi
        rng: Random generator
        target_dim: Ambient dimension L of the target
        directions: Random spinor directions per magnitude
        map_points: Random map values per magnitude
        alpha: Exponent for the (F6) and regularity windows
        config: Action configuration for the existence window

    Raises:
        ConfigurationError: when the hook cannot be evaluated
    """
    rng = rng or np.random.default_rng(0)
    t = np.logspace(DECADES[0], DECADES[1], (DECADES[1] - DECADES[0]) * POINTS_PER_DECADE + 1)
    units = _unit_spinors(rng, directions, target_dim)
    points = rng.uniform(-np.pi, np.pi, (map_points, target_dim))

    # (magnitude, point, direction) grid
    psi = t[:, None, None, None, None] * units[None, None]
    psi = np.broadcast_to(psi, (len(t), map_points, directions, 2, target_dim))
    phi = np.broadcast_to(points[None, :, None, :], (len(t), map_points, directions, target_dim))
    try:
        F = np.asarray(hook.density(phi, psi), dtype=float)
        F_psi = np.asarray(hook.grad_psi(phi, psi))
        F_phi = np.asarray(hook.grad_phi(phi, psi), dtype=float)
    except (TypeError, ValueError, FloatingPointError) as exc:
        raise ConfigurationError(f"perturbation hook failed to evaluate: {exc}", key="action.perturbation") from exc

    grad_psi_norm = np.sqrt(spinor_modulus_sq(F_psi))
    grad_phi_norm = np.linalg.norm(F_phi, axis=-1)
    pairing = np.real(np.sum(np.conj(F_psi) * psi, axis=(-2, -1)))
    mu = float(getattr(hook, 'mu', 0.0))

    worst_grad_psi = grad_psi_norm.reshape(len(t), -1).max(axis=1)
    worst_grad_phi = grad_phi_norm.reshape(len(t), -1).max(axis=1)
    min_F = F.reshape(len(t), -1).min(axis=1)
    max_abs_F = np.abs(F).reshape(len(t), -1).max(axis=1)
    conditions = {}

    slope_psi = _slope(t, worst_grad_psi, LARGE_RANGE)
    p = None if slope_psi is None else slope_psi + 1.0
    conditions['F1'] = {
        'passed': p is not None and 2.0 < p <= 4.0 + 1e-9,
        'value': p,
        'detail': '|F_psi| <= C(1 + |psi|^(p-1)) with 2 < p <= 4',
        'required': True,
    }

    large = (t >= LARGE_RANGE[0]) & (t <= LARGE_RANGE[1] * (1 + 1e-12))
    F_large = F[large]
    ratio = np.where(F_large > 0, pairing[large] / np.where(F_large > 0, F_large, 1.0), -np.inf)
    min_ratio = float(ratio.min())
    conditions['F2'] = {
        'passed': bool(mu > 2.0 and np.all(F_large > 0) and min_ratio >= mu * (1.0 - 1e-9)),
        'value': min_ratio,
        'detail': f'0 < mu F <= <F_psi, psi> for |psi| in [1, 1e3] with mu = {mu:g} > 2',
        'required': True,
    }

    slope_phi = _slope(t, worst_grad_phi, LARGE_RANGE)
    vanishing_phi = bool(np.all(worst_grad_phi == 0.0))
    q = 0.0 if vanishing_phi else slope_phi
    conditions['F3'] = {
        'passed': q is not None and q < 4.0,
        'value': q,
        'detail': '|F_phi| <= C(1 + |psi|^q) with q < 4' + (' (F_phi vanishes)' if vanishing_phi else ''),
        'required': True,
    }

    conditions['F4'] = {
        'passed': bool(np.all(min_F >= 0.0)),
        'value': float(min_F.min()),
        'detail': 'F >= 0',
        'required': True,
    }

    small_ratio = max_abs_F / t ** 2
    slope_small = _slope(t, small_ratio, SMALL_RANGE)
    small = (t >= SMALL_RANGE[0] * (1 - 1e-12)) & (t <= SMALL_RANGE[1] * (1 + 1e-12))
    decaying = bool(small_ratio[small][0] < small_ratio[small][-1])
    conditions['F5'] = {
        'passed': slope_small is not None and slope_small > 1e-3 and decaying,
        'value': slope_small,
        'detail': 'F = o(|psi|^2) as psi -> 0, uniformly in phi',
        'required': True,
    }

    slope_all = _slope(t, worst_grad_psi, (t[0], t[-1]))
    r = None if slope_all is None else slope_all + 1.0
    conditions['F6'] = {
        'passed': r is not None and 3.0 < r <= 2.0 + 2.0 / alpha + 1e-9,
        'value': r,
        'detail': f'|F_psi| <= C|psi|^(r-1) with 3 < r <= 2 + 2/alpha = {2.0 + 2.0 / alpha:g}',
        'required': False,
    }

    q_all = None if vanishing_phi else _slope(t, worst_grad_phi, (t[0], t[-1]))
    conditions['F7'] = {
        'passed': q_all is not None and q_all > 2.0,
        'value': q_all,
        'detail': '|F_phi| <= C|psi|^q with q > 2',
        'required': False,
    }

    fitted_mu = _slope(t, max_abs_F, (t[0], t[-1]))
    windows = {}
    if config is not None:
        windows['existence'] = config.existence_window()
        windows['regularity'] = {
            'p': config.growth_p,
            'upper': 2.0 + 2.0 / config.alpha,
            'satisfied': bool(config.growth_p <= 2.0 + 2.0 / config.alpha + 1e-12),
        }

    verdict = 'PASS' if all(conditions[name]['passed'] for name in REQUIRED) else 'FAIL'
    log = [f"{name}: {'pass' if c['passed'] else 'FAIL'} ({c['detail']}; value = {c['value']})"
           for name, c in conditions.items()]
    samples = pd.DataFrame({
        'magnitude': t,
        'min_F': min_F,
        'max_abs_F': max_abs_F,
        'max_grad_psi': worst_grad_psi,
        'max_grad_phi': worst_grad_phi,
    })
    report = GrowthReport(conditions=conditions, fitted_mu=fitted_mu, verdict=verdict, samples=samples,
                          windows=windows, log=log)
    logger.info("growth_condition_check: %s (failed: %s)", verdict, report.failed)
    return report
