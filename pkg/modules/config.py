"""
config.py - Experiment Configuration
JSON experiment files, `key.path=value` overrides and validation of every
block before any computation runs. Validation errors name the offending key.
"""

import json
import logging
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from caching import config_fingerprint
from errors import ConfigurationError
from geometry.domain import SurfaceDomain, build_domain
from geometry.fields import MapField, affine_map, bubble_map, constant_map, random_smooth_map
from geometry.target import HomotopyClass, TargetManifold, get_target
from variational.configs import ActionConfig, ContinuationSchedule, SolverConfig

logger = logging.getLogger(__name__)

# Experiment kinds and the subcommands that run them
EXPERIMENT_KINDS = {
    'solve': 'minimize',
    'saddle': 'saddle',
    'continue': 'continuation',
    'flow': 'flow',
    'spectrum': 'spectrum',
    'diagnose': 'diagnose',
    'uniqueness': 'uniqueness',
    'convexity': 'convexity',
    'growthcheck': 'growth-check',
}

INITIAL_KINDS = ('random', 'affine', 'constant', 'bubble', 'archive')

DIAGNOSTICS_DEFAULTS = {
    'radius': None,             # None -> max(2h, side_length / 8)
    'epsilon0': 0.1,
    'modes': 24,
    'samples': 1000,
    'trials': 5,
    'steps': 11,
    'directions': 50,
    'fd_step': 1e-4,
    'gradient_tol': 1e-6,
    'minimax': True,
}

INITIAL_DEFAULTS = {
    'kind': 'random',
    'amplitude': 0.05,
    'modes': 2,
    'spinor_amplitude': 0.1,
    'point': None,
    'center': None,
    'scale': None,
    'path': None,
}


@contextmanager
def _scope(prefix: str):
    """Re-raise configuration errors with the block name in front of the key."""
    try:
        yield
    except ConfigurationError as exc:
        key = f"{prefix}.{exc.key}" if exc.key and not exc.key.startswith(prefix + '.') else (exc.key or prefix)
        raise ConfigurationError(exc.detail, key=key) from exc
    except TypeError as exc:
        raise ConfigurationError(f"unexpected setting: {exc}", key=prefix) from exc


def _require(block: dict, key: str, prefix: str) -> Any:
    if key not in block:
        raise ConfigurationError(f"missing required key '{key}'", key=f"{prefix}.{key}")
    return block[key]


def _dataclass_kwargs(cls, block: dict, prefix: str) -> dict:
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(block) - known)
    if unknown:
        raise ConfigurationError(f"unknown keys {unknown}; expected some of {sorted(known)}",
                                 key=f"{prefix}.{unknown[0]}")
    return dict(block)


@dataclass
class ExperimentConfig:
    """
    One experiment run.

    Attributes:
        experiment: Experiment kind (values of EXPERIMENT_KINDS)
        domain: n, side_length, spin_structure
        target: kind ('sphere' | 'torus') and params
        action: alpha (required), k or perturbation_scale, mu, perturbation, perturbation_params
        homotopy_class: winding (torus, default identity) or degree (sphere, default 0)
        solver: SolverConfig fields
        schedule: ContinuationSchedule fields (continuation only)
        diagnostics: Radii, thresholds and sample counts of the diagnostics
        initial: How the starting map is built (random, affine, constant, bubble, archive)
        seed: Random seed
        output_dir: Where outputs are written
    """
    experiment: str = 'minimize'
    domain: Dict[str, Any] = field(default_factory=lambda: {'n': 16, 'side_length': 2 * np.pi,
                                                            'spin_structure': [1, 1]})
    target: Dict[str, Any] = field(default_factory=lambda: {'kind': 'torus', 'params': {}})
    action: Dict[str, Any] = field(default_factory=dict)
    homotopy_class: Dict[str, Any] = field(default_factory=dict)
    solver: Dict[str, Any] = field(default_factory=dict)
    schedule: Dict[str, Any] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    initial: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    output_dir: str = 'results'

    def __post_init__(self):
        self.diagnostics = {**DIAGNOSTICS_DEFAULTS, **self.diagnostics}
        self.initial = {**INITIAL_DEFAULTS, **self.initial}
        self.validate()

    # -------------------------------------------------------------------------
    # Validation
    # -------------------------------------------------------------------------

    def validate(self) -> None:
        if self.experiment not in EXPERIMENT_KINDS.values():
            raise ConfigurationError(f"Experiment '{self.experiment}' not found. "
                                     f"Available: {list(EXPERIMENT_KINDS.values())}", key="experiment")
        if int(self.seed) != self.seed or not (0 <= int(self.seed) < 2 ** 64):
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}", key="seed")
        self.seed = int(self.seed)
        domain = self.build_domain()
        target = self.build_target()
        self.action_config()
        self.solver_config()
        self.homotopy_class_of(target)
        if self.experiment == 'continuation':
            self.continuation_schedule()
        self._validate_diagnostics(domain)
        self._validate_initial(target)

    def _validate_diagnostics(self, domain: SurfaceDomain) -> None:
        block = self.diagnostics
        unknown = sorted(set(block) - set(DIAGNOSTICS_DEFAULTS))
        if unknown:
            raise ConfigurationError(f"unknown keys {unknown}", key=f"diagnostics.{unknown[0]}")
        for key in ('modes', 'samples', 'trials', 'steps', 'directions'):
            if int(block[key]) != block[key] or block[key] < 1:
                raise ConfigurationError(f"must be a positive integer, got {block[key]}", key=f"diagnostics.{key}")
        if block['epsilon0'] <= 0:
            raise ConfigurationError("epsilon0 must be positive", key="diagnostics.epsilon0")
        radius = self.scan_radius(domain)
        if radius < 2 * domain.h * (1 - 1e-12) or radius > domain.side_length / 2:
            raise ConfigurationError(f"radius {radius:g} must lie in [2h, side_length/2] = "
                                     f"[{2 * domain.h:g}, {domain.side_length / 2:g}]", key="diagnostics.radius")

    def _validate_initial(self, target: TargetManifold) -> None:
        block = self.initial
        unknown = sorted(set(block) - set(INITIAL_DEFAULTS))
        if unknown:
            raise ConfigurationError(f"unknown keys {unknown}", key=f"initial.{unknown[0]}")
        kind = block['kind']
        if kind not in INITIAL_KINDS:
            raise ConfigurationError(f"Initial map '{kind}' not found. Available: {list(INITIAL_KINDS)}",
                                     key="initial.kind")
        if kind == 'affine' and not target.is_flat:
            raise ConfigurationError("affine starts need a torus target", key="initial.kind")
        if kind == 'bubble' and target.is_flat:
            raise ConfigurationError("bubble starts need a sphere target", key="initial.kind")
        if kind == 'archive' and not block.get('path'):
            raise ConfigurationError("archive start needs a path", key="initial.path")
        if block['amplitude'] < 0:
            raise ConfigurationError("amplitude must be non-negative", key="initial.amplitude")

    # -------------------------------------------------------------------------
    # Builders
    # -------------------------------------------------------------------------

    def build_domain(self) -> SurfaceDomain:
        with _scope('domain'):
            block = dict(self.domain)
            n = _require(block, 'n', 'domain')
            side = block.get('side_length', 2 * np.pi)
            spin = tuple(block.get('spin_structure', (1, 1)))
            return build_domain(n, side, spin)

    def build_target(self) -> TargetManifold:
        with _scope('target'):
            kind = _require(self.target, 'kind', 'target')
            params = dict(self.target.get('params', {}))
            try:
                return get_target(kind, **params)
            except ConfigurationError as exc:
                raise ConfigurationError(exc.detail, key='kind') from exc

    def action_config(self, **changes) -> ActionConfig:
        with _scope('action'):
            block = dict(self.action)
            _require(block, 'alpha', 'action')
            if 'k' in block:
                k = block.pop('k')
                if 'perturbation_scale' in block:
                    raise ConfigurationError("give either k or perturbation_scale, not both", key='k')
                if k <= 0:
                    raise ConfigurationError(f"k must be positive, got {k}", key='k')
                block['perturbation_scale'] = 1.0 / k
            block.update(changes)
            return ActionConfig(**_dataclass_kwargs(ActionConfig, block, 'action'))

    def solver_config(self) -> SolverConfig:
        with _scope('solver'):
            return SolverConfig(**_dataclass_kwargs(SolverConfig, self.solver, 'solver'))

    def continuation_schedule(self) -> ContinuationSchedule:
        with _scope('schedule'):
            block = dict(self.schedule)
            block.setdefault('alphas', [self.action_config().alpha])
            block.setdefault('mu', self.action.get('mu'))
            block['solver'] = self.solver_config()
            return ContinuationSchedule(**_dataclass_kwargs(ContinuationSchedule, block, 'schedule'))

    def homotopy_class_of(self, target: Optional[TargetManifold] = None) -> HomotopyClass:
        target = target or self.build_target()
        block = self.homotopy_class
        if target.is_flat:
            if 'degree' in block:
                raise ConfigurationError("torus targets take a winding matrix, not a degree", key="class.degree")
            winding = np.asarray(block.get('winding', [[1, 0], [0, 1]]))
            if winding.shape != (2, 2) or not np.all(winding == np.round(winding)):
                raise ConfigurationError(f"winding must be a 2x2 integer matrix, got {winding.tolist()}",
                                         key="class.winding")
            return HomotopyClass.torus(winding.astype(int))
        if 'winding' in block:
            raise ConfigurationError("sphere targets take a degree, not a winding matrix", key="class.winding")
        degree = block.get('degree', 0)
        if int(degree) != degree:
            raise ConfigurationError(f"degree must be an integer, got {degree}", key="class.degree")
        return HomotopyClass.sphere(int(degree))

    def scan_radius(self, domain: Optional[SurfaceDomain] = None) -> float:
        domain = domain or self.build_domain()
        radius = self.diagnostics.get('radius')
        return float(radius) if radius is not None else max(2.0 * domain.h, domain.side_length / 8.0)

    def initial_map(self, rng: np.random.Generator) -> MapField:
        """Starting map of the run (archive starts are loaded by the runner)."""
        domain = self.build_domain()
        target = self.build_target()
        expected = self.homotopy_class_of(target)
        block = self.initial
        kind = block['kind']
        if kind == 'affine':
            return affine_map(domain, target, expected.matrix)
        if kind == 'constant':
            point = block['point'] if block['point'] is not None else np.eye(target.ambient_dim)[-1]
            return constant_map(domain, target, point)
        if kind == 'bubble':
            center = block['center'] or (domain.side_length / 2, domain.side_length / 2)
            scale = block['scale'] or domain.side_length / 8
            return bubble_map(domain, tuple(center), scale, target)
        winding = expected.matrix if target.is_flat else None
        return random_smooth_map(domain, target, rng, amplitude=block['amplitude'], modes=block['modes'],
                                 winding=winding)

    # -------------------------------------------------------------------------
    # Serialisation
    # -------------------------------------------------------------------------

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self), default=_json_default))

    def fingerprint(self) -> str:
        return config_fingerprint(self.to_dict())


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


# =============================================================================
# LOADING
# =============================================================================

def parse_override(text: str) -> tuple:
    """Split 'key.path=value'; the value is parsed as JSON and falls back to a string."""
    if '=' not in text:
        raise ConfigurationError(f"override '{text}' is not of the form key.path=value", key=text)
    key, raw = text.split('=', 1)
    key = key.strip()
    if not key:
        raise ConfigurationError(f"override '{text}' has an empty key", key=text)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split('.'), value


def apply_overrides(raw: dict, overrides: Sequence[str]) -> dict:
    """Apply overrides to a nested config dict in place and return it."""
    for text in overrides or ():
        path, value = parse_override(text)
        node = raw
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigurationError(f"cannot descend into non-block value at '{part}'", key='.'.join(path))
            node = child
        node[path[-1]] = value
        logger.debug("override %s = %r", '.'.join(path), value)
    return raw


def _rename_class_block(raw: dict) -> dict:
    if 'class' in raw:
        if 'homotopy_class' in raw:
            raise ConfigurationError("give either 'class' or 'homotopy_class'", key="class")
        raw['homotopy_class'] = raw.pop('class')
    return raw


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = _rename_class_block(dict(raw))
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigurationError(f"unknown top-level keys {unknown}", key=unknown[0])
    return ExperimentConfig(**raw)


def load_config(path, overrides: Optional[List[str]] = None, experiment: Optional[str] = None,
                seed: Optional[int] = None, output_dir: Optional[str] = None) -> ExperimentConfig:
    """
    Read a JSON experiment file, apply overrides and command-line settings, validate.

    Raises:
        ConfigurationError: on unreadable or malformed files (with line and column)
            and on invalid values (with the offending key)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}", key="config") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                                 key="config") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config file must hold a JSON object", key="config")
    raw = apply_overrides(raw, overrides or [])
    if experiment is not None:
        raw['experiment'] = experiment
    if seed is not None:
        raw['seed'] = seed
    if output_dir is not None:
        raw['output_dir'] = output_dir
    config = config_from_dict(raw)
    logger.info("loaded %s experiment from %s (fingerprint %s)", config.experiment, path, config.fingerprint())
    return config
