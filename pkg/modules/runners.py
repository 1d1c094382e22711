"""
runners.py - Experiment Runners
One run_<experiment> function per experiment kind, a registry mapping kinds
to runners, and execute(), which runs a validated configuration and writes
the archive, report, PDF summary and CSV tables.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from errors import ConfigurationError, ConvergenceError, SpectralError, WindingError
from geometry.fields import MapField, affine_map, random_smooth_map, random_tangent_spinor
from geometry.target import check_class
from diagnostics.analysis import classify_critical_point, concentration_scan, energy_report, residual_report
from diagnostics.experiments import (
    FAIL,
    NOT_APPLICABLE,
    PASS,
    convexity_experiment,
    gradient_check,
    minimax_estimates,
    uniqueness_experiment,
)
from diagnostics.growth import growth_condition_check
from diagnostics.reporting import FORMAT_VERSION, DiagnosticsReport, generate_pdf_report
from variational.solver import (
    continuation_run,
    minimize_alpha_energy,
    mountain_pass_init,
    newton_solve,
    pseudo_gradient_flow,
)
from variational.spectral import dirac_spectrum

from .archive import load_archive, map_from_archive, save_archive, spinor_from_archive, state_archive, write_atomic
from .config import ExperimentConfig
from .export import continuation_table, export_csv, spectrum_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 2

SADDLE_MARGIN = 1e-6
SPECTRUM_RESIDUAL_TOL = 1e-8


@dataclass
class RunOutcome:
    """Report plus the state and tables a run produced."""
    report: DiagnosticsReport
    phi: Optional[MapField] = None
    psi: Optional[np.ndarray] = None
    tables: Dict[str, Tuple[str, pd.DataFrame]] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_FAIL if self.report.verdict == FAIL else EXIT_OK


# =============================================================================
# SHARED STEPS
# =============================================================================

def _new_report(config: ExperimentConfig) -> DiagnosticsReport:
    return DiagnosticsReport(
        experiment=config.experiment,
        provenance={
            'config': config.to_dict(),
            'config_fingerprint': config.fingerprint(),
            'seed': config.seed,
            'format': FORMAT_VERSION,
        },
    )


def _start_state(config: ExperimentConfig, rng: np.random.Generator) -> Tuple[MapField, Optional[np.ndarray]]:
    """Initial map (and spinor for archive starts), checked against the configured class."""
    domain = config.build_domain()
    target = config.build_target()
    if config.initial['kind'] == 'archive':
        archive = load_archive(config.initial['path'])
        phi = map_from_archive(archive, domain, target)
        psi = spinor_from_archive(archive, phi)
    else:
        phi = config.initial_map(rng)
        psi = None
    expected = config.homotopy_class_of(target)
    try:
        check_class(phi, expected)
    except WindingError as exc:
        key = 'class.winding' if target.is_flat else 'class.degree'
        raise ConfigurationError(f"initial map is not in the configured class: {exc}", key=key) from exc
    return phi, psi


def _describe_state(report: DiagnosticsReport, config: ExperimentConfig, phi: MapField, psi: np.ndarray,
                    action_config) -> None:
    report.energies = energy_report(phi, psi, action_config)
    report.residuals = residual_report(phi, psi, action_config)
    try:
        data = dirac_spectrum(phi, config.diagnostics['modes'])
        report.lambda_plus = data.lambda_plus
    except SpectralError as exc:
        report.log.append(f"spectrum unavailable: {exc}")
    scan = concentration_scan(phi, config.scan_radius(phi.domain), config.diagnostics['epsilon0'],
                              alpha=action_config.alpha)
    report.concentration = scan.summary()


def _zero_spinor(phi: MapField) -> np.ndarray:
    return np.zeros(phi.domain.grid_shape + (2, phi.dim), dtype=complex)


# =============================================================================
# RUNNERS
# =============================================================================

def run_minimize(config: ExperimentConfig, rng: np.random.Generator) -> RunOutcome:
    report = _new_report(config)
    phi0, _ = _start_state(config, rng)
    action_config = config.action_config(perturbation_scale=0.0)
    expected = config.homotopy_class_of()
    point = minimize_alpha_energy(phi0, action_config.alpha, config.solver_config(), expected)
    psi = _zero_spinor(point.phi)
    _describe_state(report, config, point.phi, psi, action_config)
    report.results = {
        'm_theta': point.action.alpha_energy,
        'iterations': point.iterations,
        'homotopy_class': point.homotopy_class.to_dict(),
        'converged': point.converged,
    }
    report.log.append(f"minimised E^alpha to {point.action.alpha_energy:.12g} in {point.iterations} iterations")
    report.verdict = PASS if point.converged else FAIL
    return RunOutcome(report, point.phi, psi, {'history': ('history', point.history_frame())})


def run_saddle(config: ExperimentConfig, rng: np.random.Generator) -> RunOutcome:
    report = _new_report(config)
    phi0, _ = _start_state(config, rng)
    action_config = config.action_config()
    solver = config.solver_config()
    expected = config.homotopy_class_of()
    modes = config.diagnostics['modes']

    minimiser = minimize_alpha_energy(phi0, action_config.alpha, solver, expected)
    m_theta = minimiser.action.alpha_energy
    start = mountain_pass_init(minimiser.phi, action_config, modes=modes)
    point = newton_solve(start.phi, start.psi, action_config, solver, expected, spectral_modes=modes)
    _describe_state(report, config, point.phi, point.psi, action_config)
    classification = classify_critical_point(point, m_theta)
    above = point.action.total > m_theta + SADDLE_MARGIN * abs(m_theta)
    report.results = {
        'm_theta': m_theta,
        'mountain_pass': {'radius': start.radius, 'R2': start.R2, 'height': start.height, 'base': start.base},
        'critical_point': point.summary(),
        'classification': classification,
        'above_m_theta': bool(above),
    }
    report.log.append(f"mountain pass r* = {start.radius:.10g} with height {start.height:.10g}")
    report.log.append(f"Newton {point.diagnostics.get('reason')} after {point.iterations} iterations, "
                      f"residual {point.combined_residual:.3e}")
    report.verdict = PASS if point.converged and point.nontrivial and above else FAIL
    tables = {'profile': ('profile', start.profile), 'history': ('history', point.history_frame())}
    return RunOutcome(report, point.phi, point.psi, tables)


def run_continuation(config: ExperimentConfig, rng: np.random.Generator) -> RunOutcome:
    report = _new_report(config)
    phi0, _ = _start_state(config, rng)
    schedule = config.continuation_schedule()
    result = continuation_run(schedule, phi0, config.homotopy_class_of())
    report.results = {
        'stages': len(result.points),
        'energy_bound': result.energy_bound,
        'bounded': result.bounded,
        'quartic_slopes': {str(k): v for k, v in result.quartic_slopes.items()},
        'failures': result.failures,
    }
    final = result.final
    if final is not None:
        report.energies = energy_report(final.phi, final.psi, final.config)
        report.residuals = residual_report(final.phi, final.psi, final.config)
        report.results['final'] = final.summary()
    all_converged = bool(len(result.trace)) and bool(result.trace['converged'].all())
    report.verdict = PASS if all_converged and not result.failures else FAIL
    report.log.append(f"{len(result.points)} stages, {len(result.failures)} failures, bounded = {result.bounded}")
    return RunOutcome(report, final.phi if final else None, final.psi if final else None,
                      {'continuation': ('continuation', continuation_table(result.trace))})


def run_flow(config: ExperimentConfig, rng: np.random.Generator) -> RunOutcome:
    report = _new_report(config)
    phi0, psi0 = _start_state(config, rng)
    if psi0 is None:
        psi0 = config.initial['spinor_amplitude'] * random_tangent_spinor(phi0, rng)
    action_config = config.action_config()
    trajectory = pseudo_gradient_flow(phi0, psi0, action_config, config.solver_config(),
                                      expected_class=config.homotopy_class_of())
    frame = trajectory.to_frame()
    increases = np.diff(frame['action'].to_numpy())
    monotone = bool(np.all(increases <= 10 * np.finfo(float).eps * np.abs(frame['action'].to_numpy()[:-1])))
    violations = trajectory.violations()
    _describe_state(report, config, trajectory.phi, trajectory.psi, action_config)
    report.results = {
        'accepted': trajectory.accepted,
        'rejected': trajectory.rejected,
        'stalled': trajectory.stalled,
        'final_time': trajectory.diagnostics['final_time'],
        'total_decrease': trajectory.total_decrease,
        'predicted_decrease': trajectory.predicted_decrease,
        'pseudo_gradient_violations': violations,
        'monotone': monotone,
    }
    report.verdict = PASS if violations == 0 and monotone and not trajectory.stalled else FAIL
    return RunOutcome(report, trajectory.phi, trajectory.psi, {'flow': ('flow', frame)})


def run_spectrum(config: ExperimentConfig, rng: np.random.Generator) -> RunOutcome:
    report = _new_report(config)
    phi, _ = _start_state(config, rng)
    data = dirac_spectrum(phi, config.diagnostics['modes'])
    report.lambda_plus = data.lambda_plus
    report.results = data.summary()
    report.verdict = PASS if float(data.residuals.max()) <= SPECTRUM_RESIDUAL_TOL else FAIL
    return RunOutcome(report, phi, None, {'spectrum': ('spectrum', spectrum_table(data.to_frame()))})


def run_diagnose(config: ExperimentConfig, rng: np.random.Generator) -> RunOutcome:
    report = _new_report(config)
    phi, psi = _start_state(config, rng)
    action_config = config.action_config()
    solver = config.solver_config()
    block = config.diagnostics
    minimiser = None
    if config.initial['kind'] != 'archive':
        minimiser = minimize_alpha_energy(phi, action_config.alpha, solver, config.homotopy_class_of())
        phi = minimiser.phi
        report.log.append(f"diagnosing the alpha-energy minimiser (m_theta = {minimiser.action.alpha_energy:.12g})")
    if psi is None:
        psi = _zero_spinor(phi)
    _describe_state(report, config, phi, psi, action_config)

    trial = psi
    if not np.any(psi):
        trial = config.initial['spinor_amplitude'] * random_tangent_spinor(phi, rng)
        report.log.append("gradient check evaluated at a random spinor since the state spinor vanishes")
    check = gradient_check(phi, trial, action_config, directions=block['directions'], step=block['fd_step'],
                           rng=rng, tol=block['gradient_tol'])
    report.add_experiment('gradient_check', check.verdict, {**check.measurements, 'log': check.log})

    if block['minimax'] and minimiser is not None:
        try:
            estimate = minimax_estimates(phi, action_config, samples=block['samples'], rng=rng,
                                         modes=block['modes'])
            verdict = PASS if estimate.holds else (NOT_APPLICABLE if estimate.a is None else FAIL)
            report.add_experiment('minimax', verdict, estimate.to_dict())
        except (SpectralError, ConvergenceError) as exc:
            report.add_experiment('minimax', NOT_APPLICABLE, {'log': [str(exc)]})
    report.results = {'m_theta': minimiser.action.alpha_energy if minimiser else None}
    return RunOutcome(report, phi, psi, {})


def run_uniqueness(config: ExperimentConfig, rng: np.random.Generator) -> RunOutcome:
    report = _new_report(config)
    target = config.build_target()
    expected = config.homotopy_class_of(target)
    verdict = uniqueness_experiment(
        config.build_domain(), target, expected.matrix if target.is_flat else None,
        config.action_config().alpha, trials=config.diagnostics['trials'], rng=rng,
        solver=config.solver_config(), amplitude=config.initial['amplitude'],
    )
    report.add_experiment('uniqueness', verdict.verdict, {**verdict.measurements, 'log': verdict.log})
    report.verdict = verdict.verdict
    return RunOutcome(report)


def run_convexity(config: ExperimentConfig, rng: np.random.Generator) -> RunOutcome:
    report = _new_report(config)
    target = config.build_target()
    if not target.is_flat:
        report.add_experiment('convexity', NOT_APPLICABLE, {'log': [f"target {target.name} is curved"]})
        report.verdict = NOT_APPLICABLE
        return RunOutcome(report)
    domain = config.build_domain()
    W = config.homotopy_class_of(target).matrix
    phi0 = affine_map(domain, target, W)
    phi1 = random_smooth_map(domain, target, rng, amplitude=config.initial['amplitude'],
                             modes=config.initial['modes'], winding=W)
    verdict = convexity_experiment(phi0, phi1, config.action_config().alpha, steps=config.diagnostics['steps'])
    report.add_experiment('convexity', verdict.verdict, {**verdict.measurements, 'log': verdict.log})
    report.verdict = verdict.verdict
    return RunOutcome(report, phi1, None, {})


def run_growth_check(config: ExperimentConfig, rng: np.random.Generator) -> RunOutcome:
    report = _new_report(config)
    action_config = config.action_config()
    target = config.build_target()
    growth = growth_condition_check(action_config.hook(), rng=rng, target_dim=target.ambient_dim,
                                    alpha=action_config.alpha, config=action_config)
    report.results = {
        'perturbation': action_config.hook().describe(),
        'fitted_mu': growth.fitted_mu,
        'failed': growth.failed,
        'windows': growth.windows,
    }
    report.add_experiment('growth', growth.verdict, {'conditions': growth.conditions, 'log': growth.log})
    report.verdict = growth.verdict
    report.log.extend(growth.log)
    return RunOutcome(report, tables={'growth': ('growth', growth.samples)})


# Available experiments (kind -> runner)
RUNNERS: Dict[str, Callable[[ExperimentConfig, np.random.Generator], RunOutcome]] = {
    'minimize': run_minimize,
    'saddle': run_saddle,
    'continuation': run_continuation,
    'flow': run_flow,
    'spectrum': run_spectrum,
    'diagnose': run_diagnose,
    'uniqueness': run_uniqueness,
    'convexity': run_convexity,
    'growth-check': run_growth_check,
}


def get_available_experiments() -> List[str]:
    """Return list of available experiment kinds."""
    return list(RUNNERS.keys())


def get_runner(kind: str) -> Callable[[ExperimentConfig, np.random.Generator], RunOutcome]:
    if kind not in RUNNERS:
        raise ConfigurationError(f"Experiment '{kind}' not found. Available: {get_available_experiments()}",
                                 key="experiment")
    return RUNNERS[kind]


# =============================================================================
# EXECUTION
# =============================================================================

def write_outputs(outcome: RunOutcome, config: ExperimentConfig) -> Dict[str, Path]:
    """Write report.json, summary.pdf, state.sdaf and one CSV per table."""
    out_dir = Path(config.output_dir)
    written = {}
    report = outcome.report
    written['report'] = write_atomic(out_dir / 'report.json', report.to_json().encode('utf-8'))
    written['summary'] = write_atomic(out_dir / 'summary.pdf', generate_pdf_report(report))
    if outcome.phi is not None:
        archive = state_archive(outcome.phi, outcome.psi, metadata={
            'experiment': config.experiment,
            'config_fingerprint': config.fingerprint(),
            'seed': config.seed,
        })
        written['archive'] = save_archive(out_dir / 'state.sdaf', archive)
    for name, (kind, frame) in outcome.tables.items():
        if frame is not None and len(frame.columns):
            written[name] = export_csv(frame, out_dir / f'{name}.csv', kind)
    return written


def execute(config: ExperimentConfig) -> RunOutcome:
    """
    Run a validated configuration and write its outputs.

    The config echo is written before the run starts so that failed runs
    still leave it behind.
    """
    out_dir = Path(config.output_dir)
    write_atomic(out_dir / 'config.json', json.dumps(config.to_dict(), indent=2, sort_keys=True).encode('utf-8'))
    rng = np.random.default_rng(config.seed)
    logger.info("running %s (seed %d) into %s", config.experiment, config.seed, out_dir)
    outcome = get_runner(config.experiment)(config, rng)
    write_outputs(outcome, config)
    logger.info("%s finished with verdict %s", config.experiment, outcome.report.verdict)
    return outcome
