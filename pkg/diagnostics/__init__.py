"""
diagnostics package - Verification Instruments
Contains concentration scans, energy/residual summaries, the minimax,
uniqueness, convexity and gradient experiments, growth-condition checks
and report assembly
"""

from .analysis import (
    ConcentrationMap,
    concentration_scan,
    energy_report,
    residual_report,
    classify_critical_point
)

from .experiments import (
    PASS,
    FAIL,
    NOT_APPLICABLE,
    ExperimentVerdict,
    MinimaxEstimate,
    minimax_estimates,
    geodesic_homotopy,
    uniqueness_experiment,
    convexity_experiment,
    gradient_check
)

from .growth import (
    GrowthReport,
    growth_condition_check
)

from .reporting import (
    FORMAT_VERSION,
    DiagnosticsReport,
    PDFReport,
    generate_pdf_report
)

__all__ = [
    'ConcentrationMap',
    'concentration_scan',
    'energy_report',
    'residual_report',
    'classify_critical_point',
    'PASS',
    'FAIL',
    'NOT_APPLICABLE',
    'ExperimentVerdict',
    'MinimaxEstimate',
    'minimax_estimates',
    'geodesic_homotopy',
    'uniqueness_experiment',
    'convexity_experiment',
    'gradient_check',
    'GrowthReport',
    'growth_condition_check',
    'FORMAT_VERSION',
    'DiagnosticsReport',
    'PDFReport',
    'generate_pdf_report'
]
