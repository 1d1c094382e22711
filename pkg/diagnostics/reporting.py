"""
reporting.py - Diagnostics Reports
The JSON-serialisable DiagnosticsReport written by every run and a PDF
summary of it
"""

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from fpdf import FPDF

FORMAT_VERSION = "sdaf-1"

VERDICT_PASS = 'PASS'
VERDICT_FAIL = 'FAIL'


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples to JSON-native values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return {'re': value.real, 'im': value.imag}
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


@dataclass
class DiagnosticsReport:
    """
    Everything a run reports besides the field archive.

    Attributes:
        experiment: Experiment kind
        verdict: 'PASS' or 'FAIL' (experiments may also report 'NOT-APPLICABLE')
        energies: E^alpha, int |psi|^4, int(|d phi|^{2 alpha} + |psi|^4) and the action decomposition
        residuals: Perturbed and unperturbed residual norms
        lambda_plus: Spectral gap at the map, when computed
        concentration: Concentration scan summary
        experiments: Per-experiment verdicts with measurements
        results: Experiment-specific values (m_theta, traces summaries, ...)
        provenance: Config echo, config fingerprint, seed, format version
        log: Human-readable steps taken during the run
    """
    experiment: str
    verdict: str = VERDICT_PASS
    energies: Dict[str, Any] = field(default_factory=dict)
    residuals: Dict[str, Any] = field(default_factory=dict)
    lambda_plus: Optional[float] = None
    concentration: Dict[str, Any] = field(default_factory=dict)
    experiments: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    provenance: Dict[str, Any] = field(default_factory=dict)
    log: List[str] = field(default_factory=list)

    def add_experiment(self, name: str, verdict: str, payload: dict) -> None:
        """Record an experiment and fold a FAIL into the overall verdict."""
        self.experiments[name] = dict(payload, verdict=verdict)
        if verdict == VERDICT_FAIL:
            self.verdict = VERDICT_FAIL

    @property
    def passed(self) -> bool:
        return self.verdict != VERDICT_FAIL

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def to_json(self) -> str:
        """Deterministic JSON: sorted keys, fixed separators."""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


class PDFReport(FPDF):
    """Single-column PDF layout: title rule, numbered sections, two-column key/value rows."""

    KEY_WIDTH = 70

    def __init__(self, title: str = 'Spin Torus Diagnostics Report'):
        super().__init__()
        self.title_text = title
        self.set_margins(18, 16, 18)
        self.set_auto_page_break(auto=True, margin=18)
        self.alias_nb_pages()

    def header(self):
        self.set_font('Helvetica', '', 9)
        self.set_text_color(90, 90, 90)
        self.cell(0, 6, self.title_text, ln=True, align='L')
        self.set_draw_color(40, 40, 40)
        self.line(self.l_margin, self.get_y(), self.w - self.r_margin, self.get_y())
        self.set_text_color(0, 0, 0)
        self.ln(4)

    def footer(self):
        self.set_y(-12)
        self.set_font('Helvetica', '', 8)
        self.set_text_color(90, 90, 90)
        self.cell(0, 6, f'{self.page_no()} / {{nb}}', align='R')

    def chapter_title(self, title):
        self.ln(2)
        self.set_font('Helvetica', 'B', 11)
        self.cell(0, 7, _latin1(title.upper()), ln=True)
        self.set_draw_color(160, 160, 160)
        self.line(self.l_margin, self.get_y(), self.l_margin + 40, self.get_y())
        self.ln(2)

    def body_text(self, text):
        self.set_font('Courier', '', 9)
        self.multi_cell(0, 5, _latin1(text))

    def key_values(self, values: Dict[str, Any]):
        for key, value in _flatten(values).items():
            self.set_font('Helvetica', 'B', 9)
            self.cell(self.KEY_WIDTH, 5, _latin1(key))
            self.set_font('Courier', '', 9)
            self.multi_cell(0, 5, _latin1(_format(value)))


def _flatten(values: Dict[str, Any], prefix: str = '') -> Dict[str, Any]:
    """Nested mappings as one level with dotted keys."""
    flat: Dict[str, Any] = {}
    for key, value in values.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _latin1(text: str) -> str:
    return text.encode('latin-1', 'replace').decode('latin-1')


def _format(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def generate_pdf_report(report: DiagnosticsReport) -> bytes:
    """Render a report as PDF bytes."""
    data = report.to_dict()
    pdf = PDFReport()
    pdf.add_page()

    pdf.set_font('Helvetica', 'B', 15)
    pdf.cell(0, 9, _latin1(report.experiment), ln=True)
    pdf.set_font('Helvetica', '', 10)
    pdf.cell(0, 6, _latin1(f"verdict {report.verdict}"), ln=True)

    pdf.chapter_title('Provenance')
    provenance = data.get('provenance', {})
    pdf.key_values({k: v for k, v in provenance.items() if k != 'config'})

    pdf.chapter_title('Energies and residuals')
    pdf.key_values(data['energies'])
    pdf.key_values(data['residuals'])
    if report.lambda_plus is not None:
        pdf.key_values({'lambda_plus': report.lambda_plus})
    if not (data['energies'] or data['residuals']):
        pdf.body_text('no state evaluated')

    pdf.chapter_title('Results')
    pdf.key_values(data['results'])
    if data['concentration']:
        pdf.key_values({'concentration': data['concentration']})

    pdf.chapter_title('Experiments')
    if data['experiments']:
        for name, payload in data['experiments'].items():
            pdf.key_values({name: payload.get('verdict')})
            for line in payload.get('log', []):
                pdf.body_text(f"    {line}")
    else:
        pdf.body_text('none run')

    if report.log:
        pdf.chapter_title('Log')
        for line in report.log:
            pdf.body_text(line)

    return pdf.output(dest='S').encode('latin-1')
