"""
export.py - CSV Export
Tabular outputs (spectra, flow and continuation traces, concentration maps,
growth samples) written with pandas, each next to a JSON sidecar that
documents its columns.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional

import pandas as pd

from .archive import write_atomic

logger = logging.getLogger(__name__)

# Column schemas per table kind (column -> description), in output order
SCHEMAS: Dict[str, Dict[str, str]] = {
    'spectrum': {
        'index': 'mode index, sorted by |eigenvalue| then eigenvalue',
        'eigenvalue': 'eigenvalue of the twisted Dirac operator',
        'residual': 'L2 norm of D_phi e - lambda e',
        'band_weight': 'squared L2 norm of the part of e with |theta| <= n/4 (1 for a physical mode, 0 for a doubler)',
    },
    'flow': {
        't': 'flow time',
        'action': 'perturbed action at the accepted state',
        'dual_norm': 'norm of dL (L2 horizontal, H^1/2 vertical)',
        'omega_norm': 'norm of the pseudo-gradient field',
        'eta': 'normalisation min(1, 1/||omega||)',
        'dL_omega': 'dL applied to omega, central difference of the action along the step',
        'norm_margin': '2||dL|| - ||omega|| (>= 0 required)',
        'descent_margin': 'dL(omega) - ||dL||^2 (>= 0 required)',
        'predicted_decrease': 'dt * eta * dL(omega) for the step ending here',
    },
    'continuation': {
        'stage': 'stage index',
        'alpha': 'alpha of the stage',
        'k': 'perturbation index, eps = 1/k',
        'action': 'perturbed action at the stage solution',
        'spinor_quartic': 'int |psi|^4',
        'bound_energy': 'int (|d phi|^(2 alpha) + |psi|^4)',
        'within_bound': 'bound_energy <= Lambda',
        'm_theta': 'minimal alpha-energy of the stage alpha',
        'horizontal_residual': 'L2 norm of the horizontal gradient',
        'vertical_residual': 'H^1/2 norm of the vertical gradient',
        'unperturbed_horizontal_residual': 'horizontal residual with eps = 0',
        'unperturbed_vertical_residual': 'vertical residual with eps = 0',
        'converged': 'Newton reached grad_tol',
        'nontrivial': 'psi is nonzero',
    },
    'concentration': {
        'x': 'center x coordinate',
        'y': 'center y coordinate',
        'local_energy': 'int over B(center, r) of |d phi|^2',
        'flagged': 'local_energy >= epsilon0',
        'rescaled_energy': 'r^(2 alpha - 2) int over the ball of |d phi|^(2 alpha)',
    },
    'growth': {
        'magnitude': '|psi| sample',
        'min_F': 'smallest F over sampled directions and map points',
        'max_abs_F': 'largest |F|',
        'max_grad_psi': 'largest |F_psi|',
        'max_grad_phi': 'largest |F_phi|',
    },
    'profile': {
        'radius': 'r along the mountain-pass ray',
        'action': 'action at r e',
    },
    'history': {
        'iteration': 'outer iteration',
        'energy': 'alpha-energy (minimisation)',
        'gradient_norm': 'L2 norm of the gradient (minimisation)',
        'step': 'accepted step length (minimisation)',
        'residual': 'combined residual (Newton)',
        'damping': 'accepted damping factor (Newton)',
        'krylov': 'inner solver used (Newton)',
    },
}


def export_csv(frame: pd.DataFrame, path, kind: str, description: Optional[str] = None) -> Path:
    """
    Write `frame` as CSV with a `<name>.schema.json` sidecar.

    Known kinds fix the column order from SCHEMAS; columns outside the
    schema follow in their frame order. Floats are written with 17
    significant digits so the text round-trips.
    """
    path = Path(path)
    schema = SCHEMAS.get(kind, {})
    ordered = [c for c in schema if c in frame.columns] + [c for c in frame.columns if c not in schema]
    frame = frame.loc[:, ordered]
    write_atomic(path, frame.to_csv(index=False, float_format='%.17g', lineterminator='\n').encode('utf-8'))
    sidecar = {
        'kind': kind,
        'description': description or '',
        'rows': int(len(frame)),
        'columns': [{'name': c, 'dtype': str(frame[c].dtype), 'description': schema.get(c, '')} for c in ordered],
    }
    schema_path = path.with_suffix('.schema.json')
    write_atomic(schema_path, json.dumps(sidecar, indent=2, sort_keys=True).encode('utf-8'))
    logger.info("exported %s table (%d rows) to %s", kind, len(frame), path)
    return path


def continuation_table(trace: pd.DataFrame) -> pd.DataFrame:
    """Continuation trace with a stage column in run order."""
    frame = trace.reset_index(drop=True).copy()
    frame.insert(0, 'stage', range(len(frame)))
    return frame


def spectrum_table(frame: pd.DataFrame) -> pd.DataFrame:
    """Spectrum rows sorted by |eigenvalue|, ties by eigenvalue."""
    key = frame['eigenvalue'].abs().round(12) + 0.0
    order = sorted(range(len(frame)), key=lambda i: (key.iloc[i], frame['eigenvalue'].iloc[i]))
    return frame.iloc[order].reset_index(drop=True)
