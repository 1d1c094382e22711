"""
caching.py - Caching functions for performance optimization
Memoises Fourier symbol grids that every spectral operation reuses, and
builds the fingerprints used to tie spectral data and archives to inputs.
"""

import hashlib
import json
from functools import lru_cache
from typing import Any, Tuple

import numpy as np


@lru_cache(maxsize=64)
def cached_frequencies(n: int, spin_structure: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Admissible lattice frequencies per axis in FFT order (half-integers on antiperiodic axes)."""
    base = np.fft.fftfreq(n) * n
    shifts = [0.0 if s > 0 else 0.5 for s in spin_structure]
    fx = base + shifts[0]
    fy = base + shifts[1]
    fx.setflags(write=False)
    fy.setflags(write=False)
    return fx, fy


@lru_cache(maxsize=64)
def cached_symbol_components(n: int, side_length: float,
                             spin_structure: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Sine symbol s_beta = sin(2 pi theta_beta / n) / h on the (n, n) frequency grid."""
    h = side_length / n
    fx, fy = cached_frequencies(n, spin_structure)
    sx = np.sin(2.0 * np.pi * fx / n) / h
    sy = np.sin(2.0 * np.pi * fy / n) / h
    SX, SY = np.meshgrid(sx, sy, indexing='ij')
    SX.setflags(write=False)
    SY.setflags(write=False)
    return SX, SY


@lru_cache(maxsize=64)
def cached_abs_symbol(n: int, side_length: float, spin_structure: Tuple[int, int]) -> np.ndarray:
    """|s| on the frequency grid; eigenvalue of |D| per Fourier mode."""
    SX, SY = cached_symbol_components(n, side_length, spin_structure)
    out = np.sqrt(SX ** 2 + SY ** 2)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def cached_twist(n: int, spin_structure: Tuple[int, int]) -> np.ndarray:
    """Phase e^{i pi (s_x i + s_y j)/n} turning antiperiodic data periodic."""
    idx = np.arange(n)
    px = np.exp(1j * np.pi * idx / n) if spin_structure[0] < 0 else np.ones(n, dtype=complex)
    py = np.exp(1j * np.pi * idx / n) if spin_structure[1] < 0 else np.ones(n, dtype=complex)
    out = np.outer(px, py)
    out.setflags(write=False)
    return out


def field_fingerprint(values: np.ndarray) -> str:
    """Hash of raw array bytes, shape and dtype."""
    arr = np.ascontiguousarray(values)
    digest = hashlib.sha256()
    digest.update(str(arr.shape).encode())
    digest.update(str(arr.dtype).encode())
    digest.update(arr.tobytes())
    return digest.hexdigest()[:16]


def config_fingerprint(config: Any) -> str:
    """Hash of a JSON-serialisable configuration (keys sorted)."""
    payload = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(payload).hexdigest()[:16]
