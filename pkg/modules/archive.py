"""
archive.py - Field Archives
Self-describing binary archives of maps and spinors: the magic b"SDAF", a
little-endian uint32 header length, a JSON header and the raw little-endian
float64/complex128 arrays. Format version "sdaf-1".
"""

import json
import logging
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from errors import ArchiveShapeError, ArchiveVersionError, CorruptArchiveError
from geometry.domain import SurfaceDomain
from geometry.fields import MapField
from geometry.target import TargetManifold

logger = logging.getLogger(__name__)

MAGIC = b"SDAF"
FORMAT_VERSION = "sdaf-1"
DTYPES = {'float64': '<f8', 'complex128': '<c16'}
_LENGTH = struct.Struct('<I')


@dataclass
class FieldArchive:
    """
    Arrays plus metadata (domain, target, config fingerprint, ...).

    Attributes:
        arrays: name -> float64 or complex128 array
        metadata: JSON-serialisable run information
        version: Format version string
    """
    arrays: Dict[str, np.ndarray]
    metadata: Dict[str, object] = field(default_factory=dict)
    version: str = FORMAT_VERSION

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in self.arrays:
            raise KeyError(f"archive has no array '{name}'; available: {sorted(self.arrays)}")
        return self.arrays[name]

    def shape_of(self, name: str) -> Tuple[int, ...]:
        return tuple(self[name].shape)


def _encode_array(name: str, values: np.ndarray) -> Tuple[dict, bytes]:
    arr = np.asarray(values)
    kind = 'complex128' if np.iscomplexobj(arr) else 'float64'
    data = np.ascontiguousarray(arr, dtype=DTYPES[kind]).tobytes()
    return {'name': name, 'dtype': kind, 'shape': list(arr.shape), 'nbytes': len(data)}, data


def encode_archive(archive: FieldArchive) -> bytes:
    entries, chunks = [], []
    for name in sorted(archive.arrays):
        entry, data = _encode_array(name, archive.arrays[name])
        entries.append(entry)
        chunks.append(data)
    header = json.dumps({'format': archive.version, 'arrays': entries, 'metadata': archive.metadata},
                        sort_keys=True, separators=(',', ':')).encode('utf-8')
    return MAGIC + _LENGTH.pack(len(header)) + header + b''.join(chunks)


def decode_archive(blob: bytes, source: str = "<bytes>") -> FieldArchive:
    """
    Raises:
        CorruptArchiveError: bad magic, truncated data or unreadable header
        ArchiveVersionError: archive written in another format version
    """
    prefix = len(MAGIC) + _LENGTH.size
    if len(blob) < prefix or blob[:len(MAGIC)] != MAGIC:
        raise CorruptArchiveError(f"{source}: not a field archive (bad magic or truncated prefix)")
    (length,) = _LENGTH.unpack(blob[len(MAGIC):prefix])
    if len(blob) < prefix + length:
        raise CorruptArchiveError(f"{source}: header truncated ({len(blob) - prefix} of {length} bytes)")
    try:
        header = json.loads(blob[prefix:prefix + length].decode('utf-8'))
        version = header['format']
        entries = header['arrays']
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CorruptArchiveError(f"{source}: unreadable header: {exc}") from exc
    if version != FORMAT_VERSION:
        raise ArchiveVersionError(f"{source}: archive format '{version}' is not supported; "
                                  f"re-export it with a release that writes '{FORMAT_VERSION}'")
    arrays = {}
    offset = prefix + length
    for entry in entries:
        try:
            dtype = DTYPES[entry['dtype']]
            shape = tuple(int(s) for s in entry['shape'])
            nbytes = int(entry['nbytes'])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptArchiveError(f"{source}: bad array entry {entry!r}") from exc
        expected = int(np.prod(shape)) * np.dtype(dtype).itemsize
        if nbytes != expected:
            raise CorruptArchiveError(f"{source}: array '{entry['name']}' declares {nbytes} bytes for shape {shape}")
        if offset + nbytes > len(blob):
            raise CorruptArchiveError(f"{source}: array '{entry['name']}' truncated")
        arrays[entry['name']] = np.frombuffer(blob, dtype=dtype, count=int(np.prod(shape)),
                                              offset=offset).reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise CorruptArchiveError(f"{source}: {len(blob) - offset} trailing bytes after the last array")
    return FieldArchive(arrays=arrays, metadata=header.get('metadata', {}), version=version)


def write_atomic(path, data: bytes) -> Path:
    """Write bytes to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, 'wb') as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def save_archive(path, archive: FieldArchive) -> Path:
    out = write_atomic(path, encode_archive(archive))
    logger.info("saved archive %s (%s)", out, ', '.join(f"{k}{list(v.shape)}" for k, v in archive.arrays.items()))
    return out


def load_archive(path) -> FieldArchive:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise CorruptArchiveError(f"cannot read archive {path}: {exc}") from exc
    return decode_archive(blob, str(path))


def state_archive(phi: MapField, psi: Optional[np.ndarray] = None, metadata: Optional[dict] = None,
                  **extra: np.ndarray) -> FieldArchive:
    """Archive holding a map, optionally its spinor, and auxiliary arrays."""
    arrays = {'phi': phi.values}
    if psi is not None:
        arrays['psi'] = np.asarray(psi, dtype=complex)
    arrays.update(extra)
    meta = {
        'domain': phi.domain.describe(),
        'target': phi.target.describe(),
        'winding': phi.winding.tolist() if phi.winding is not None else None,
    }
    meta.update(metadata or {})
    return FieldArchive(arrays=arrays, metadata=meta)


def map_from_archive(archive: FieldArchive, domain: SurfaceDomain, target: TargetManifold) -> MapField:
    """
    Rebuild the archived map on a run's grid.

    Raises:
        ArchiveShapeError: when the archived grid differs from the run grid
    """
    expected = domain.grid_shape + (target.ambient_dim,)
    found = archive.shape_of('phi')
    if found != expected:
        raise ArchiveShapeError(f"archive map has shape {found} but the run expects {expected} "
                                f"(n = {domain.n}, target {target.name})")
    winding = archive.metadata.get('winding')
    return MapField(archive['phi'], target, domain, winding=winding if target.is_flat else None)


def spinor_from_archive(archive: FieldArchive, phi: MapField) -> Optional[np.ndarray]:
    if 'psi' not in archive.arrays:
        return None
    expected = phi.domain.grid_shape + (2, phi.dim)
    found = archive.shape_of('psi')
    if found != expected:
        raise ArchiveShapeError(f"archive spinor has shape {found} but the run expects {expected}")
    return archive['psi']
