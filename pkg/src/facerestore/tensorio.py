"""Portable binary tensor container used for network weights and projectors.

Layout (all integers little-endian u32, payloads little-endian f32):

    magic "FSGN" | version | tensor_count
    per tensor: name_len | name (UTF-8) | ndim | dims[ndim] | payload

Tensors keep their insertion order, so a save/load round-trip reproduces
the file byte for byte.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "MAGIC",
    "VERSION",
    "TensorFileError",
    "BadMagicError",
    "VersionError",
    "TruncatedFileError",
    "read_tensors",
    "write_tensors",
]

MAGIC = b"FSGN"
VERSION = 1


class TensorFileError(DataError):
    """Base class for tensor-container format errors."""


class BadMagicError(TensorFileError):
    pass


class VersionError(TensorFileError):
    pass


class TruncatedFileError(TensorFileError):
    pass


class _Reader:
    def __init__(self, blob: bytes, path: str):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise TruncatedFileError(f"{self.path}: truncated at byte {self.pos} (need {n} more)")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def read_tensors(path) -> dict[str, np.ndarray]:
    """Load all tensors as float32 arrays, keyed by name, in file order."""
    path = Path(path)
    r = _Reader(path.read_bytes(), str(path))
    magic = r.take(4)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    version = r.u32()
    if version != VERSION:
        raise VersionError(f"{path}: unsupported version {version}, expected {VERSION}")
    count = r.u32()
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name_len = r.u32()
        name = r.take(name_len).decode("utf-8")
        ndim = r.u32()
        dims = tuple(r.u32() for _ in range(ndim))
        n = int(np.prod(dims, dtype=np.int64)) if dims else 1
        payload = r.take(4 * n)
        if name in tensors:
            raise TensorFileError(f"{path}: duplicate tensor name {name!r}")
        tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)
    if r.pos != len(r.blob):
        raise TensorFileError(f"{path}: {len(r.blob) - r.pos} trailing bytes after last tensor")
    return tensors


def write_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    """Write tensors in their dict order as float32."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors.items():
        encoded = name.encode("utf-8")
        a = np.ascontiguousarray(arr, dtype="<f4")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", a.ndim))
        parts.append(struct.pack(f"<{a.ndim}I", *a.shape))
        parts.append(a.tobytes())
    Path(path).write_bytes(b"".join(parts))
