"""Binary container for band-limited sphere fields.

Layout (all integers and floats little-endian)::

    offset  size  content
    0       4     magic b"SPHF"
    4       2     format version (uint16, currently 1)
    6       2     reserved, zero (uint16)
    8       4     bandlimit L (uint32)
    12      4     n_theta (uint32)
    16      4     n_phi (uint32)
    20      4     metadata length M in bytes (uint32)
    24      M     metadata, UTF-8 JSON object (keys sorted)
    24+M    8K    K = (L+1)^2 coefficients, float64, flat order k^2 + k + m
    ...     32    SHA-256 digest of every preceding byte

Coefficients are stored bit-exactly, so a write/read round trip reproduces
the field exactly.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .sphere_grid import SphereField, SphereGrid

MAGIC = b"SPHF"
VERSION = 1
_HEADER = struct.Struct("<4sHHIIII")
_DIGEST = 32


class FieldFileError(ValueError):
    """Malformed, truncated or corrupted field file."""


def encode_field(u: SphereField, metadata: dict | None = None) -> bytes:
    g = u.grid
    meta = json.dumps(metadata or {}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = _HEADER.pack(MAGIC, VERSION, 0, g.L, g.n_theta, g.n_phi, len(meta)) + meta
    body += np.ascontiguousarray(u.c, dtype="<f8").tobytes()
    return body + hashlib.sha256(body).digest()


def decode_field(data: bytes) -> tuple[SphereField, dict]:
    if len(data) < _HEADER.size + _DIGEST:
        raise FieldFileError("file too short")
    magic, version, _, L, n_theta, n_phi, mlen = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FieldFileError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FieldFileError(f"unsupported format version {version}")
    n = (L + 1) ** 2
    end = _HEADER.size + mlen + 8 * n
    if len(data) != end + _DIGEST:
        raise FieldFileError(f"size mismatch: expected {end + _DIGEST} bytes, got {len(data)}")
    if hashlib.sha256(data[:end]).digest() != data[end:]:
        raise FieldFileError("checksum mismatch")
    try:
        meta = json.loads(data[_HEADER.size:_HEADER.size + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FieldFileError(f"unreadable metadata: {exc}") from exc
    c = np.frombuffer(data, dtype="<f8", count=n, offset=_HEADER.size + mlen).astype(float)
    return SphereField(SphereGrid(L, n_theta, n_phi), c), meta


def write_field(path, u: SphereField, metadata: dict | None = None) -> Path:
    path = Path(path)
    path.write_bytes(encode_field(u, metadata))
    return path


def read_field(path) -> tuple[SphereField, dict]:
    return decode_field(Path(path).read_bytes())
