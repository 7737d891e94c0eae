"""Binary field files with a JSON sidecar.

Layout (little endian): 8-byte magic, uint8 geometry code, 3 pad bytes,
uint32 N, float64 extent, uint32 K, uint32 len(ks), int32 ks[...], then
float64 (Re, Im) pairs for every (k, j) in row-major order.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import FieldFormatError
from .field import Field
from .grid import SpaceGrid

MAGIC = b"BRFIELD1"
_GEOM = {"slab": 0, "cylindrical": 1}
_HEAD = struct.Struct("<8sB3xIdII")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def field_to_bytes(u: Field, K: int | None = None) -> bytes:
    K = u.max_k() if K is None else int(K)
    g = u.grid
    head = _HEAD.pack(MAGIC, _GEOM[g.geometry], g.N, g.extent, K, len(u.ks))
    ks = np.asarray(u.ks, dtype="<i4").tobytes()
    body = np.ascontiguousarray(u.coeffs).astype("<c16").tobytes()
    return head + ks + body


def field_from_bytes(data: bytes) -> tuple[Field, int]:
    if len(data) < _HEAD.size:
        raise FieldFormatError("truncated header")
    magic, gcode, N, extent, K, nk = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise FieldFormatError("bad magic bytes")
    inv = {v: k for k, v in _GEOM.items()}
    if gcode not in inv:
        raise FieldFormatError(f"unknown geometry code {gcode}")
    try:
        grid = SpaceGrid(inv[gcode], N, extent)
    except Exception as exc:
        raise FieldFormatError(f"invalid grid in header: {exc}") from exc
    off = _HEAD.size
    need = off + 4 * nk + 16 * nk * grid.size
    if len(data) != need:
        raise FieldFormatError(f"expected {need} bytes, found {len(data)}")
    ks = tuple(int(k) for k in np.frombuffer(data, "<i4", nk, off))
    off += 4 * nk
    coeffs = np.frombuffer(data, "<c16", nk * grid.size, off).reshape(nk, grid.size)
    try:
        return Field(grid, ks, coeffs.astype(complex)), K
    except Exception as exc:
        raise FieldFormatError(str(exc)) from exc


def save_field(u: Field, path, K: int | None = None, meta: dict | None = None) -> dict:
    """Write the binary file and its sidecar; returns the sidecar dict."""
    path = Path(path)
    data = field_to_bytes(u, K)
    path.write_bytes(data)
    side = {
        "format": "breather-field/1",
        "grid": u.grid.to_dict(),
        "K": u.max_k() if K is None else int(K),
        "modes": list(u.ks),
        "bytes": len(data),
        "sha256": hashlib.sha256(data).hexdigest(),
        "meta": meta or {},
    }
    sidecar_path(path).write_text(json.dumps(side, indent=2))
    return side


def load_field(path) -> tuple[Field, dict]:
    """Read a field file, checking it against the sidecar checksum."""
    path = Path(path)
    try:
        data = path.read_bytes()
        side = json.loads(sidecar_path(path).read_text())
    except FileNotFoundError as exc:
        raise FieldFormatError(f"missing field file or sidecar: {exc.filename}") from exc
    except json.JSONDecodeError as exc:
        raise FieldFormatError(f"unreadable sidecar: {exc}") from exc
    if hashlib.sha256(data).hexdigest() != side.get("sha256"):
        raise FieldFormatError(f"checksum mismatch for {path}")
    u, K = field_from_bytes(data)
    if list(u.ks) != side.get("modes") or u.grid.to_dict() != side.get("grid"):
        raise FieldFormatError("sidecar disagrees with the binary header")
    return u, side
