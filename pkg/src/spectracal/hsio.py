"""HSIC binary cube format.

Layout (all little-endian):

====== ======= ==========================================
offset size    content
====== ======= ==========================================
0      4       magic bytes ``HSIC``
4      2       version, u16, currently 1
6      2       reserved, u16, must be 0
8      4       H, u32
12     4       W, u32
16     4       B, u32
20     8*B     wavelengths in nm, float64
...    4*H*W*B values, float32, C order over (H, W, B)
====== ======= ==========================================

Values are stored in single precision (matching typical camera bit depth)
while in-memory arithmetic stays in double precision.  ``write_cube``
followed by ``read_cube`` therefore rounds values to float32; reading a
file and writing it back reproduces the payload bit for bit.

An optional JSON sidecar ``<stem>.meta.json`` next to the cube carries
free-form provenance and is ignored by ``read_cube``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import HsiCube, WavelengthGrid, WhiteRefImage
from .errors import FormatError, SpectracalError

__all__ = [
    "read_cube",
    "write_cube",
    "read_white",
    "meta_path",
    "read_meta",
    "write_meta",
]

MAGIC = b"HSIC"
VERSION = 1
_HEADER = struct.Struct("<4sHHIII")

# Refuse headers that would allocate absurd amounts of memory before even
# looking at the payload length.
_MAX_VOXELS = 1 << 34
_F32_MAX = float(np.finfo(np.float32).max)


def write_cube(cube: HsiCube, path: str | Path, meta: dict | None = None) -> None:
    """Write a cube to ``path``; optionally write a ``<stem>.meta.json`` sidecar."""
    path = Path(path)
    if float(cube.values.max()) > _F32_MAX:
        raise FormatError("cube values exceed the single-precision payload range")
    h, w, b = cube.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, 0, h, w, b))
        fh.write(cube.grid.lambdas.astype("<f8").tobytes())
        fh.write(cube.values.astype("<f4").tobytes())
    if meta is not None:
        write_meta(path, meta)


def read_cube(path: str | Path) -> HsiCube:
    """Read a cube, validating the header and the exact payload length."""
    path = Path(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, reserved, h, w, b = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic bytes {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if reserved != 0:
        raise FormatError(f"{path}: reserved field must be 0, got {reserved}")
    if min(h, w, b) < 1:
        raise FormatError(f"{path}: dimensions must be positive, got {(h, w, b)}")
    voxels = h * w * b
    if voxels > _MAX_VOXELS:
        raise FormatError(f"{path}: header declares {voxels} voxels, refusing")
    expected = _HEADER.size + 8 * b + 4 * voxels
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload is {len(data)} bytes, header implies {expected}"
        )
    off = _HEADER.size
    lambdas = np.frombuffer(data, dtype="<f8", count=b, offset=off)
    off += 8 * b
    values = np.frombuffer(data, dtype="<f4", count=voxels, offset=off)
    try:
        grid = WavelengthGrid(lambdas.astype(np.float64))
        return HsiCube(values.astype(np.float64).reshape(h, w, b), grid)
    except SpectracalError as exc:
        raise FormatError(f"{path}: invalid cube contents: {exc}") from exc


def read_white(path: str | Path) -> WhiteRefImage:
    """Read a cube and validate it as a white reference."""
    return WhiteRefImage(read_cube(path))


def meta_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_meta(path: str | Path, meta: dict) -> None:
    meta_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def read_meta(path: str | Path) -> dict | None:
    mp = meta_path(path)
    if not mp.exists():
        return None
    return json.loads(mp.read_text())
