"""``.lat`` latent tensor files: ``LAT1`` magic, u32 C/H/W, float32 payload (little-endian)."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..alignment.latent import LatentTensor
from .errors import FormatError

MAGIC = b"LAT1"


def dumps_latent(t: LatentTensor) -> bytes:
    c, h, w = t.values.shape
    return MAGIC + struct.pack("<III", c, h, w) + t.values.astype("<f4").tobytes()


def loads_latent(buf: bytes) -> LatentTensor:
    if len(buf) < 16:
        raise FormatError(f"truncated latent header: {len(buf)} bytes")
    if buf[:4] != MAGIC:
        raise FormatError("bad magic: not a LAT1 latent file")
    c, h, w = struct.unpack_from("<III", buf, 4)
    if 0 in (c, h, w):
        raise FormatError(f"zero latent dimension: {c}x{h}x{w}")
    expected = c * h * w * 4
    actual = len(buf) - 16
    if actual != expected:
        raise FormatError(f"latent payload size mismatch: expected {expected} bytes, got {actual}")
    values = np.frombuffer(buf, dtype="<f4", offset=16).reshape(c, h, w)
    try:
        return LatentTensor(values)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def read_latent(path) -> LatentTensor:
    return loads_latent(Path(path).read_bytes())


def write_latent(path, t: LatentTensor) -> None:
    Path(path).write_bytes(dumps_latent(t))
