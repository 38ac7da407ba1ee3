"""Portable float map (colour ``PF`` variant only)."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from ..core import DEFAULT_NITS_PER_UNIT, RadianceFrame
from .errors import FormatError, UnsupportedFeature

_HEADER = re.compile(rb"^(P[Ff])\s*\n\s*(\d+)\s+(\d+)\s*\n\s*([-+0-9.eE]+)\s*\n")


def read_pfm_pixels(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if buf[:2] == b"Pf":
        raise UnsupportedFeature("unsupported feature: grayscale PFM ('Pf'); only colour 'PF' is supported")
    m = _HEADER.match(buf[:128])
    if not m:
        raise FormatError("malformed PFM header")
    w, h = int(m.group(2)), int(m.group(3))
    try:
        scale = float(m.group(4))
    except ValueError:
        raise FormatError("malformed PFM scale") from None
    if w < 1 or h < 1 or scale == 0 or not np.isfinite(scale):
        raise FormatError(f"invalid PFM dimensions or scale: {w}x{h}, {scale}")
    dtype = "<f4" if scale < 0 else ">f4"
    need = w * h * 3 * 4
    data = buf[m.end():]
    if len(data) < need:
        raise FormatError(f"short PFM data: expected {need} bytes, got {len(data)}")
    px = np.frombuffer(data, dtype=dtype, count=w * h * 3).reshape(h, w, 3)
    return px[::-1].astype(np.float32)


def read_pfm(path, nits_per_unit: float = DEFAULT_NITS_PER_UNIT) -> RadianceFrame:
    px = read_pfm_pixels(path)
    if not np.all(np.isfinite(px)) or np.any(px < 0):
        raise FormatError("PFM holds negative or non-finite radiance")
    return RadianceFrame(px, nits_per_unit=nits_per_unit)


def write_pfm(path, frame) -> None:
    px = np.asarray(getattr(frame, "pixels", frame), dtype=np.float32)
    if px.ndim != 3 or px.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) pixels, got {px.shape}")
    h, w = px.shape[:2]
    header = f"PF\n{w} {h}\n-1.0\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(px[::-1]).astype("<f4").tobytes())
