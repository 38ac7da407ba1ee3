"""8-bit RGB PNG input/output."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from ..core import SdrFrame
from .errors import FormatError, UnsupportedFeature

_PNG_SIG = b"\x89PNG\r\n\x1a\n"
_COLOR_TYPES = {0: "grayscale", 2: "RGB", 3: "palette", 4: "grayscale+alpha", 6: "RGBA"}


def read_sdr(path) -> SdrFrame:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(33)
    if len(head) < 33 or head[:8] != _PNG_SIG or head[12:16] != b"IHDR":
        raise FormatError(f"{path}: not a PNG file")
    bit_depth, color_type = head[24], head[25]
    if bit_depth != 8:
        raise UnsupportedFeature(f"{path}: unsupported bit depth {bit_depth} (need 8)")
    if color_type != 2:
        kind = _COLOR_TYPES.get(color_type, f"type {color_type}")
        raise UnsupportedFeature(f"{path}: unsupported color type {kind} (need RGB)")
    try:
        with Image.open(path) as im:
            px = np.asarray(im.convert("RGB") if im.mode != "RGB" else im, dtype=np.uint8)
    except (OSError, SyntaxError, struct.error) as exc:
        raise FormatError(f"{path}: corrupt PNG: {exc}") from None
    return SdrFrame(px)


def write_sdr(path, frame: SdrFrame) -> None:
    Image.fromarray(np.ascontiguousarray(frame.pixels), mode="RGB").save(path, format="PNG")
