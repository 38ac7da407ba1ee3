"""Frame and clip value types shared across the package.

Pixel buffers are numpy arrays of shape ``(height, width, 3)``. They are
copied on construction and marked read-only, so frames can be shared
between threads freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Generic, Sequence, TypeVar, Union

import numpy as np

# Rec.709 / sRGB primaries
LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])

DEFAULT_NITS_PER_UNIT = 100.0


class FrameError(ValueError):
    """Raised when pixel data violates a frame type's invariants."""


def _frozen(pixels, dtype) -> np.ndarray:
    arr = np.array(pixels, dtype=dtype, copy=True)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise FrameError(f"expected (height, width, 3) pixels, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise FrameError(f"frame dimensions must be positive, got {arr.shape[:2]}")
    arr.setflags(write=False)
    return arr


class _Frame:
    pixels: np.ndarray

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]


@dataclass(frozen=True, eq=False)
class RadianceFrame(_Frame):
    """Scene-linear RGB, 1.0 = diffuse white."""

    pixels: np.ndarray
    nits_per_unit: float = DEFAULT_NITS_PER_UNIT

    def __post_init__(self):
        arr = _frozen(self.pixels, np.float32)
        if not np.all(np.isfinite(arr)):
            raise FrameError("radiance must be finite")
        if np.any(arr < 0):
            raise FrameError("radiance must be non-negative")
        if not self.nits_per_unit > 0:
            raise FrameError("nits_per_unit must be positive")
        object.__setattr__(self, "pixels", arr)


@dataclass(frozen=True, eq=False)
class EncodedFrame(_Frame):
    """Transfer-encoded RGB in [0, 1], tagged with the producing transfer."""

    pixels: np.ndarray
    transfer: str

    def __post_init__(self):
        arr = _frozen(self.pixels, np.float32)
        if not (np.all(arr >= 0) and np.all(arr <= 1)):
            raise FrameError("encoded components must lie in [0, 1]")
        object.__setattr__(self, "pixels", arr)


@dataclass(frozen=True, eq=False)
class ModelFrame(_Frame):
    """Encoded frame rescaled to the model input range [-1, 1]."""

    pixels: np.ndarray
    transfer: str

    def __post_init__(self):
        arr = _frozen(self.pixels, np.float32)
        if not (np.all(arr >= -1) and np.all(arr <= 1)):
            raise FrameError("model-range components must lie in [-1, 1]")
        object.__setattr__(self, "pixels", arr)


@dataclass(frozen=True, eq=False)
class SdrFrame(_Frame):
    """Display-referred, gamma-encoded 8-bit RGB."""

    pixels: np.ndarray

    def __post_init__(self):
        src = np.asarray(self.pixels)
        if src.dtype != np.uint8:
            if np.any((src < 0) | (src > 255)) or np.any(src != np.round(src)):
                raise FrameError("SDR pixels must be integers in [0, 255]")
        object.__setattr__(self, "pixels", _frozen(src, np.uint8))


AnyFrame = Union[RadianceFrame, EncodedFrame, ModelFrame, SdrFrame]
F = TypeVar("F", RadianceFrame, EncodedFrame, ModelFrame, SdrFrame)


@dataclass(frozen=True)
class Clip(Generic[F]):
    """Ordered, homogeneous frame sequence."""

    frames: tuple = field()
    fps: Fraction = Fraction(24)

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise FrameError("a clip needs at least one frame")
        kind, shape = type(frames[0]), frames[0].shape
        for f in frames[1:]:
            if type(f) is not kind:
                raise FrameError("clip frames must share one frame type")
            if f.shape != shape:
                raise FrameError(f"clip frames must share dimensions: {f.shape} != {shape}")
        fps = Fraction(self.fps)
        if fps <= 0:
            raise FrameError("fps must be positive")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "fps", fps)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i):
        return self.frames[i]

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames[0].shape


def as_clip(x: Union[AnyFrame, Clip, Sequence[AnyFrame]]) -> Clip:
    if isinstance(x, Clip):
        return x
    if isinstance(x, _Frame):
        return Clip((x,))
    return Clip(tuple(x))


def luminance(frame: Union[RadianceFrame, np.ndarray]) -> np.ndarray:
    """Per-pixel Rec.709 luminance, in the frame's own linear units (float64)."""
    px = frame.pixels if isinstance(frame, _Frame) else np.asarray(frame)
    return px.astype(np.float64) @ LUMA_WEIGHTS
