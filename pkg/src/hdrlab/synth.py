"""Deterministic synthetic corpora.

Every frame ``i`` of a preset is generated from its own ``numpy`` PCG64
stream seeded with ``[seed, i]``, so corpora are reproducible and frames
can be generated in any order.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .core import Clip, RadianceFrame, SdrFrame
from .tonemap import tonemap_reinhard

MIDDLE_GREY = 0.18
LOG_SIGMA = 1.0
CHROMA_SIGMA = 0.1
RAMP_RANGE = (1e-3, 16.0)
CHECKER_LEVELS = (0.05, 4.0)
CHECKER_SQUARE = 8

PRESETS = ("lognormal", "ramp", "checker", "constant", "prior")


def _frame_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def lognormal_frame(seed: int, index: int, height: int = 64, width: int = 64,
                    median: float = MIDDLE_GREY, sigma: float = LOG_SIGMA) -> RadianceFrame:
    """Spatially smooth log-normal radiance with per-frame unit-variance log field."""
    rng = _frame_rng(seed, index)
    z = ndimage.gaussian_filter(rng.standard_normal((height, width)), max(1.0, min(height, width) / 32))
    z = (z - z.mean()) / z.std()
    chroma = CHROMA_SIGMA * rng.standard_normal(3)
    return RadianceFrame(median * np.exp(sigma * z[..., None] + chroma))


def lognormal_clip(seed: int = 7, frames: int = 130, height: int = 64, width: int = 64) -> Clip:
    return Clip(tuple(lognormal_frame(seed, i, height, width) for i in range(frames)))


def ramp_clip(frames: int = 1, height: int = 64, width: int = 64, lo: float = RAMP_RANGE[0],
              hi: float = RAMP_RANGE[1]) -> Clip:
    """Neutral horizontal ramp, log-uniform from ``lo`` to ``hi``."""
    row = np.geomspace(lo, hi, width)
    px = np.broadcast_to(row[None, :, None], (height, width, 3))
    return Clip(tuple(RadianceFrame(px) for _ in range(frames)))


def checker_clip(frames: int = 1, height: int = 64, width: int = 64, square: int = CHECKER_SQUARE,
                 levels=CHECKER_LEVELS) -> Clip:
    yy, xx = np.mgrid[0:height, 0:width]
    on = ((yy // square + xx // square) % 2).astype(bool)
    px = np.where(on, levels[1], levels[0])[..., None].repeat(3, axis=2)
    return Clip(tuple(RadianceFrame(px) for _ in range(frames)))


def constant_clip(frames: int = 1, height: int = 64, width: int = 64, value: float = MIDDLE_GREY) -> Clip:
    return Clip(tuple(RadianceFrame(np.full((height, width, 3), value)) for _ in range(frames)))


def sdr_prior(seed: int = 8, frames: int = 130, height: int = 64, width: int = 64) -> list[SdrFrame]:
    """Natural-looking SDR stand-in: independent log-normal scenes through the Reinhard operator."""
    return [tonemap_reinhard(lognormal_frame(seed, i, height, width)) for i in range(frames)]


def generate(preset: str, seed: int = 7, frames: int = 130, height: int = 64, width: int = 64):
    """Clip of radiance frames, or a list of SDR frames for the ``prior`` preset."""
    if preset == "lognormal":
        return lognormal_clip(seed, frames, height, width)
    if preset == "ramp":
        return ramp_clip(frames, height, width)
    if preset == "checker":
        return checker_clip(frames, height, width)
    if preset == "constant":
        return constant_clip(frames, height, width)
    if preset == "prior":
        return sdr_prior(seed, frames, height, width)
    raise ValueError(f"unknown preset {preset!r}; valid: {', '.join(PRESETS)}")
