"""Global tone-mapping operators producing 8-bit SDR references."""

from __future__ import annotations

import numpy as np

from .core import RadianceFrame, SdrFrame, luminance

DISPLAY_GAMMA = 2.2
REINHARD_DELTA = 1e-6


def quantize_8bit(v) -> np.ndarray:
    """Map [0, 1] display values to uint8, rounding half to even."""
    return np.rint(np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def tonemap_clip_gamma(x: RadianceFrame, exposure_ev: float = 0.0) -> SdrFrame:
    scaled = x.pixels.astype(np.float64) * 2.0**exposure_ev
    return SdrFrame(quantize_8bit(np.power(np.clip(scaled, 0.0, 1.0), 1.0 / DISPLAY_GAMMA)))


def tonemap_reinhard(x: RadianceFrame, key: float = 0.18) -> SdrFrame:
    """Photographic global operator: key-scaled by the log-average luminance, then L/(1+L)."""
    px = x.pixels.astype(np.float64)
    y = luminance(px)
    # sequential float64 log-mean keeps the result deterministic
    log_avg = float(np.exp(np.mean(np.log(REINHARD_DELTA + y))))
    lm = key * y / log_avg
    ld = lm / (1.0 + lm)
    ratio = np.divide(ld, y, out=np.zeros_like(y), where=y > 0)
    rgb = np.clip(px * ratio[..., None], 0.0, 1.0)
    return SdrFrame(quantize_8bit(np.power(rgb, 1.0 / DISPLAY_GAMMA)))


TONEMAPPERS = {
    "clip-gamma": lambda x: tonemap_clip_gamma(x, 0.0),
    "reinhard": lambda x: tonemap_reinhard(x, 0.18),
}


def get_tonemapper(name: str):
    try:
        return TONEMAPPERS[name]
    except KeyError:
        raise ValueError(f"unknown tonemapper {name!r}; valid: {', '.join(TONEMAPPERS)}") from None
