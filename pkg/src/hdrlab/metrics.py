"""HDR fidelity, temporal stability and physical-accuracy metrics.

Fidelity metrics work on PU21-encoded absolute luminance (banding + glare
fit). Each RGB channel is treated as a luminance plane unless ``luma_only``
is requested. Per-frame partial results are reduced in frame order in
float64, so threaded evaluation matches serial evaluation bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._parallel import ordered_map
from .core import DEFAULT_NITS_PER_UNIT, as_clip, luminance

PSNR_CAP_DB = 100.0
PU21_Y_MIN = 0.005
PU21_Y_MAX = 10000.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class Pu21Curve:
    """Rational PU21 fit ``V = p7*(((p1 + p2*Y^p4) / (1 + p3*Y^p4))^p5 - p6)``."""

    name: str
    p: tuple

    def encode(self, y) -> np.ndarray:
        p1, p2, p3, p4, p5, p6, p7 = self.p
        y = np.clip(np.asarray(y, dtype=np.float64), PU21_Y_MIN, PU21_Y_MAX)
        yp = np.power(y, p4)
        return p7 * (np.power((p1 + p2 * yp) / (1.0 + p3 * yp), p5) - p6)

    def decode(self, v) -> np.ndarray:
        p1, p2, p3, p4, p5, p6, p7 = self.p
        r = np.power(np.asarray(v, dtype=np.float64) / p7 + p6, 1.0 / p5)
        return np.power(np.maximum((r - p1) / (p2 - p3 * r), 0.0), 1.0 / p4)

    @property
    def v_max(self) -> float:
        return float(self.encode(PU21_Y_MAX))


PU21_BANDING_GLARE = Pu21Curve(
    "banding_glare",
    (0.353487901, 0.3734658629, 8.277049286e-05, 0.9062562627, 0.09150303166, 0.9099517204, 596.3148142),
)
PU21_VMAX = PU21_BANDING_GLARE.v_max


def pu21_encode(y, curve: Pu21Curve = PU21_BANDING_GLARE) -> np.ndarray:
    return curve.encode(y)


def psnr_from_mse(mse: float, peak: float = 1.0) -> float:
    if mse <= 0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(peak * peak / mse))


def frame_arrays(x) -> list[np.ndarray]:
    """Pixel arrays of a frame, clip, frame sequence or ``(n, h, w, 3)`` stack.

    Raw arrays keep their precision, so float64 data is never rounded to
    float32 on the way in.
    """
    if isinstance(x, np.ndarray):
        if x.ndim == 3:
            return [x]
        if x.ndim == 4:
            return list(x)
        raise ValueError(f"expected a (h, w, 3) or (n, h, w, 3) array, got {x.shape}")
    return [f.pixels for f in as_clip(x)]


def _pu_planes(px, nits_per_unit, luma_only, curve):
    px = np.asarray(px, dtype=np.float64)
    planes = luminance(px)[..., None] if luma_only else px
    return curve.encode(planes * nits_per_unit) / curve.v_max


def _pair(ref, test):
    a, b = frame_arrays(ref), frame_arrays(test)
    if len(a) != len(b):
        raise ValueError(f"frame count mismatch: {len(a)} vs {len(b)}")
    if a[0].shape != b[0].shape:
        raise ValueError(f"dimension mismatch: {a[0].shape[:2]} vs {b[0].shape[:2]}")
    return list(zip(a, b))


def pu21_mse(ref, test, nits_per_unit=DEFAULT_NITS_PER_UNIT, luma_only=False,
             curve=PU21_BANDING_GLARE, threads=None) -> float:
    def sq_err(pair):
        a, b = pair
        d = _pu_planes(a, nits_per_unit, luma_only, curve) - _pu_planes(b, nits_per_unit, luma_only, curve)
        return float(np.sum(d * d)), d.size

    parts = ordered_map(sq_err, _pair(ref, test), threads)
    total = np.sum(np.array([s for s, _ in parts], dtype=np.float64))
    return float(total) / sum(n for _, n in parts)


def pu21_psnr(ref, test, nits_per_unit=DEFAULT_NITS_PER_UNIT, luma_only=False,
              curve=PU21_BANDING_GLARE, threads=None) -> float:
    """PSNR of PU21-encoded luminance normalised to the curve peak, capped at 100 dB."""
    return psnr_from_mse(pu21_mse(ref, test, nits_per_unit, luma_only, curve, threads))


def _gaussian_window() -> np.ndarray:
    x = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    w = np.exp(-(x * x) / (2 * SSIM_SIGMA**2))
    return w / w.sum()


_WINDOW = _gaussian_window()


def _filter_valid(img: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(img, _WINDOW, axis=0, mode="reflect")
    out = ndimage.correlate1d(out, _WINDOW, axis=1, mode="reflect")
    r = SSIM_WINDOW // 2
    return out[r:-r, r:-r]


def ssim_map(a: np.ndarray, b: np.ndarray, data_range: float) -> np.ndarray:
    """SSIM index map over the fully-covered region of two 2-D planes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"frame {a.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mu_a, mu_b = _filter_valid(a), _filter_valid(b)
    va = _filter_valid(a * a) - mu_a * mu_a
    vb = _filter_valid(b * b) - mu_b * mu_b
    cov = _filter_valid(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2)
    return num / den


def _frame_ssim(a: np.ndarray, b: np.ndarray, data_range: float) -> tuple[float, int]:
    total, count = 0.0, 0
    for c in range(a.shape[2]):
        m = ssim_map(a[..., c], b[..., c], data_range)
        total += float(np.sum(m))
        count += m.size
    return total, count


def _mean_ssim(pairs, data_range, threads) -> float:
    parts = ordered_map(lambda ab: _frame_ssim(ab[0], ab[1], data_range), pairs, threads)
    return float(np.sum(np.array([s for s, _ in parts]))) / sum(n for _, n in parts)


def ssim(a, b, threads=None) -> float:
    """Mean SSIM of two transfer-encoded frames (or clips of them), dynamic range 1."""
    return _mean_ssim(_pair(a, b), 1.0, threads)


def pu21_ssim(ref, test, nits_per_unit=DEFAULT_NITS_PER_UNIT, luma_only=False,
              curve=PU21_BANDING_GLARE, threads=None) -> float:
    pairs = [
        (_pu_planes(x, nits_per_unit, luma_only, curve), _pu_planes(y, nits_per_unit, luma_only, curve))
        for x, y in _pair(ref, test)
    ]
    # planes are already divided by V_max
    return _mean_ssim(pairs, 1.0, threads)


def frame_mean_luminance(clip, threads=None) -> np.ndarray:
    return np.array(ordered_map(lambda f: float(np.mean(luminance(f))), frame_arrays(clip), threads))


def flicker_index(clip, threads=None) -> float:
    """Population std of per-frame mean luminance over its mean."""
    if len(frame_arrays(clip)) < 2:
        raise ValueError("flicker needs at least 2 frames")
    means = frame_mean_luminance(clip, threads)
    mu = float(np.mean(means))
    sd = float(np.std(means))
    if mu == 0:
        if sd == 0:
            return 0.0
        raise ValueError("undefined flicker: zero mean luminance")
    return sd / mu


def f2f_psnr(clip, nits_per_unit=DEFAULT_NITS_PER_UNIT, luma_only=False,
             curve=PU21_BANDING_GLARE, threads=None) -> float:
    """Mean PU21 PSNR between consecutive frames."""
    frames = frame_arrays(clip)
    if len(frames) < 2:
        raise ValueError("F2F-PSNR needs at least 2 frames")
    pairs = list(zip(frames[:-1], frames[1:]))
    vals = ordered_map(lambda ab: pu21_psnr(ab[0], ab[1], nits_per_unit, luma_only, curve, threads=1),
                       pairs, threads)
    return float(np.mean(np.array(vals)))


def peak_luminance(clip, nits_per_unit=DEFAULT_NITS_PER_UNIT) -> float:
    return max(float(np.max(luminance(f))) for f in frame_arrays(clip)) * nits_per_unit


DR_LOW_PERCENTILE = 0.1
DR_HIGH_PERCENTILE = 99.9
DR_FLOOR = 1e-6


def dynamic_range_stops(clip) -> float:
    """log2 of the 99.9th over the 0.1th luminance percentile, pooled over the clip."""
    pooled = np.concatenate([luminance(f).ravel() for f in frame_arrays(clip)])
    lo, hi = np.percentile(pooled, [DR_LOW_PERCENTILE, DR_HIGH_PERCENTILE])
    if hi <= 0:
        return 0.0
    return math.log2(hi / max(lo, DR_FLOOR))
