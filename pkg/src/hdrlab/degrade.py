"""Camera-mimicking degradations for (SDR reference, HDR target) training pairs.

Per-clip random draws come from a counter-based generator: draw ``k`` for
clip ``i`` under seed ``s`` is the first 8 bytes (little-endian u64) of
``BLAKE2b(digest_size=8, data=pack("<QQQ", s, i, k))``, top 53 bits scaled
to [0, 1). Draw indices: 0 exposure, 1 codec quality, 2 contrast gain,
3 blur sigma. Nothing depends on call order or thread scheduling.
"""

from __future__ import annotations

import hashlib
import shlex
import struct
import subprocess
import tempfile
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.fft import dctn, idctn

from ._parallel import ordered_map
from .core import LUMA_WEIGHTS, Clip, RadianceFrame, SdrFrame
from .tonemap import get_tonemapper
from .transfer import TransferFn, encode, to_model_range


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DegradeConfig:
    seed: int = 0
    codec_quality: tuple = (30, 90)
    contrast_gain: tuple = (1.0, 1.5)
    blur_sigma: tuple = (1.0, 3.0)
    hi_thresh: float = 0.85
    lo_thresh: float = 0.15
    edge_width: float = 0.05
    ev_range: tuple = (-2.0, 2.0)
    tonemapper: str = "clip-gamma"
    external_codec_cmd: str = ""

    def __post_init__(self):
        for name in ("codec_quality", "contrast_gain", "blur_sigma", "ev_range"):
            rng = tuple(getattr(self, name))
            if len(rng) != 2 or not all(np.isfinite(rng)):
                raise ConfigError(f"{name} must be a pair of finite numbers")
            if rng[0] > rng[1]:
                raise ConfigError(f"{name} range is inverted: {rng[0]} > {rng[1]}")
            object.__setattr__(self, name, rng)
        q_lo, q_hi = self.codec_quality
        if q_lo != int(q_lo) or q_hi != int(q_hi) or not (1 <= q_lo and q_hi <= 100):
            raise ConfigError("codec_quality must be integers within 1..100")
        object.__setattr__(self, "codec_quality", (int(q_lo), int(q_hi)))
        if self.contrast_gain[0] < 1:
            raise ConfigError("contrast_gain must be >= 1")
        if self.blur_sigma[0] < 0:
            raise ConfigError("blur_sigma must be >= 0")
        for name in ("hi_thresh", "lo_thresh"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.edge_width < 0:
            raise ConfigError("edge_width must be >= 0")
        if not self.lo_thresh + self.edge_width < self.hi_thresh - self.edge_width:
            raise ConfigError("need lo_thresh + edge_width < hi_thresh - edge_width")
        try:
            get_tonemapper(self.tonemapper)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")

    @classmethod
    def parse(cls, text: str, **overrides) -> "DegradeConfig":
        """Read ``key = value`` lines; ``#`` starts a comment, ranges are ``lo, hi``."""
        kinds = {f.name: f.type for f in fields(cls)}
        values: dict = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in kinds:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                if kinds[key] == "tuple":
                    parts = [p.strip() for p in val.split(",")]
                    if len(parts) != 2:
                        raise ValueError("expected 'lo, hi'")
                    values[key] = tuple(float(p) for p in parts)
                elif kinds[key] == "int":
                    values[key] = int(val, 0)
                elif kinds[key] == "float":
                    values[key] = float(val)
                else:
                    values[key] = val
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def load(cls, path, **overrides) -> "DegradeConfig":
        return cls.parse(Path(path).read_text(encoding="utf-8"), **overrides)


def counter_uniform(seed: int, clip_index: int, draw_index: int) -> float:
    digest = hashlib.blake2b(struct.pack("<QQQ", seed, clip_index, draw_index), digest_size=8).digest()
    return (int.from_bytes(digest, "little") >> 11) * 2.0**-53


@dataclass(frozen=True)
class ClipDraws:
    ev: float
    quality: int
    gain: float
    sigma: float


def draw_params(cfg: DegradeConfig, clip_index: int) -> ClipDraws:
    u = [counter_uniform(cfg.seed, clip_index, k) for k in range(4)]

    def span(rng, x):
        return rng[0] + x * (rng[1] - rng[0])

    q_lo, q_hi = cfg.codec_quality
    return ClipDraws(
        ev=span(cfg.ev_range, u[0]),
        quality=min(q_hi, q_lo + int(u[1] * (q_hi - q_lo + 1))),
        gain=span(cfg.contrast_gain, u[2]),
        sigma=span(cfg.blur_sigma, u[3]),
    )


# ITU-T T.81 Annex K tables
JPEG_LUMA_TABLE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)

JPEG_CHROMA_TABLE = np.full((8, 8), 99.0)
JPEG_CHROMA_TABLE[:4, :4] = [
    [17, 18, 24, 47],
    [18, 21, 26, 66],
    [24, 26, 56, 99],
    [47, 66, 99, 99],
]


def quant_table(base: np.ndarray, quality: int) -> np.ndarray:
    if not 1 <= quality <= 100:
        raise ValueError("quality must lie in 1..100")
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    table = np.maximum(1.0, np.floor(base * scale / 100.0 + 0.5))
    # DC keeps unit precision so flat regions survive at any quality
    table[0, 0] = 1.0
    return table


def _rgb_to_ycc(rgb):
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return np.stack([y, cb, cr], axis=-1)


def _ycc_to_rgb(ycc):
    y, cb, cr = ycc[..., 0], ycc[..., 1] - 128.0, ycc[..., 2] - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.stack([r, g, b], axis=-1)


def _block_quantize(plane: np.ndarray, table: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    padded = np.pad(plane, ((0, -h % 8), (0, -w % 8)), mode="edge") - 128.0
    bh, bw = padded.shape[0] // 8, padded.shape[1] // 8
    blocks = padded.reshape(bh, 8, bw, 8).transpose(0, 2, 1, 3)
    coef = dctn(blocks, type=2, axes=(2, 3), norm="ortho")
    coef = np.round(coef / table) * table
    out = idctn(coef, type=2, axes=(2, 3), norm="ortho")
    return (out.transpose(0, 2, 1, 3).reshape(bh * 8, bw * 8) + 128.0)[:h, :w]


def degrade_codec(s: SdrFrame, quality: int) -> SdrFrame:
    """Intra-frame block-DCT compression artifacts (JPEG-style)."""
    ycc = _rgb_to_ycc(s.pixels.astype(np.float64))
    tables = (quant_table(JPEG_LUMA_TABLE, quality), quant_table(JPEG_CHROMA_TABLE, quality),
              quant_table(JPEG_CHROMA_TABLE, quality))
    planes = [_block_quantize(ycc[..., c], tables[c]) for c in range(3)]
    rgb = _ycc_to_rgb(np.stack(planes, axis=-1))
    return SdrFrame(np.rint(np.clip(rgb, 0.0, 255.0)).astype(np.uint8))


def external_codec(s: SdrFrame, quality: int, command: str) -> SdrFrame:
    """Run a user-supplied encoder; ``{input}``, ``{output}`` and ``{quality}`` are substituted."""
    from .io.sdr import read_sdr, write_sdr

    with tempfile.TemporaryDirectory(prefix="hdrlab-codec-") as tmp:
        src, dst = Path(tmp) / "in.png", Path(tmp) / "out.png"
        write_sdr(src, s)
        argv = [part.format(input=src, output=dst, quality=quality) for part in shlex.split(command)]
        proc = subprocess.run(argv, capture_output=True, text=True)
        if proc.returncode != 0:
            raise RuntimeError(f"external codec failed ({proc.returncode}): {proc.stderr.strip()}")
        out = read_sdr(dst)
    if out.shape != s.shape:
        raise RuntimeError(f"external codec changed frame size {s.shape} -> {out.shape}")
    return out


def degrade_contrast(s: SdrFrame, gain: float) -> SdrFrame:
    if gain < 1:
        raise ValueError("contrast gain must be >= 1")
    v = s.pixels.astype(np.float64) / 255.0
    out = np.clip(0.5 + gain * (v - 0.5), 0.0, 1.0) * 255.0
    return SdrFrame(np.rint(out).astype(np.uint8))


def smoothstep(edge0: float, edge1: float, x) -> np.ndarray:
    if edge0 == edge1:
        return (np.asarray(x) >= edge0).astype(np.float64)
    t = np.clip((np.asarray(x, dtype=np.float64) - edge0) / (edge1 - edge0), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def extremes_mask(luma, hi_thresh=0.85, lo_thresh=0.15, edge_width=0.05) -> np.ndarray:
    """1 in highlights and shadows, 0 in midtones, smooth in between."""
    m = smoothstep(hi_thresh - edge_width, hi_thresh + edge_width, luma)
    m = m + smoothstep(lo_thresh + edge_width, lo_thresh - edge_width, luma)
    return np.clip(m, 0.0, 1.0)


def degrade_selective_blur(s: SdrFrame, sigma: float, hi_thresh: float = 0.85, lo_thresh: float = 0.15,
                           edge_width: float = 0.05) -> SdrFrame:
    """Blend a Gaussian-blurred copy into highlight and shadow regions only."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return s
    v = s.pixels.astype(np.float64)
    luma = (v / 255.0) @ LUMA_WEIGHTS
    m = extremes_mask(luma, hi_thresh, lo_thresh, edge_width)[..., None]
    blurred = np.stack([ndimage.gaussian_filter(v[..., c], sigma, mode="nearest", truncate=3.0)
                        for c in range(3)], axis=-1)
    out = (1.0 - m) * v + m * blurred
    return SdrFrame(np.rint(np.clip(out, 0.0, 255.0)).astype(np.uint8))


def exposure_shift(hdr: RadianceFrame, ev: float) -> RadianceFrame:
    if ev == 0:
        return hdr
    return RadianceFrame(hdr.pixels.astype(np.float64) * 2.0**ev, nits_per_unit=hdr.nits_per_unit)


def exposure_shift_pair(hdr: RadianceFrame, ev: float, tonemapper="clip-gamma"):
    """Shift exposure on the HDR side and re-render the SDR from the shifted HDR."""
    tm = get_tonemapper(tonemapper) if isinstance(tonemapper, str) else tonemapper
    shifted = exposure_shift(hdr, ev)
    return shifted, tm(shifted)


@dataclass(frozen=True)
class TrainingPair:
    clip_index: int
    draws: ClipDraws
    sdr: Clip
    target: Clip
    clean_sdr: Clip = field(repr=False)


def degrade_sdr(s: SdrFrame, draws: ClipDraws, cfg: DegradeConfig) -> SdrFrame:
    if cfg.external_codec_cmd:
        s = external_codec(s, draws.quality, cfg.external_codec_cmd)
    else:
        s = degrade_codec(s, draws.quality)
    s = degrade_contrast(s, draws.gain)
    return degrade_selective_blur(s, draws.sigma, cfg.hi_thresh, cfg.lo_thresh, cfg.edge_width)


def make_training_pair(clip: Clip, cfg: DegradeConfig, clip_index: int, threads=None) -> TrainingPair:
    """Exposure shift, tone map, then codec -> contrast -> selective blur on the SDR side.

    The target stream is the shifted HDR encoded with LogC3 in model range.
    """
    if len(clip) == 0:
        raise ValueError("empty clip")
    draws = draw_params(cfg, clip_index)
    tm = get_tonemapper(cfg.tonemapper)

    def one(frame):
        shifted, clean = exposure_shift_pair(frame, draws.ev, tm)
        target = to_model_range(encode(TransferFn.LOGC3, shifted))
        return degrade_sdr(clean, draws, cfg), target, clean

    out = ordered_map(one, clip.frames, threads)
    return TrainingPair(
        clip_index=clip_index,
        draws=draws,
        sdr=Clip(tuple(o[0] for o in out), fps=clip.fps),
        target=Clip(tuple(o[1] for o in out), fps=clip.fps),
        clean_sdr=Clip(tuple(o[2] for o in out), fps=clip.fps),
    )


def degenerate(cfg: DegradeConfig) -> DegradeConfig:
    """The same config with every augmentation pinned to its near-identity setting."""
    return replace(cfg, codec_quality=(100, 100), contrast_gain=(1.0, 1.0), blur_sigma=(0.0, 0.0),
                   ev_range=(0.0, 0.0))
