"""Pixel/latent distribution alignment and codec roundtrip analysis."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .._parallel import ordered_map
from ..core import Clip, EncodedFrame, ModelFrame, RadianceFrame, SdrFrame
from ..metrics import SSIM_WINDOW, pu21_psnr, pu21_ssim, ssim
from ..transfer import (TransferFn, decode, decode_values, encode, encode_values,
                        from_model_range, to_model_range)
from .codecs import LatentCodec
from .histogram import DEFAULT_BINS, Histogram, build_histogram, kl_divergence

LATENT_RANGE_SIGMAS = 6.0
REL_ERROR_FLOOR = 1e-6


def _flatten(corpus) -> list:
    frames = []
    for item in corpus:
        if isinstance(item, Clip):
            frames.extend(item.frames)
        else:
            frames.append(item)
    if not frames:
        raise ValueError("empty corpus")
    return frames


def _merge(hists: Sequence[Histogram]) -> Histogram:
    total = hists[0]
    for h in hists[1:]:
        total = total + h
    return total


def _accumulate(values_of, frames, n_bins, lo, hi, threads) -> Histogram:
    hists = ordered_map(lambda f: build_histogram(values_of(f), n_bins, lo, hi), frames, threads)
    return _merge(hists)


def sdr_values(frame: SdrFrame) -> np.ndarray:
    return frame.pixels.astype(np.float64) / 255.0


def prior_encoded(frame: SdrFrame) -> EncodedFrame:
    """The prior's native path: linearise with the inverse gamma, re-encode with the gamma curve."""
    lin = decode_values(TransferFn.SRGB_GAMMA, sdr_values(frame))
    t = encode_values(TransferFn.SRGB_GAMMA, lin)
    return EncodedFrame(t.astype(np.float32), transfer=TransferFn.SRGB_GAMMA.value)


def pixel_distributions(fn, hdr_corpus, sdr_prior, n_bins: int = DEFAULT_BINS,
                        threads=None) -> tuple[Histogram, Histogram]:
    fn = TransferFn.parse(fn)
    hdr, prior = _flatten(hdr_corpus), _flatten(sdr_prior)
    p = _accumulate(lambda f: encode(fn, f).pixels, hdr, n_bins, 0.0, 1.0, threads)
    q = _accumulate(sdr_values, prior, n_bins, 0.0, 1.0, threads)
    return p, q


def pixel_kl(fn, hdr_corpus, sdr_prior, n_bins: int = DEFAULT_BINS, threads=None) -> float:
    """KL between transfer-encoded HDR components and SDR prior components, in nats."""
    return kl_divergence(*pixel_distributions(fn, hdr_corpus, sdr_prior, n_bins, threads))


def _exact_moments(chunks: Sequence[np.ndarray]) -> tuple[float, float]:
    n = sum(c.size for c in chunks)
    mean = math.fsum(math.fsum(c.ravel().tolist()) for c in chunks) / n
    var = math.fsum(float(np.sum((c.astype(np.float64) - mean) ** 2)) for c in chunks) / n
    return mean, math.sqrt(var)


def latent_distributions(codec: LatentCodec, fn, hdr_corpus, sdr_prior, n_bins: int = DEFAULT_BINS,
                         threads=None) -> tuple[Histogram, Histogram]:
    fn = TransferFn.parse(fn)
    hdr, prior = _flatten(hdr_corpus), _flatten(sdr_prior)
    q_lat = ordered_map(lambda f: codec.encode(to_model_range(prior_encoded(f))).values, prior, threads)
    p_lat = ordered_map(lambda f: codec.encode(to_model_range(encode(fn, f))).values, hdr, threads)
    mu, sd = _exact_moments(q_lat)
    if sd == 0:
        raise ValueError("SDR prior latents have zero spread; latent bin range is undefined")
    lo, hi = mu - LATENT_RANGE_SIGMAS * sd, mu + LATENT_RANGE_SIGMAS * sd
    p = _merge([build_histogram(v, n_bins, lo, hi) for v in p_lat])
    q = _merge([build_histogram(v, n_bins, lo, hi) for v in q_lat])
    return p, q


def latent_kl(codec: LatentCodec, fn, hdr_corpus, sdr_prior, n_bins: int = DEFAULT_BINS,
              threads=None) -> float:
    """KL between codec latents of encoded HDR and of the SDR prior, over mu +/- 6 sigma of the prior."""
    return kl_divergence(*latent_distributions(codec, fn, hdr_corpus, sdr_prior, n_bins, threads))


@dataclass(frozen=True)
class ErrorStats:
    pu21_psnr: float
    ssim: Optional[float]
    pu21_ssim: Optional[float]
    mean_rel_error: float
    max_rel_error: float

    def as_dict(self) -> dict:
        return asdict(self)


def codec_roundtrip(codec: LatentCodec, fn, x: RadianceFrame) -> tuple[EncodedFrame, EncodedFrame, RadianceFrame]:
    """Return (encoded input, encoded reconstruction, radiance reconstruction)."""
    fn = TransferFn.parse(fn)
    t = encode(fn, x)
    m = to_model_range(t)
    m_hat = codec.decode(codec.encode(m), size=m.shape, transfer=m.transfer)
    if m_hat.shape != m.shape:
        raise ValueError(f"codec {codec.name} changed frame size {m.shape} -> {m_hat.shape}")
    t_hat = from_model_range(m_hat)
    return t, t_hat, decode(fn, t_hat, x.nits_per_unit)


def relative_error(x: np.ndarray, x_hat: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.abs(np.asarray(x_hat, dtype=np.float64) - x) / np.maximum(x, REL_ERROR_FLOOR)


def _stats(xs, ts, t_hats, x_hats) -> ErrorStats:
    nits = xs[0].nits_per_unit
    big = min(xs[0].shape) >= SSIM_WINDOW
    rel = [relative_error(a.pixels, b.pixels) for a, b in zip(xs, x_hats)]
    n = sum(r.size for r in rel)
    return ErrorStats(
        pu21_psnr=pu21_psnr(Clip(tuple(xs)), Clip(tuple(x_hats)), nits),
        ssim=ssim(Clip(tuple(ts)), Clip(tuple(t_hats))) if big else None,
        pu21_ssim=pu21_ssim(Clip(tuple(xs)), Clip(tuple(x_hats)), nits) if big else None,
        mean_rel_error=float(np.sum(np.array([r.sum() for r in rel]))) / n,
        max_rel_error=float(max(r.max() for r in rel)),
    )


def roundtrip(codec: LatentCodec, fn, x: RadianceFrame) -> tuple[RadianceFrame, ErrorStats]:
    """Encode, pass through the codec, decode, and measure the damage."""
    t, t_hat, x_hat = codec_roundtrip(codec, fn, x)
    return x_hat, _stats([x], [t], [t_hat], [x_hat])


def roundtrip_corpus(codec: LatentCodec, fn, corpus, threads=None) -> ErrorStats:
    """Pooled roundtrip statistics over every frame of ``corpus``."""
    frames = _flatten(corpus)
    runs = ordered_map(lambda f: codec_roundtrip(codec, fn, f), frames, threads)
    return _stats(frames, [r[0] for r in runs], [r[1] for r in runs], [r[2] for r in runs])


def roundtrip_error_curve(codec: LatentCodec, fn, x_values: Iterable[float], size: int = 8,
                          nits_per_unit: float = 100.0) -> np.ndarray:
    """Mean relative roundtrip error of constant ``size`` x ``size`` frames, one row per x."""
    xs = np.asarray(list(x_values), dtype=np.float64)
    if xs.size == 0 or np.any(xs <= 0) or not np.all(np.isfinite(xs)):
        raise ValueError("x_values must be a non-empty set of positive numbers")
    rows = []
    for x in xs:
        frame = RadianceFrame(np.full((size, size, 3), x, dtype=np.float32), nits_per_unit=nits_per_unit)
        _, _, x_hat = codec_roundtrip(codec, fn, frame)
        rows.append((float(frame.pixels[0, 0, 0]), float(relative_error(frame.pixels, x_hat.pixels).mean())))
    return np.array(rows)
