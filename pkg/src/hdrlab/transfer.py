"""HDR transfer functions with analytical inverses.

Every curve maps scene-linear radiance (1.0 = diffuse white) into [0, 1] and
is applied independently to R, G and B. Curve math runs in float64; frame
level wrappers round the result to float32.
"""

from __future__ import annotations

import enum

import numpy as np

from .core import DEFAULT_NITS_PER_UNIT, EncodedFrame, ModelFrame, RadianceFrame


class TransferFn(str, enum.Enum):
    LOGC3 = "logc3"
    PQ = "pq"
    HLG = "hlg"
    ACES_LINEAR = "aces-linear"
    ACES_CC = "aces-cc"
    SRGB_GAMMA = "srgb-gamma"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: "str | TransferFn") -> "TransferFn":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"aces": "aces-linear", "acescc": "aces-cc", "srgb": "srgb-gamma", "gamma": "srgb-gamma"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown transfer function {name!r}; valid: {valid}") from None


# Transforms compared in the alignment analysis.
ANALYSIS_FNS = (TransferFn.LOGC3, TransferFn.PQ, TransferFn.HLG, TransferFn.ACES_LINEAR)


class TransferMismatchError(ValueError):
    """An encoded frame was handed to the decoder of a different curve."""


# ARRI LogC3, EI 800
LOGC3_CUT = 0.010591
LOGC3_A = 5.555556
LOGC3_B = 0.052272
LOGC3_C = 0.247190
LOGC3_D = 0.385537
LOGC3_E = 5.367655
LOGC3_F = 0.092809

# SMPTE ST 2084
PQ_M1 = 0.1593017578125
PQ_M2 = 78.84375
PQ_C1 = 0.8359375
PQ_C2 = 18.8515625
PQ_C3 = 18.6875
PQ_PEAK_NITS = 10000.0

# ITU-R BT.2100 HLG
HLG_A = 0.17883277
HLG_B = 0.28466892
HLG_C = 0.55991073

HALF_MAX = 65504.0
SRGB_GAMMA = 2.2


def _logc3_encode(x):
    lin = LOGC3_E * x + LOGC3_F
    log = LOGC3_C * np.log10(np.maximum(LOGC3_A * x + LOGC3_B, 1e-300)) + LOGC3_D
    return np.where(x > LOGC3_CUT, log, lin)


def _logc3_decode(t):
    lin = (t - LOGC3_F) / LOGC3_E
    log = (np.power(10.0, (t - LOGC3_D) / LOGC3_C) - LOGC3_B) / LOGC3_A
    return np.where(t > LOGC3_E * LOGC3_CUT + LOGC3_F, log, lin)


def _pq_encode(x, nits):
    y = np.clip(x * nits / PQ_PEAK_NITS, 0.0, 1.0)
    ym = np.power(y, PQ_M1)
    return np.power((PQ_C1 + PQ_C2 * ym) / (1.0 + PQ_C3 * ym), PQ_M2)


def _pq_decode(t, nits):
    tp = np.power(t, 1.0 / PQ_M2)
    y = np.power(np.maximum(tp - PQ_C1, 0.0) / (PQ_C2 - PQ_C3 * tp), 1.0 / PQ_M1)
    return y * PQ_PEAK_NITS / nits


def _hlg_encode(x):
    e = np.minimum(x, 1.0)
    low = np.sqrt(3.0 * e)
    high = HLG_A * np.log(np.maximum(12.0 * e - HLG_B, 1e-300)) + HLG_C
    return np.where(e <= 1.0 / 12.0, low, high)


def _hlg_decode(t):
    low = t * t / 3.0
    high = (np.exp((t - HLG_C) / HLG_A) + HLG_B) / 12.0
    return np.where(t <= 0.5, low, high)


_ACESCC_LOW = 2.0**-15


def _acescc_encode(x):
    tiny = (np.log2(np.maximum(2.0**-16 + 0.5 * x, 1e-300)) + 9.72) / 17.52
    big = (np.log2(np.maximum(x, 1e-300)) + 9.72) / 17.52
    zero = (np.log2(2.0**-16) + 9.72) / 17.52
    return np.where(x <= 0, zero, np.where(x < _ACESCC_LOW, tiny, big))


def _acescc_decode(t):
    v = t * 17.52 - 9.72
    low = (np.exp2(v) - 2.0**-16) * 2.0
    return np.where(t < (9.72 - 15.0) / 17.52, low, np.minimum(np.exp2(v), HALF_MAX))


def encode_values(fn, x, nits_per_unit: float = DEFAULT_NITS_PER_UNIT) -> np.ndarray:
    """Apply the transfer curve to an array of scene-linear values.

    Negative inputs are treated as 0; the result is clamped to [0, 1].
    """
    fn = TransferFn.parse(fn)
    x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    if fn is TransferFn.LOGC3:
        t = _logc3_encode(x)
    elif fn is TransferFn.PQ:
        t = _pq_encode(x, nits_per_unit)
    elif fn is TransferFn.HLG:
        t = _hlg_encode(x)
    elif fn is TransferFn.ACES_LINEAR:
        t = np.minimum(x, HALF_MAX) / HALF_MAX
    elif fn is TransferFn.ACES_CC:
        t = _acescc_encode(x)
    else:
        t = np.power(np.minimum(x, 1.0), 1.0 / SRGB_GAMMA)
    return np.clip(t, 0.0, 1.0)


def decode_values(fn, t, nits_per_unit: float = DEFAULT_NITS_PER_UNIT) -> np.ndarray:
    """Analytical inverse of :func:`encode_values` on [0, 1]."""
    fn = TransferFn.parse(fn)
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    if fn is TransferFn.LOGC3:
        x = _logc3_decode(t)
    elif fn is TransferFn.PQ:
        x = _pq_decode(t, nits_per_unit)
    elif fn is TransferFn.HLG:
        x = _hlg_decode(t)
    elif fn is TransferFn.ACES_LINEAR:
        x = t * HALF_MAX
    elif fn is TransferFn.ACES_CC:
        x = _acescc_decode(t)
    else:
        x = np.power(t, SRGB_GAMMA)
    return np.maximum(x, 0.0)


def invertible_max(fn, nits_per_unit: float = DEFAULT_NITS_PER_UNIT) -> float:
    """Largest radiance the curve encodes without clamping."""
    fn = TransferFn.parse(fn)
    if fn is TransferFn.PQ:
        return PQ_PEAK_NITS / nits_per_unit
    if fn in (TransferFn.HLG, TransferFn.SRGB_GAMMA):
        return 1.0
    if fn is TransferFn.ACES_LINEAR:
        return HALF_MAX
    return float(decode_values(fn, 1.0, nits_per_unit))


def encode(fn, x: RadianceFrame) -> EncodedFrame:
    fn = TransferFn.parse(fn)
    t = encode_values(fn, x.pixels, x.nits_per_unit)
    return EncodedFrame(t.astype(np.float32), transfer=fn.value)


def decode(fn, t: EncodedFrame, nits_per_unit: float = DEFAULT_NITS_PER_UNIT) -> RadianceFrame:
    fn = TransferFn.parse(fn)
    if t.transfer != fn.value:
        raise TransferMismatchError(f"frame was encoded with {t.transfer!r}, not {fn.value!r}")
    x = decode_values(fn, t.pixels, nits_per_unit)
    return RadianceFrame(x.astype(np.float32), nits_per_unit=nits_per_unit)


def to_model_range(e: EncodedFrame) -> ModelFrame:
    m = 2.0 * e.pixels.astype(np.float64) - 1.0
    return ModelFrame(m.astype(np.float32), transfer=e.transfer)


def from_model_range(m: ModelFrame) -> EncodedFrame:
    e = (m.pixels.astype(np.float64) + 1.0) / 2.0
    return EncodedFrame(e.astype(np.float32), transfer=m.transfer)


def transfer_curve(fn, n: int, x_min: float, x_max: float, log_spaced: bool = False,
                   nits_per_unit: float = DEFAULT_NITS_PER_UNIT) -> np.ndarray:
    """Tabulate the curve as an ``(n, 2)`` array of ``(x, t)`` rows."""
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not (0 <= x_min < x_max) or not np.isfinite(x_max):
        raise ValueError(f"invalid range [{x_min}, {x_max}]")
    if log_spaced:
        if x_min <= 0:
            raise ValueError("log spacing needs x_min > 0")
        xs = np.geomspace(x_min, x_max, n)
    else:
        xs = np.linspace(x_min, x_max, n)
    return np.column_stack([xs, encode_values(fn, xs, nits_per_unit)])
