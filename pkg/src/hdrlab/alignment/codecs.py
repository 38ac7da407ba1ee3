"""Latent codecs standing in for a frozen image autoencoder.

A codec maps a :class:`ModelFrame` to a :class:`LatentTensor` and back.
Only the dimensions are contractual; how much information survives is
what the roundtrip analysis measures.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from ..core import ModelFrame
from .latent import LatentTensor


class CodecError(RuntimeError):
    pass


@runtime_checkable
class LatentCodec(Protocol):
    name: str

    def encode(self, m: ModelFrame) -> LatentTensor: ...

    def decode(self, z: LatentTensor, size: tuple[int, int] | None = None,
               transfer: str = "") -> ModelFrame: ...


def _to_chw(m: ModelFrame) -> np.ndarray:
    return np.ascontiguousarray(m.pixels.transpose(2, 0, 1))


def _from_chw(v: np.ndarray, transfer: str) -> ModelFrame:
    return ModelFrame(np.clip(v.transpose(1, 2, 0), -1.0, 1.0), transfer=transfer)


class IdentityCodec:
    """Lossless: the latent is the model frame in channel-first layout."""

    name = "identity"

    def encode(self, m: ModelFrame) -> LatentTensor:
        return LatentTensor(_to_chw(m))

    def decode(self, z, size=None, transfer=""):
        if z.channels != 3:
            raise CodecError(f"identity codec expects 3 latent channels, got {z.channels}")
        return _from_chw(z.values, transfer)


class QuantizeCodec:
    """Uniform mid-rise quantiser on [-1, 1] with ``levels`` steps."""

    def __init__(self, levels: int = 256):
        if levels < 2:
            raise ValueError("levels must be >= 2")
        self.levels = int(levels)
        self.name = f"quantize-{self.levels}"

    def quantize(self, v) -> np.ndarray:
        v = np.clip(np.asarray(v, dtype=np.float64), -1.0, 1.0)
        step = 2.0 / self.levels
        k = np.clip(np.floor((v + 1.0) / step), 0, self.levels - 1)
        return -1.0 + (k + 0.5) * step

    def encode(self, m: ModelFrame) -> LatentTensor:
        return LatentTensor(self.quantize(_to_chw(m)).astype(np.float32))

    def decode(self, z, size=None, transfer=""):
        if z.channels != 3:
            raise CodecError(f"quantize codec expects 3 latent channels, got {z.channels}")
        return _from_chw(z.values, transfer)


@dataclass
class SurrogateParams:
    block: int = 8
    mean: tuple = (0.0, 0.0, 0.0)
    std: tuple = (1.0, 1.0, 1.0)
    clamp: float = 4.0

    def to_json(self) -> str:
        return json.dumps({"block": self.block, "mean": list(self.mean), "std": list(self.std),
                           "clamp": self.clamp}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SurrogateParams":
        d = json.loads(text)
        try:
            p = cls(int(d["block"]), tuple(float(v) for v in d["mean"]),
                    tuple(float(v) for v in d["std"]), float(d["clamp"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"invalid surrogate parameters: {exc}") from None
        if p.block < 1 or len(p.mean) != 3 or len(p.std) != 3 or min(p.std) <= 0 or p.clamp <= 0:
            raise ValueError("invalid surrogate parameters")
        return p

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SurrogateParams":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _block_pool(chw: np.ndarray, block: int) -> np.ndarray:
    c, h, w = chw.shape
    ph, pw = -h % block, -w % block
    if ph or pw:
        chw = np.pad(chw, ((0, 0), (0, ph), (0, pw)), mode="edge")
    c, h, w = chw.shape
    return chw.reshape(c, h // block, block, w // block, block).astype(np.float64).mean(axis=(2, 4))


class SurrogateCodec:
    """Block mean-pool, per-channel whitening, hard clamp in whitened units.

    The whitening statistics come from an SDR prior corpus (see
    :meth:`fit`), so inputs far from that corpus saturate the clamp the
    way out-of-distribution inputs break a learned autoencoder.
    """

    def __init__(self, params: SurrogateParams | None = None):
        self.params = params or SurrogateParams()
        self.name = f"surrogate-{self.params.block}"

    @classmethod
    def fit(cls, prior: Sequence[ModelFrame], block: int = 8, clamp: float = 4.0) -> "SurrogateCodec":
        if not prior:
            raise ValueError("surrogate fit needs a non-empty prior corpus")
        pooled = [_block_pool(_to_chw(m), block).reshape(3, -1) for m in prior]
        # sorted per-frame partial sums keep the fit independent of corpus order
        n = sum(p.shape[1] for p in pooled)
        mean = [np.sum(np.sort([p[c].sum() for p in pooled])) / n for c in range(3)]
        var = [np.sum(np.sort([((p[c] - mean[c]) ** 2).sum() for p in pooled])) / n for c in range(3)]
        std = tuple(float(max(np.sqrt(v), 1e-6)) for v in var)
        return cls(SurrogateParams(block, tuple(float(m) for m in mean), std, clamp))

    def encode(self, m: ModelFrame) -> LatentTensor:
        p = self.params
        pooled = _block_pool(_to_chw(m), p.block)
        mean = np.array(p.mean)[:, None, None]
        std = np.array(p.std)[:, None, None]
        return LatentTensor(np.clip((pooled - mean) / std, -p.clamp, p.clamp).astype(np.float32))

    def decode(self, z, size=None, transfer=""):
        p = self.params
        if z.channels != 3:
            raise CodecError(f"surrogate codec expects 3 latent channels, got {z.channels}")
        v = z.values.astype(np.float64) * np.array(p.std)[:, None, None] + np.array(p.mean)[:, None, None]
        v = np.repeat(np.repeat(v, p.block, axis=1), p.block, axis=2)
        if size is not None:
            h, w = size
            if h > v.shape[1] or w > v.shape[2]:
                raise CodecError(f"cannot decode {z.height}x{z.width} latent to {h}x{w}")
            v = v[:, :h, :w]
        return _from_chw(v, transfer)


@dataclass
class ExternalCodec:
    """Exchange latents with an out-of-process model through a drop directory.

    Requests are written as ``<op>/NNNNNN_req.lat`` (``op`` is ``encode`` or
    ``decode``) and the codec polls for ``<op>/NNNNNN_rsp.lat``. Encode
    requests carry the model frame as a (3, H, W) tensor; decode responses
    must be (3, H, W) too.
    """

    directory: Path
    timeout: float = 10.0
    poll_interval: float = 0.02
    name: str = "external"
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _counter: int = 0

    def __post_init__(self):
        self.directory = Path(self.directory)
        for op in ("encode", "decode"):
            (self.directory / op).mkdir(parents=True, exist_ok=True)

    def _exchange(self, op: str, t: LatentTensor) -> LatentTensor:
        from ..io.latent import dumps_latent, read_latent  # avoid import cycle
        from ..io.errors import FormatError

        with self._lock:
            idx = self._counter
            self._counter += 1
            folder = self.directory / op
            req = folder / f"{idx:06d}_req.lat"
            rsp = folder / f"{idx:06d}_rsp.lat"
            tmp = folder / f".{idx:06d}_req.tmp"
            tmp.write_bytes(dumps_latent(t))
            tmp.replace(req)
            deadline = time.monotonic() + self.timeout
            while True:
                if rsp.exists():
                    try:
                        return read_latent(rsp)
                    except FormatError as exc:
                        # may still be mid-write
                        if time.monotonic() > deadline:
                            raise CodecError(f"bad response {rsp.name}: {exc}") from None
                elif time.monotonic() > deadline:
                    raise CodecError(f"no response {rsp.name} within {self.timeout:g} s")
                time.sleep(self.poll_interval)

    def encode(self, m: ModelFrame) -> LatentTensor:
        return self._exchange("encode", LatentTensor(_to_chw(m)))

    def decode(self, z, size=None, transfer=""):
        out = self._exchange("decode", z)
        if out.channels != 3:
            raise CodecError(f"external decoder returned {out.channels} channels, expected 3")
        v = out.values
        if size is not None:
            if (out.height, out.width) != tuple(size):
                raise CodecError(f"external decoder returned {out.height}x{out.width}, expected {size}")
        return _from_chw(v, transfer)


CODEC_NAMES = ("identity", "quantize", "surrogate", "external")


def make_codec(name: str, *, levels: int = 256, surrogate_params: SurrogateParams | None = None,
               prior: Sequence[ModelFrame] | None = None, directory=None, timeout: float = 10.0):
    """Build a codec by name; ``surrogate`` fits on ``prior`` unless params are given."""
    key = name.strip().lower()
    if key.startswith("quantize-"):
        key, levels = "quantize", int(key.split("-", 1)[1])
    if key == "identity":
        return IdentityCodec()
    if key == "quantize":
        return QuantizeCodec(levels)
    if key == "surrogate":
        if surrogate_params is not None:
            return SurrogateCodec(surrogate_params)
        if prior is None:
            raise ValueError("surrogate codec needs fitted parameters or a prior corpus")
        return SurrogateCodec.fit(prior)
    if key == "external":
        if directory is None:
            raise ValueError("external codec needs a drop directory")
        return ExternalCodec(Path(directory), timeout=timeout)
    raise ValueError(f"unknown codec {name!r}; valid: {', '.join(CODEC_NAMES)}")
