"""Fixed-bin histograms and smoothed KL divergence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KL_EPSILON = 1e-10
DEFAULT_BINS = 256


@dataclass(frozen=True, eq=False)
class Histogram:
    """Uniform bins over ``[lo, hi]``; the last bin is closed on the right.

    Out-of-range samples are counted in the edge bins and also tallied in
    ``clamped_lo`` / ``clamped_hi``.
    """

    lo: float
    hi: float
    counts: np.ndarray
    clamped_lo: int = 0
    clamped_hi: int = 0

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.ndim != 1 or counts.size < 2:
            raise ValueError("a histogram needs at least 2 bins")
        if np.any(counts < 0):
            raise ValueError("bin counts must be non-negative")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"invalid histogram range [{self.lo}, {self.hi}]")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_bins(self) -> int:
        return self.counts.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_bins + 1)

    def same_bins(self, other: "Histogram") -> bool:
        return self.n_bins == other.n_bins and self.lo == other.lo and self.hi == other.hi

    def __add__(self, other: "Histogram") -> "Histogram":
        if not self.same_bins(other):
            raise ValueError("cannot merge histograms with different bins")
        return Histogram(self.lo, self.hi, self.counts + other.counts,
                         self.clamped_lo + other.clamped_lo, self.clamped_hi + other.clamped_hi)

    def rows(self):
        e = self.edges
        return [(e[i], e[i + 1], int(c)) for i, c in enumerate(self.counts)]


def empty_histogram(n_bins: int, lo: float, hi: float) -> Histogram:
    return Histogram(lo, hi, np.zeros(n_bins, dtype=np.int64))


def build_histogram(samples, n_bins: int = DEFAULT_BINS, lo: float = 0.0, hi: float = 1.0,
                    allow_empty: bool = False) -> Histogram:
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    if not lo < hi:
        raise ValueError(f"invalid histogram range [{lo}, {hi}]")
    s = np.asarray(samples, dtype=np.float64).ravel()
    if s.size == 0 and not allow_empty:
        raise ValueError("cannot build a histogram from an empty sample stream")
    if np.any(np.isnan(s)):
        raise ValueError("samples contain NaN")
    below = int(np.count_nonzero(s < lo))
    above = int(np.count_nonzero(s > hi))
    idx = np.floor((s - lo) / (hi - lo) * n_bins)
    idx = np.clip(idx, 0, n_bins - 1).astype(np.int64)
    counts = np.bincount(idx, minlength=n_bins)
    return Histogram(lo, hi, counts, below, above)


def kl_divergence(p: Histogram, q: Histogram, eps: float = KL_EPSILON) -> float:
    """KL(P || Q) in nats after adding ``eps`` to every bin of both."""
    if not p.same_bins(q):
        raise ValueError("KL needs histograms with identical bin structure")
    pc = p.counts.astype(np.float64) + eps
    qc = q.counts.astype(np.float64) + eps
    pf = pc / pc.sum()
    qf = qc / qc.sum()
    return max(0.0, float(np.sum(pf * np.log(pf / qf))))
