"""Audio-token compressors: uniform pooling, uniform sampling, unsupervised
segmentation and global pooling.

Every compressor returns a :class:`CompressionOutcome` carrying the shorter
sequence and its token accounting.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from tokcomp import kernels
from tokcomp.featio import FeatureSequence

__all__ = [
    "Boundaries",
    "CompressionOutcome",
    "ZeroNormFrameError",
    "adjacent_dissimilarity",
    "detect_peaks",
    "merge_segments",
    "segment_unsupervised",
    "uniform_avg_pool",
    "uniform_sample",
    "global_pool",
    "COMPRESSORS",
    "run_compressor",
]


class ZeroNormFrameError(ValueError):
    """A frame has zero norm, so its cosine similarity is undefined."""


@dataclass(frozen=True)
class Boundaries:
    """Segment breaks; ``t`` in ``cut_after`` splits frames ``t`` and ``t + 1``."""

    cut_after: tuple = ()

    def __post_init__(self):
        cuts = tuple(int(c) for c in self.cut_after)
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValueError(f"cut_after must be strictly increasing: {cuts}")
        if cuts and cuts[0] < 0:
            raise ValueError(f"negative boundary index {cuts[0]}")
        object.__setattr__(self, "cut_after", cuts)

    @property
    def n_segments(self) -> int:
        return len(self.cut_after) + 1

    def validate_for(self, T: int) -> None:
        if self.cut_after and self.cut_after[-1] > T - 2:
            raise IndexError(f"boundary {self.cut_after[-1]} out of range for T={T}")

    def starts(self) -> np.ndarray:
        return np.array((0,) + tuple(c + 1 for c in self.cut_after), dtype=np.int64)

    def to_list(self) -> list[int]:
        return list(self.cut_after)


@dataclass(frozen=True)
class CompressionOutcome:
    compressed: FeatureSequence
    input_tokens: int
    input_rate: float
    output_rate: float
    boundaries: Optional[Boundaries] = None
    method: str = ""

    @property
    def output_tokens(self) -> int:
        return self.compressed.T

    @property
    def compression_factor(self) -> float:
        return self.input_tokens / self.output_tokens

    @property
    def duration(self) -> float:
        return self.input_tokens / self.input_rate

    def accounting(self) -> dict:
        row = {
            "method": self.method,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "compression_factor": self.compression_factor,
            "input_rate": self.input_rate,
            "output_rate": self.output_rate,
            "duration_s": self.duration,
        }
        if self.boundaries is not None:
            row["boundaries"] = self.boundaries.to_list()
        return row


def _average_rate(seq: FeatureSequence, out_T: int) -> float:
    return seq.frame_rate * out_T / seq.T


def adjacent_dissimilarity(seq: FeatureSequence) -> np.ndarray:
    """Return ``d[t] = 1 - cos(z_t, z_{t+1})`` for ``t`` in ``0..T-2``."""
    if seq.T < 2:
        raise ValueError(f"need at least 2 frames, got {seq.T}")
    zero = np.flatnonzero(~np.any(seq.frames != 0.0, axis=1))
    if zero.size:
        raise ZeroNormFrameError(f"frame {int(zero[0])} is all zeros")
    return kernels.adjacent_cosine_dissimilarity(seq.frames)


def detect_peaks(d) -> Boundaries:
    """Strict interior peaks of ``d``: ``d[t] > d[t-1]`` and ``d[t] > d[t+1]``."""
    d = np.ascontiguousarray(d, dtype=np.float64)
    if d.ndim != 1 or d.shape[0] < 1:
        raise ValueError("d must be a non-empty 1-D sequence")
    return Boundaries(tuple(kernels.strict_peaks(d).tolist()))


def merge_segments(seq: FeatureSequence, b: Boundaries) -> FeatureSequence:
    """Replace each segment by the mean of its frames."""
    b.validate_for(seq.T)
    means = kernels.segment_means(seq.frames, b.starts())
    return seq.with_frames(means, _average_rate(seq, means.shape[0]))


def segment_unsupervised(seq: FeatureSequence) -> CompressionOutcome:
    d = adjacent_dissimilarity(seq)
    b = detect_peaks(d)
    merged = merge_segments(seq, b)
    return CompressionOutcome(merged, seq.T, seq.frame_rate, merged.frame_rate, b, "unseg")


def _check_k(K) -> int:
    if int(K) != K or K < 1:
        raise ValueError(f"compression factor K must be a positive integer, got {K!r}")
    return int(K)


def uniform_avg_pool(seq: FeatureSequence, K: int) -> CompressionOutcome:
    """Average pool with kernel ``K`` and stride ``K``.

    A trailing partial window is averaged over the frames it has.
    """
    K = _check_k(K)
    starts = np.arange(0, seq.T, K, dtype=np.int64)
    pooled = kernels.segment_means(seq.frames, starts)
    rate = seq.frame_rate / K
    return CompressionOutcome(seq.with_frames(pooled, rate), seq.T, seq.frame_rate, rate, None, "uniavg")


def uniform_sample(seq: FeatureSequence, K: int) -> CompressionOutcome:
    """Keep frames ``0, K, 2K, ...``."""
    K = _check_k(K)
    rate = seq.frame_rate / K
    kept = seq.with_frames(seq.frames[::K], rate)
    return CompressionOutcome(kept, seq.T, seq.frame_rate, rate, None, "unisamp")


def global_pool(seq: FeatureSequence, mode: str = "mean") -> CompressionOutcome:
    if mode == "mean":
        vec = seq.frames.mean(axis=0, keepdims=True) if seq.T > 1 else seq.frames
    elif mode == "max":
        vec = seq.frames.max(axis=0, keepdims=True)
    else:
        raise ValueError(f"mode must be 'mean' or 'max', got {mode!r}")
    rate = _average_rate(seq, 1)
    return CompressionOutcome(seq.with_frames(vec, rate), seq.T, seq.frame_rate, rate, None, f"global{mode}")


COMPRESSORS = ("uniavg", "unisamp", "unseg", "globalmean", "globalmax")


def run_compressor(seq: FeatureSequence, name: str, K: Optional[int] = None) -> CompressionOutcome:
    """Dispatch by CLI name; ``K`` is required exactly for uniavg/unisamp."""
    if name in ("uniavg", "unisamp"):
        if K is None:
            raise ValueError(f"{name} requires K")
        fn = uniform_avg_pool if name == "uniavg" else uniform_sample
        return fn(seq, K)
    if K is not None:
        raise ValueError(f"{name} does not take K")
    if name == "unseg":
        return segment_unsupervised(seq)
    if name == "globalmean":
        return global_pool(seq, "mean")
    if name == "globalmax":
        return global_pool(seq, "max")
    raise ValueError(f"unknown compressor {name!r}; choose from {', '.join(COMPRESSORS)}")
