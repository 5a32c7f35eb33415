"""Hot inner loops, each in a numba flavour and a pure-numpy flavour.

The module-level names (``adjacent_cosine_dissimilarity``, ``strict_peaks``,
``segment_means``, ``edit_counts``) point at whichever flavour
:mod:`tokcomp._accel` selected.  Both flavours stay reachable through
:data:`IMPLEMENTATIONS` so tests and the benchmark can compare them.

Kernels assume validated input: float64 C-contiguous frames, int64 index
arrays.  Argument checking lives in the calling modules.
"""
from __future__ import annotations

import numpy as np

from tokcomp._accel import BACKEND, HAS_NUMBA, njit

__all__ = [
    "BACKEND",
    "IMPLEMENTATIONS",
    "adjacent_cosine_dissimilarity",
    "strict_peaks",
    "segment_means",
    "edit_counts",
    "warmup",
]


# --------------------------------------------------------------------------
# loop flavour (compiled by numba when available)
# --------------------------------------------------------------------------

def _dissimilarity_loop(frames):
    T, D = frames.shape
    norms = np.empty(T)
    for t in range(T):
        acc = 0.0
        for k in range(D):
            acc += frames[t, k] * frames[t, k]
        norms[t] = np.sqrt(acc)
    out = np.empty(T - 1)
    for t in range(T - 1):
        dot = 0.0
        for k in range(D):
            dot += frames[t, k] * frames[t + 1, k]
        c = dot / (norms[t] * norms[t + 1])
        if c > 1.0:
            c = 1.0
        elif c < -1.0:
            c = -1.0
        out[t] = 1.0 - c
    return out


def _peaks_loop(d):
    n = d.shape[0]
    hits = np.empty(max(n - 2, 0), dtype=np.int64)
    m = 0
    for t in range(1, n - 1):
        if d[t] > d[t - 1] and d[t] > d[t + 1]:
            hits[m] = t
            m += 1
    return hits[:m]


def _segment_means_loop(frames, starts):
    T, D = frames.shape
    M = starts.shape[0]
    out = np.empty((M, D))
    for i in range(M):
        s = starts[i]
        e = starts[i + 1] if i + 1 < M else T
        for k in range(D):
            # seed with the first frame so single-frame segments copy bits exactly
            acc = frames[s, k]
            for t in range(s + 1, e):
                acc += frames[t, k]
            out[i, k] = acc / (e - s)
    return out


def _edit_table_loop(ref, hyp):
    n = ref.shape[0]
    m = hyp.shape[0]
    dp = np.empty((n + 1, m + 1), dtype=np.int64)
    for j in range(m + 1):
        dp[0, j] = j
    for i in range(1, n + 1):
        dp[i, 0] = i
        for j in range(1, m + 1):
            best = dp[i - 1, j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1)
            ins = dp[i, j - 1] + 1
            if ins < best:
                best = ins
            dele = dp[i - 1, j] + 1
            if dele < best:
                best = dele
            dp[i, j] = best
    return dp


def _backtrace(dp, ref, hyp):
    # precedence on ties: diagonal (match/substitution), insertion, deletion
    i = ref.shape[0]
    j = hyp.shape[0]
    subs = 0
    dels = 0
    ins = 0
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            if dp[i, j] == dp[i - 1, j - 1] + cost:
                subs += cost
                i -= 1
                j -= 1
                continue
        if j > 0 and dp[i, j] == dp[i, j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return subs, dels, ins


def _edit_counts_loop(ref, hyp):
    return _backtrace(_edit_table_loop(ref, hyp), ref, hyp)


# --------------------------------------------------------------------------
# numpy flavour
# --------------------------------------------------------------------------

def _dissimilarity_numpy(frames):
    norms = np.sqrt(np.einsum("td,td->t", frames, frames))
    dots = np.einsum("td,td->t", frames[:-1], frames[1:])
    cos = np.clip(dots / (norms[:-1] * norms[1:]), -1.0, 1.0)
    return 1.0 - cos


def _peaks_numpy(d):
    if d.shape[0] < 3:
        return np.empty(0, dtype=np.int64)
    mid = d[1:-1]
    mask = (mid > d[:-2]) & (mid > d[2:])
    return (np.flatnonzero(mask) + 1).astype(np.int64)


def _segment_means_numpy(frames, starts):
    counts = np.diff(np.append(starts, frames.shape[0]))
    return np.add.reduceat(frames, starts, axis=0) / counts[:, None]


def _edit_table_numpy(ref, hyp):
    n = ref.shape[0]
    m = hyp.shape[0]
    dp = np.empty((n + 1, m + 1), dtype=np.int64)
    cols = np.arange(m + 1, dtype=np.int64)
    dp[0] = cols
    for i in range(1, n + 1):
        prev = dp[i - 1]
        cand = np.empty(m + 1, dtype=np.int64)
        cand[0] = i
        cand[1:] = np.minimum(prev[:-1] + (hyp != ref[i - 1]), prev[1:] + 1)
        # row[j] = min_k<=j cand[k] + (j - k): the insertion chain as a prefix min
        dp[i] = np.minimum.accumulate(cand - cols) + cols
    return dp


def _edit_counts_numpy(ref, hyp):
    return _backtrace(_edit_table_numpy(ref, hyp), ref, hyp)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

_NUMPY = {
    "adjacent_cosine_dissimilarity": _dissimilarity_numpy,
    "strict_peaks": _peaks_numpy,
    "segment_means": _segment_means_numpy,
    "edit_counts": _edit_counts_numpy,
}

if HAS_NUMBA:
    _dissimilarity_jit = njit(_dissimilarity_loop)
    _peaks_jit = njit(_peaks_loop)
    _segment_means_jit = njit(_segment_means_loop)
    _edit_table_jit = njit(_edit_table_loop)
    _backtrace_jit = njit(_backtrace)

    @njit
    def _edit_counts_jit(ref, hyp):
        return _backtrace_jit(_edit_table_jit(ref, hyp), ref, hyp)

    _NUMBA = {
        "adjacent_cosine_dissimilarity": _dissimilarity_jit,
        "strict_peaks": _peaks_jit,
        "segment_means": _segment_means_jit,
        "edit_counts": _edit_counts_jit,
    }
else:  # pragma: no cover
    _NUMBA = {}

IMPLEMENTATIONS = {"numpy": _NUMPY}
if _NUMBA:
    IMPLEMENTATIONS["numba"] = _NUMBA

_ACTIVE = IMPLEMENTATIONS[BACKEND]
adjacent_cosine_dissimilarity = _ACTIVE["adjacent_cosine_dissimilarity"]
strict_peaks = _ACTIVE["strict_peaks"]
segment_means = _ACTIVE["segment_means"]
edit_counts = _ACTIVE["edit_counts"]


def warmup() -> None:
    """Trigger JIT compilation of the active kernels on tiny inputs."""
    frames = np.ones((3, 2))
    adjacent_cosine_dissimilarity(frames)
    strict_peaks(np.array([0.0, 1.0, 0.0]))
    segment_means(frames, np.array([0, 2], dtype=np.int64))
    edit_counts(np.array([1, 2], dtype=np.int64), np.array([2], dtype=np.int64))
