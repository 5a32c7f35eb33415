"""Reference implementations used only by the tests.

Each one is deliberately naive and shares no code with the package.
"""
from __future__ import annotations

import math
from functools import lru_cache, reduce

import numpy as np


def levenshtein(a, b) -> int:
    """Plain quadratic DP over full rows."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def levenshtein_recursive(a, b) -> int:
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if a[i] == b[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j), go(i, j + 1), go(i + 1, j + 1))

    return go(0, 0)


def brute_peaks(d) -> list[int]:
    out = []
    for t in range(len(d)):
        left = d[t - 1] if t - 1 >= 0 else None
        right = d[t + 1] if t + 1 < len(d) else None
        if left is None or right is None:
            continue
        if d[t] > left and d[t] > right:
            out.append(t)
    return out


def fold_avg_pool(rows, K):
    """Pool by folding frames into windows with functools.reduce."""
    def step(acc, row):
        windows, current = acc
        current = current + [row]
        if len(current) == K:
            return windows + [current], []
        return windows, current

    windows, tail = reduce(step, [list(r) for r in rows], ([], []))
    if tail:
        windows = windows + [tail]
    return [[sum(col) / len(w) for col in zip(*w)] for w in windows]


def count_ngrams(tokens, n):
    counts = {}
    for i in range(len(tokens) - n + 1):
        g = " ".join(tokens[i:i + n])
        counts[g] = counts.get(g, 0) + 1
    return counts


def bleu_by_hand(pairs, max_n=4, epsilon=None):
    """Corpus BLEU from explicit dict counting; ``epsilon`` replaces zero matches."""
    match = [0] * max_n
    total = [0] * max_n
    hl = rl = 0
    for ref, hyp in pairs:
        hl += len(hyp)
        rl += len(ref)
        for n in range(1, max_n + 1):
            hc = count_ngrams(hyp, n)
            rc = count_ngrams(ref, n)
            for g, c in hc.items():
                match[n - 1] += min(c, rc.get(g, 0))
                total[n - 1] += c
    precisions = []
    for m, t in zip(match, total):
        if m == 0 and epsilon is not None and t:
            m = epsilon
        precisions.append(m / t if t else 0.0)
    if min(precisions) == 0:
        return 0.0, precisions
    bp = 1.0 if hl >= rl else math.exp(1 - rl / hl)
    return bp * math.exp(sum(math.log(p) for p in precisions) / max_n), precisions


def direct_dft_power(frame, n_fft):
    """|X_k|^2 for k = 0..n_fft/2 from the DFT sum, no FFT."""
    x = np.zeros(n_fft)
    x[:len(frame)] = frame
    n = np.arange(n_fft)
    out = np.empty(n_fft // 2 + 1)
    for k in range(n_fft // 2 + 1):
        ang = -2.0 * np.pi * k * n / n_fft
        re = np.sum(x * np.cos(ang))
        im = np.sum(x * np.sin(ang))
        out[k] = re * re + im * im
    return out


def htk_mel_edges(n_mels, sr=16000):
    top = 2595.0 * math.log10(1 + (sr / 2) / 700.0)
    return [700.0 * (10 ** (top * i / (n_mels + 1) / 2595.0) - 1) for i in range(n_mels + 2)]
