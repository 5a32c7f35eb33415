"""Time the numba and numpy flavour of every kernel on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--frames 50000]

The numba column excludes compilation (one warm-up call first).
"""
import argparse
import time

import numpy as np

from tokcomp.kernels import IMPLEMENTATIONS


def best_of(fn, args, repeat):
    fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n_frames, dim, n_tokens):
    rng = np.random.default_rng(0)
    frames = rng.standard_normal((n_frames, dim)) + 0.01
    d = rng.random(n_frames - 1)
    starts = np.arange(0, n_frames, 3, dtype=np.int64)
    ref = rng.integers(0, 50, size=n_tokens).astype(np.int64)
    hyp = rng.integers(0, 50, size=n_tokens).astype(np.int64)
    return {
        "adjacent_cosine_dissimilarity": (frames,),
        "strict_peaks": (d,),
        "segment_means": (frames, starts),
        "edit_counts": (ref, hyp),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--frames", type=int, default=50_000)
    ap.add_argument("--dim", type=int, default=128)
    ap.add_argument("--tokens", type=int, default=1_000)
    args = ap.parse_args()

    backends = sorted(IMPLEMENTATIONS)
    print(f"{'kernel':32s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for name, inputs in cases(args.frames, args.dim, args.tokens).items():
        times = {b: best_of(IMPLEMENTATIONS[b][name], inputs, args.repeat) for b in backends}
        line = f"{name:32s}" + "".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        if "numba" in times:
            line += f"{times['numpy'] / times['numba']:9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
