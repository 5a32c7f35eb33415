"""Recompute the pinned values for the fixtures in this directory.

Run from the tests/ directory:  python fixtures/compute_expected.py
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from oracles import bleu_by_hand, levenshtein  # noqa: E402

here = Path(__file__).parent


def load(name):
    return [line.split("\t", 1)[1].split() for line in (here / name).read_text().splitlines() if line]


refs, hyps = load("refs.txt"), load("hyps.txt")
errors = [levenshtein(r, h) for r, h in zip(refs, hyps)]
n = sum(len(r) for r in refs)
print("per-utterance edit distance:", errors)
print("pooled WER:", sum(errors), "/", n, "=", sum(errors) / n)
print("mean utterance WER:", sum(e / len(r) for e, r in zip(errors, refs)) / len(refs))
print("BLEU raw:", repr(bleu_by_hand(list(zip(refs, hyps)))[0]))
print("BLEU smoothed:", repr(bleu_by_hand(list(zip(refs, hyps)), epsilon=1e-9)[0]))
single = [("the cat sat on the mat".split(), "the cat on the mat".split())]
print("single-pair BLEU smoothed:", repr(bleu_by_hand(single, epsilon=1e-9)[0]))
