"""Word error rate and corpus BLEU."""
from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from tokcomp import kernels

SMOOTH_EPSILON = 1e-9


@dataclass(frozen=True)
class WerReport:
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return self.errors / self.reference_length

    def to_dict(self) -> dict:
        return {**asdict(self), "errors": self.errors, "wer": self.wer}


@dataclass(frozen=True)
class BleuReport:
    matches: tuple
    totals: tuple
    hyp_length: int
    ref_length: int
    max_n: int = 4

    @property
    def precisions(self) -> list[float]:
        return [m / t if t else 0.0 for m, t in zip(self.matches, self.totals)]

    @property
    def smoothed_precisions(self) -> list[float]:
        # zero numerators become epsilon; an n-gram order with no candidates stays 0
        return [(m if m else SMOOTH_EPSILON) / t if t else 0.0
                for m, t in zip(self.matches, self.totals)]

    @property
    def brevity_penalty(self) -> float:
        if self.hyp_length >= self.ref_length:
            return 1.0
        return math.exp(1.0 - self.ref_length / self.hyp_length)

    def _combine(self, precisions) -> float:
        if min(precisions) <= 0.0:
            return 0.0
        return self.brevity_penalty * math.exp(math.fsum(math.log(p) for p in precisions) / self.max_n)

    @property
    def bleu(self) -> float:
        return self._combine(self.precisions)

    @property
    def bleu_smoothed(self) -> float:
        return self._combine(self.smoothed_precisions)

    def to_dict(self) -> dict:
        return {
            "bleu": self.bleu,
            "bleu_smoothed": self.bleu_smoothed,
            "precisions": self.precisions,
            "smoothed_precisions": self.smoothed_precisions,
            "brevity_penalty": self.brevity_penalty,
            "matches": list(self.matches),
            "totals": list(self.totals),
            "hyp_length": self.hyp_length,
            "ref_length": self.ref_length,
        }


def _encode(ref: Sequence[str], hyp: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    vocab: dict[str, int] = {}
    r = np.array([vocab.setdefault(w, len(vocab)) for w in ref], dtype=np.int64)
    h = np.array([vocab.setdefault(w, len(vocab)) for w in hyp], dtype=np.int64)
    return r, h


def wer(reference: Sequence[str], hypothesis: Sequence[str]) -> WerReport:
    """Minimum-edit alignment with unit costs.

    Backtrace ties prefer substitution, then insertion, then deletion.
    """
    if len(reference) == 0:
        raise ValueError("reference must be non-empty for WER")
    r, h = _encode(reference, hypothesis)
    s, d, i = kernels.edit_counts(r, h)
    return WerReport(int(s), int(d), int(i), len(reference))


def _pair_up(pairs):
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one (reference, hypothesis) pair")
    return pairs


def corpus_wer(pairs: Iterable[tuple[Sequence[str], Sequence[str]]]) -> WerReport:
    """Pooled WER: error and length counts summed before dividing."""
    reports = [wer(r, h) for r, h in _pair_up(pairs)]
    return WerReport(
        sum(x.substitutions for x in reports),
        sum(x.deletions for x in reports),
        sum(x.insertions for x in reports),
        sum(x.reference_length for x in reports),
    )


def mean_utterance_wer(pairs) -> float:
    reports = [wer(r, h) for r, h in _pair_up(pairs)]
    return math.fsum(x.wer for x in reports) / len(reports)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(pairs: Iterable[tuple[Sequence[str], Sequence[str]]], max_n: int = 4) -> BleuReport:
    """Corpus BLEU, single reference per segment, clipped counts pooled over the corpus."""
    pairs = _pair_up(pairs)
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for ref, hyp in pairs:
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            h = ngrams(hyp, n)
            r = ngrams(ref, n)
            matches[n - 1] += sum(min(c, r[g]) for g, c in h.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)
    if hyp_len == 0:
        raise ValueError("all hypotheses are empty")
    return BleuReport(tuple(matches), tuple(totals), hyp_len, ref_len, max_n)


def normalize_tokens(tokens: Sequence[str]) -> list[str]:
    """Lowercase and drop punctuation characters; tokens left empty are removed."""
    out = []
    for tok in tokens:
        tok = "".join(ch for ch in tok.lower() if not unicodedata.category(ch).startswith("P"))
        if tok:
            out.append(tok)
    return out


def char_split(tokens: Sequence[str]) -> list[str]:
    """Split tokens into characters, e.g. for Mandarin scoring."""
    return [ch for tok in tokens for ch in tok if not ch.isspace()]
