"""Quadratic attention-cost estimate for the LLM backbone.

Only the two sequence-by-sequence products of self-attention are counted
(``Q K^T`` and ``softmax(.) V``, 2 FLOPs per multiply-accumulate), which is
the part that grows with the square of the sequence length.  Projections and
feed-forward layers are linear in length and left out.
"""
from __future__ import annotations

from dataclasses import dataclass

COST_NOTE = "quadratic attention term only (QK^T and AV); projections and feed-forward excluded"

# Qwen2-7B backbone geometry
DEFAULT_LAYERS = 28
DEFAULT_D_MODEL = 3584


@dataclass(frozen=True)
class LlmShape:
    layers: int = DEFAULT_LAYERS
    d_model: int = DEFAULT_D_MODEL
    audio_tokens: int = 0
    text_tokens: int = 0

    def __post_init__(self):
        for name in ("layers", "d_model", "audio_tokens", "text_tokens"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def seq_len(self) -> int:
        return self.audio_tokens + self.text_tokens


def attention_flops(shape: LlmShape) -> int:
    """``layers * 4 * S^2 * d_model`` as an exact integer, ``S`` = audio + text tokens."""
    return shape.layers * 4 * shape.seq_len ** 2 * shape.d_model


def attention_cost(shape: LlmShape) -> float:
    return float(attention_flops(shape))


def savings(before: int, after: int, shape: LlmShape = LlmShape()) -> float:
    """Cost ratio of ``before`` vs ``after`` audio tokens, text tokens held fixed."""
    if after > before:
        raise ValueError(f"after ({after}) exceeds before ({before})")
    if after < 0:
        raise ValueError("token counts must be >= 0")
    num = (before + shape.text_tokens) ** 2
    den = (after + shape.text_tokens) ** 2
    if den == 0:
        return 1.0 if num == 0 else float("inf")
    # exact integer ratio; layers and d_model cancel
    return num / den


def cost_row(tokens: int, seconds: float, shape: LlmShape, baseline_tokens: int) -> dict:
    """One plottable report row: ``tok_per_s``, ``tokens``, ``flops``, ``savings_vs_baseline``."""
    s = LlmShape(shape.layers, shape.d_model, tokens, shape.text_tokens)
    return {
        "tok_per_s": tokens / seconds if seconds > 0 else 0.0,
        "tokens": tokens,
        "flops": attention_cost(s),
        "savings_vs_baseline": savings(baseline_tokens, tokens, shape),
    }
