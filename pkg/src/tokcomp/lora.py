"""Low-rank adapter arithmetic: adapted forward pass, merging, parameter
counting and a finite-difference gradient check.

Convention: ``W' = W + (alpha / r) * B @ A`` with ``A`` of shape ``(r, d_in)``
and ``B`` of shape ``(d_out, r)``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Optional

import numpy as np

_HEADER = struct.Struct("<4sHHIIIf")
MAGIC = b"ATCL"
VERSION = 1


def _matrix(m, name: str) -> np.ndarray:
    arr = np.array(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BaseLinear:
    W: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "W", _matrix(self.W, "W"))

    @property
    def d_in(self) -> int:
        return self.W.shape[1]

    @property
    def d_out(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True)
class LoraAdapter:
    A: np.ndarray
    B: np.ndarray
    alpha: float

    def __post_init__(self):
        A = _matrix(self.A, "A")
        B = _matrix(self.B, "B")
        if A.shape[0] < 1:
            raise ValueError("rank must be >= 1")
        if B.shape[1] != A.shape[0]:
            raise ValueError(f"B has {B.shape[1]} columns but rank is {A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def rank(self) -> int:
        return self.A.shape[0]

    @property
    def scaling(self) -> float:
        return self.alpha / self.rank

    @property
    def d_in(self) -> int:
        return self.A.shape[1]

    @property
    def d_out(self) -> int:
        return self.B.shape[0]

    def delta(self) -> np.ndarray:
        return self.scaling * (self.B @ self.A)


def init_adapter(d_in: int, d_out: int, rank: int = 16, alpha: float = 32.0,
                 rng: Optional[np.random.Generator] = None, scale: float = 0.01) -> LoraAdapter:
    """Fresh adapter: ``B`` zero, ``A`` uniform in ``[-scale, scale]``."""
    rng = np.random.default_rng() if rng is None else rng
    A = rng.uniform(-scale, scale, size=(rank, d_in))
    return LoraAdapter(A, np.zeros((d_out, rank)), alpha)


def _check_shapes(base: BaseLinear, ad: LoraAdapter) -> None:
    if (base.d_out, base.d_in) != (ad.d_out, ad.d_in):
        raise ValueError(f"adapter maps {ad.d_in}->{ad.d_out}, base maps {base.d_in}->{base.d_out}")


def lora_forward(base: BaseLinear, ad: LoraAdapter, x) -> np.ndarray:
    """``W x + scaling * B (A x)``; ``x`` may be a vector or a batch of rows."""
    _check_shapes(base, ad)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != base.d_in:
        raise ValueError(f"x has trailing dim {x.shape[-1]}, expected {base.d_in}")
    return x @ base.W.T + ad.scaling * ((x @ ad.A.T) @ ad.B.T)


def merge(base: BaseLinear, ad: LoraAdapter) -> BaseLinear:
    _check_shapes(base, ad)
    return BaseLinear(base.W + ad.delta())


def param_count(specs: Iterable[tuple[int, int]], r: int) -> int:
    """Trainable parameters added by rank-``r`` adapters on ``(d_in, d_out)`` matrices."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return sum(r * (d_in + d_out) for d_in, d_out in specs)


def lora_grads(base: BaseLinear, ad: LoraAdapter, x, upstream) -> tuple[np.ndarray, np.ndarray]:
    """Analytic ``(dL/dA, dL/dB)`` for ``L = upstream . y``."""
    _check_shapes(base, ad)
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(upstream, dtype=np.float64)
    dB = ad.scaling * np.outer(g, ad.A @ x)
    dA = ad.scaling * np.outer(ad.B.T @ g, x)
    return dA, dB


def numeric_grads(base: BaseLinear, ad: LoraAdapter, x, upstream, h: float = 1e-4):
    """Central finite differences of ``upstream . y`` w.r.t. ``A`` and ``B``."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(upstream, dtype=np.float64)

    def loss(A, B):
        return float(g @ lora_forward(base, LoraAdapter(A, B, ad.alpha), x))

    A0, B0 = np.array(ad.A), np.array(ad.B)
    dA = np.zeros_like(A0)
    dB = np.zeros_like(B0)
    for target, grad, which in ((A0, dA, 0), (B0, dB, 1)):
        for idx in np.ndindex(target.shape):
            keep = target[idx]
            target[idx] = keep + h
            up = loss(A0, B0)
            target[idx] = keep - h
            down = loss(A0, B0)
            target[idx] = keep
            grad[idx] = (up - down) / (2.0 * h)
    return dA, dB


def grad_check(base: BaseLinear, ad: LoraAdapter, x, upstream, h: float = 1e-4) -> float:
    """Max gap between analytic and finite-difference gradients.

    The gap is relative to the largest gradient magnitude across both
    tensors, so an all-zero gradient (``B = 0`` for ``dA``) is compared on the
    scale of its sibling instead of on its own floating-point noise.
    """
    analytic = lora_grads(base, ad, x, upstream)
    numeric = numeric_grads(base, ad, x, upstream, h)
    gap = max(np.max(np.abs(a - n), initial=0.0) for a, n in zip(analytic, numeric))
    scale = max(np.max(np.abs(t), initial=0.0) for t in analytic + numeric)
    if scale == 0.0:
        return 0.0
    return float(gap / scale)


def write_adapter(ad: LoraAdapter, sink: BinaryIO) -> int:
    """Binary layout: ``ATCL`` header (r, d_in, d_out, alpha) then A and B as f32."""
    header = _HEADER.pack(MAGIC, VERSION, 0, ad.rank, ad.d_in, ad.d_out, ad.alpha)
    body = ad.A.astype("<f4").tobytes() + ad.B.astype("<f4").tobytes()
    sink.write(header)
    sink.write(body)
    return len(header) + len(body)


def read_adapter(source: BinaryIO) -> LoraAdapter:
    raw = source.read(_HEADER.size)
    if len(raw) < _HEADER.size or raw[:4] != MAGIC:
        raise ValueError("not an ATCL adapter file")
    _, version, _, r, d_in, d_out, alpha = _HEADER.unpack(raw)
    if version != VERSION:
        raise ValueError(f"ATCL version {version} not supported")
    n_a, n_b = r * d_in, d_out * r
    body = source.read(4 * (n_a + n_b))
    if len(body) != 4 * (n_a + n_b):
        raise ValueError("adapter payload truncated")
    vals = np.frombuffer(body, dtype="<f4")
    return LoraAdapter(vals[:n_a].reshape(r, d_in), vals[n_a:].reshape(d_out, r), alpha)
