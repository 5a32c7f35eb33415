"""The numba and numpy flavours of every kernel must agree."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tokcomp import kernels
from tokcomp._accel import HAS_NUMBA

pytestmark = pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")

NB = kernels.IMPLEMENTATIONS.get("numba", {})
NP = kernels.IMPLEMENTATIONS["numpy"]


@settings(max_examples=60, deadline=None)
@given(T=st.integers(2, 30), D=st.integers(1, 8), seed=st.integers(0, 10_000))
def test_dissimilarity_agrees(T, D, seed):
    frames = np.random.default_rng(seed).standard_normal((T, D)) + 0.1
    np.testing.assert_allclose(
        NB["adjacent_cosine_dissimilarity"](frames),
        NP["adjacent_cosine_dissimilarity"](frames),
        rtol=1e-12, atol=1e-12,
    )


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=20))
def test_peaks_agree(vals):
    d = np.array(vals, dtype=np.float64)
    assert NB["strict_peaks"](d).tolist() == NP["strict_peaks"](d).tolist()


@settings(max_examples=60, deadline=None)
@given(T=st.integers(1, 40), D=st.integers(1, 5), K=st.integers(1, 7), seed=st.integers(0, 10_000))
def test_segment_means_agree(T, D, K, seed):
    frames = np.random.default_rng(seed).standard_normal((T, D))
    starts = np.arange(0, T, K, dtype=np.int64)
    a = NB["segment_means"](frames, starts)
    b = NP["segment_means"](frames, starts)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 4), max_size=10), st.lists(st.integers(0, 4), max_size=10))
def test_edit_counts_agree(ref, hyp):
    r = np.array(ref, dtype=np.int64)
    h = np.array(hyp, dtype=np.int64)
    assert tuple(NB["edit_counts"](r, h)) == tuple(NP["edit_counts"](r, h))


def test_single_frame_segments_copy_bits():
    frames = np.array([[-0.0, 1.5], [np.pi, -2.25]])
    starts = np.array([0, 1], dtype=np.int64)
    for impl in (NB, NP):
        out = impl["segment_means"](frames, starts)
        assert out.tobytes() == frames.tobytes()


def test_backend_flag(monkeypatch):
    import importlib

    from tokcomp import _accel

    monkeypatch.setenv("TOKCOMP_DISABLE_NUMBA", "1")
    try:
        importlib.reload(_accel)
        assert _accel.BACKEND == "numpy"
        monkeypatch.setenv("TOKCOMP_DISABLE_NUMBA", "0")
        importlib.reload(_accel)
        assert _accel.BACKEND == "numba"
    finally:
        monkeypatch.delenv("TOKCOMP_DISABLE_NUMBA")
        importlib.reload(_accel)
