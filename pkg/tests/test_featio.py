import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tokcomp.featio import (
    BadMagicError,
    DuplicateIdError,
    EmptySequenceError,
    FeatureSequence,
    MalformedLineError,
    NonFiniteError,
    PayloadLengthError,
    TruncatedPayloadError,
    UnsupportedVersionError,
    Utterance,
    format_utterances,
    from_bytes,
    read_features,
    read_utterances,
    to_bytes,
    write_features,
)


def test_single_zero_frame_golden_bytes():
    buf = io.BytesIO()
    n = write_features(FeatureSequence([[0.0]], 25.0), buf)
    data = buf.getvalue()
    assert n == len(data) == 24
    assert data == b"ATCF" + bytes([1, 0, 0, 0]) + bytes([1, 0, 0, 0]) + bytes([1, 0, 0, 0]) \
        + bytes.fromhex("0000c841") + bytes(4)
    assert data[20:] == b"\x00\x00\x00\x00"


def test_size_formula_t3_d128():
    seq = FeatureSequence(np.ones((3, 128)), 50.0)
    assert len(to_bytes(seq)) == 20 + 4 * 384 == 1556


def test_round_trip_bit_exact(rng):
    frames = rng.standard_normal((7, 5)).astype(np.float32)
    back = from_bytes(to_bytes(FeatureSequence(frames, 12.5, "x")))
    assert back.frames.astype(np.float32).tobytes() == frames.tobytes()
    assert back.frame_rate == 12.5


def test_negative_zero_survives():
    back = from_bytes(to_bytes(FeatureSequence([[-0.0, 1.0]], 25.0)))
    assert np.signbit(back.frames[0, 0])


def _header(T, D, rate=25.0, magic=b"ATCF", version=1):
    return struct.pack("<4sHHIIf", magic, version, 0, T, D, rate)


def test_bad_magic():
    with pytest.raises(BadMagicError):
        read_features(io.BytesIO(_header(1, 1, magic=b"XXXX") + bytes(4)))


def test_unsupported_version():
    with pytest.raises(UnsupportedVersionError):
        read_features(io.BytesIO(_header(1, 1, version=2) + bytes(4)))


def test_truncated_payload():
    with pytest.raises(TruncatedPayloadError):
        read_features(io.BytesIO(_header(2, 2) + bytes(12)))


def test_trailing_bytes_rejected():
    with pytest.raises(PayloadLengthError):
        read_features(io.BytesIO(_header(1, 1) + bytes(8)))


@pytest.mark.parametrize("T,D", [(0, 3), (3, 0)])
def test_empty_declared(T, D):
    with pytest.raises(EmptySequenceError):
        read_features(io.BytesIO(_header(T, D)))


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_payload(bad):
    payload = np.array([1.0, bad], dtype="<f4").tobytes()
    with pytest.raises(NonFiniteError):
        read_features(io.BytesIO(_header(1, 2) + payload))


def test_constructor_invariants():
    with pytest.raises(NonFiniteError):
        FeatureSequence([[np.nan]], 25.0)
    with pytest.raises(ValueError):
        FeatureSequence([[1.0]], 0.0)
    with pytest.raises(EmptySequenceError):
        FeatureSequence(np.zeros((0, 3)), 25.0)


def test_write_rejects_float32_overflow():
    with pytest.raises(NonFiniteError):
        write_features(FeatureSequence([[1e300]], 25.0), io.BytesIO())


def test_frames_are_read_only():
    seq = FeatureSequence([[1.0, 2.0]], 25.0)
    with pytest.raises(ValueError):
        seq.frames[0, 0] = 3.0


@settings(max_examples=50, deadline=None)
@given(
    T=st.integers(1, 12),
    D=st.integers(1, 6),
    seed=st.integers(0, 2**32 - 1),
    rate=st.floats(0.5, 200.0, width=32),
)
def test_round_trip_property(T, D, seed, rate):
    frames = np.random.default_rng(seed).standard_normal((T, D)).astype(np.float32)
    data = to_bytes(FeatureSequence(frames, rate))
    assert len(data) == 20 + 4 * T * D
    back = from_bytes(data)
    assert back.frames.astype(np.float32).tobytes() == frames.tobytes()
    assert back.frame_rate == rate


def test_read_utterances_basic():
    utts = read_utterances(io.StringIO("u1\thello world\n\n   \nu2\t\n"))
    assert utts == [Utterance("u1", ["hello", "world"]), Utterance("u2", [])]


def test_read_utterances_missing_tab():
    with pytest.raises(MalformedLineError):
        read_utterances(io.StringIO("u1 hello\n"))


def test_read_utterances_duplicate():
    with pytest.raises(DuplicateIdError):
        read_utterances(io.StringIO("u1\ta\nu1\tb\n"))


@given(st.lists(
    st.tuples(
        st.text("abcxyz0123", min_size=1, max_size=5),
        st.lists(st.text("abcdé中", min_size=1, max_size=4), max_size=5),
    ),
    max_size=6,
    unique_by=lambda x: x[0],
))
def test_utterance_format_round_trip(items):
    utts = [Utterance(i, toks) for i, toks in items]
    assert read_utterances(io.StringIO(format_utterances(utts))) == utts
