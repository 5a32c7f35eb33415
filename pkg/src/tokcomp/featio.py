"""Feature-sequence data model and the ATCF v1 binary container.

ATCF v1 layout (all little-endian)::

    0-3    magic b"ATCF"
    4-5    version u16 (= 1)
    6-7    reserved u16 (= 0)
    8-11   T u32 (frames)
    12-15  D u32 (feature dimension)
    16-19  frame_rate f32 (frames per second)
    20-    T*D f32 values, row-major, frame 0 first

Utterance text files hold one ``<id>\\t<space separated tokens>`` per line.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Optional, TextIO

import numpy as np

MAGIC = b"ATCF"
VERSION = 1
HEADER = struct.Struct("<4sHHIIf")
HEADER_SIZE = HEADER.size  # 20
_F32 = np.dtype("<f4")


class FeatioError(ValueError):
    """Base class for malformed feature or utterance data."""


class BadMagicError(FeatioError):
    pass


class UnsupportedVersionError(FeatioError):
    pass


class PayloadLengthError(FeatioError):
    """Declared T*D disagrees with the bytes actually present."""


class TruncatedPayloadError(PayloadLengthError):
    pass


class NonFiniteError(FeatioError):
    pass


class EmptySequenceError(FeatioError):
    pass


class MalformedLineError(FeatioError):
    pass


class DuplicateIdError(FeatioError):
    pass


@dataclass(frozen=True)
class FeatureSequence:
    """A ``T x D`` matrix of encoder frames plus its frame rate.

    ``frames`` is stored as a read-only float64 array.
    """

    frames: np.ndarray
    frame_rate: float
    source_id: Optional[str] = None

    def __post_init__(self):
        arr = np.array(self.frames, dtype=np.float64, order="C", copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError(f"frames must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise EmptySequenceError(f"need T >= 1 and D >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("frames contain NaN or Inf")
        rate = float(self.frame_rate)
        if not (np.isfinite(rate) and rate > 0):
            raise ValueError(f"frame_rate must be positive and finite, got {self.frame_rate!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)
        object.__setattr__(self, "frame_rate", rate)

    @property
    def T(self) -> int:
        return self.frames.shape[0]

    @property
    def D(self) -> int:
        return self.frames.shape[1]

    @property
    def duration(self) -> float:
        """Seconds of audio covered, ``T / frame_rate``."""
        return self.T / self.frame_rate

    def with_frames(self, frames, frame_rate: float) -> "FeatureSequence":
        return FeatureSequence(frames, frame_rate, self.source_id)


@dataclass(frozen=True)
class Utterance:
    id: str
    tokens: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.id:
            raise ValueError("utterance id must be non-empty")
        object.__setattr__(self, "tokens", tuple(self.tokens))


def write_features(seq: FeatureSequence, sink: BinaryIO) -> int:
    """Write ``seq`` to ``sink`` as ATCF v1 and return the number of bytes written."""
    with np.errstate(over="ignore"):
        payload = seq.frames.astype(_F32)
    if not np.all(np.isfinite(payload)):
        raise NonFiniteError("value overflows float32")
    rate = np.float32(seq.frame_rate)
    if not (np.isfinite(rate) and rate > 0):
        raise NonFiniteError("frame_rate not representable as float32")
    header = HEADER.pack(MAGIC, VERSION, 0, seq.T, seq.D, float(rate))
    body = payload.tobytes(order="C")
    sink.write(header)
    sink.write(body)
    return len(header) + len(body)


def read_header(source: BinaryIO) -> dict:
    raw = source.read(HEADER_SIZE)
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}")
    if len(raw) < HEADER_SIZE:
        raise TruncatedPayloadError(f"header truncated at {len(raw)} bytes")
    _, version, reserved, T, D, rate = HEADER.unpack(raw)
    if version != VERSION:
        raise UnsupportedVersionError(f"ATCF version {version} not supported")
    return {"version": version, "reserved": reserved, "T": T, "D": D, "frame_rate": rate}


def read_features(source: BinaryIO, source_id: Optional[str] = None) -> FeatureSequence:
    hdr = read_header(source)
    T, D = hdr["T"], hdr["D"]
    if T == 0 or D == 0:
        raise EmptySequenceError(f"declared T={T}, D={D}")
    want = 4 * T * D
    body = source.read(want)
    if len(body) < want:
        raise TruncatedPayloadError(f"payload has {len(body)} bytes, header declares {want}")
    if source.read(1):
        raise PayloadLengthError(f"trailing bytes after the declared {want}-byte payload")
    frames = np.frombuffer(body, dtype=_F32).reshape(T, D)
    if not np.all(np.isfinite(frames)):
        raise NonFiniteError("payload contains NaN or Inf")
    rate = hdr["frame_rate"]
    if not (np.isfinite(rate) and rate > 0):
        raise FeatioError(f"frame_rate {rate} in header is not positive")
    return FeatureSequence(frames, rate, source_id)


def save_features(seq: FeatureSequence, path) -> int:
    with open(path, "wb") as fh:
        return write_features(seq, fh)


def load_features(path) -> FeatureSequence:
    path = Path(path)
    with open(path, "rb") as fh:
        return read_features(fh, source_id=path.stem)


def to_bytes(seq: FeatureSequence) -> bytes:
    buf = io.BytesIO()
    write_features(seq, buf)
    return buf.getvalue()


def from_bytes(data: bytes) -> FeatureSequence:
    return read_features(io.BytesIO(data))


def read_utterances(source: TextIO) -> list[Utterance]:
    utts = []
    seen = set()
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        if "\t" not in line:
            raise MalformedLineError(f"line {lineno}: missing TAB between id and tokens")
        uid, text = line.split("\t", 1)
        if not uid:
            raise MalformedLineError(f"line {lineno}: empty id")
        if uid in seen:
            raise DuplicateIdError(f"line {lineno}: duplicate id {uid!r}")
        seen.add(uid)
        utts.append(Utterance(uid, text.split()))
    return utts


def format_utterances(utts: Iterable[Utterance]) -> str:
    return "".join(f"{u.id}\t{' '.join(u.tokens)}\n" for u in utts)


def load_utterances(path) -> list[Utterance]:
    with open(path, encoding="utf-8", newline="") as fh:
        return read_utterances(fh)
