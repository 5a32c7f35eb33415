"""Log-mel front end used as a stand-in feature source.

16 kHz input, Hann window, HTK mel scale, power spectrum, followed by a
stride-``pool_rate`` average pool.  These are not encoder embeddings, only a
realistic signal to feed the compressors.
"""
from __future__ import annotations

import wave
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from tokcomp.compress import uniform_avg_pool
from tokcomp.featio import FeatureSequence

SAMPLE_RATE = 16000


@dataclass(frozen=True)
class MelConfig:
    sample_rate: int = SAMPLE_RATE
    window: float = 0.025
    hop: float = 0.010
    n_mels: int = 128
    pool_rate: int = 2
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.sample_rate != SAMPLE_RATE:
            raise ValueError(f"sample_rate is fixed at {SAMPLE_RATE} Hz")
        if not (self.window > self.hop > 0):
            raise ValueError("need window > hop > 0")
        if self.n_mels < 1 or self.pool_rate < 1:
            raise ValueError("n_mels and pool_rate must be >= 1")
        if not self.log_floor > 0:
            raise ValueError("log_floor must be positive")

    @property
    def win_samples(self) -> int:
        return int(round(self.window * self.sample_rate))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop * self.sample_rate))

    @property
    def n_fft(self) -> int:
        return 1 << (self.win_samples - 1).bit_length()


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def hann(n: int) -> np.ndarray:
    """Periodic Hann window of length ``n``."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def band_edges(n_mels: int, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """``n_mels + 2`` HTK-mel-spaced edge frequencies from 0 Hz to Nyquist."""
    top = hz_to_mel(sample_rate / 2.0)
    return mel_to_hz(np.linspace(0.0, top, n_mels + 2))


def _triangle_cdf(f, lo, mid, hi):
    # running integral of the unit-height triangle on [lo, hi] peaking at mid
    f = np.clip(f, lo, hi)
    rise = (np.minimum(f, mid) - lo) ** 2 / (2.0 * (mid - lo))
    tail = np.maximum(f - mid, 0.0)
    fall = ((hi - mid) ** 2 - (hi - mid - tail) ** 2) / (2.0 * (hi - mid))
    return rise + fall


@lru_cache(maxsize=8)
def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """``(n_mels, n_fft // 2 + 1)`` triangular filterbank.

    Each weight is the triangle's average over the frequency cell of that FFT
    bin rather than its value at the bin centre.  With 128 bands and a 512
    point FFT the lowest triangles are narrower than one bin, and point
    sampling would leave them empty.
    """
    edges = band_edges(n_mels, sample_rate)
    df = sample_rate / n_fft
    centers = np.arange(n_fft // 2 + 1) * df
    cell_lo = np.maximum(centers - df / 2.0, 0.0)
    cell_hi = np.minimum(centers + df / 2.0, sample_rate / 2.0)
    fb = np.empty((n_mels, centers.size))
    for m in range(n_mels):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        fb[m] = (_triangle_cdf(cell_hi, lo, mid, hi) - _triangle_cdf(cell_lo, lo, mid, hi)) / df
    fb.setflags(write=False)
    return fb


def frame_count(n_samples: int, cfg: MelConfig) -> int:
    return (n_samples - cfg.win_samples) // cfg.hop_samples + 1


def power_spectrum(audio, cfg: MelConfig) -> np.ndarray:
    audio = np.asarray(audio, dtype=np.float64)
    win, hop = cfg.win_samples, cfg.hop_samples
    T = frame_count(audio.shape[0], cfg)
    idx = np.arange(win)[None, :] + hop * np.arange(T)[:, None]
    frames = audio[idx] * hann(win)
    return np.abs(np.fft.rfft(frames, n=cfg.n_fft, axis=1)) ** 2


def mel_spectrogram(audio, cfg: MelConfig = MelConfig(), sample_rate: int = SAMPLE_RATE,
                    source_id=None) -> FeatureSequence:
    if sample_rate != cfg.sample_rate:
        raise ValueError(f"audio must be {cfg.sample_rate} Hz, got {sample_rate} Hz; resample upstream")
    audio = np.asarray(audio, dtype=np.float64)
    if audio.ndim != 1:
        raise ValueError("audio must be mono (1-D)")
    if audio.shape[0] < cfg.win_samples:
        raise ValueError(f"audio has {audio.shape[0]} samples, shorter than one {cfg.win_samples}-sample window")
    spec = power_spectrum(audio, cfg)
    mel = spec @ mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate).T
    return FeatureSequence(np.log(mel + cfg.log_floor), cfg.sample_rate / cfg.hop_samples, source_id)


def encoder_pool(seq: FeatureSequence, rate: int) -> FeatureSequence:
    return uniform_avg_pool(seq, rate).compressed


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a mono 16-bit PCM WAV file as float samples in [-1, 1)."""
    with wave.open(str(path), "rb") as wf:
        if wf.getnchannels() != 1:
            raise ValueError(f"{path}: expected mono, got {wf.getnchannels()} channels")
        if wf.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit PCM, got {8 * wf.getsampwidth()}-bit")
        rate = wf.getframerate()
        raw = wf.readframes(wf.getnframes())
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0, rate


def write_wav(path, audio, sample_rate: int = SAMPLE_RATE) -> None:
    pcm = np.clip(np.round(np.asarray(audio) * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())


def wav_to_features(path, cfg: MelConfig = MelConfig(), pool: bool = True) -> FeatureSequence:
    audio, rate = read_wav(path)
    seq = mel_spectrogram(audio, cfg, rate, source_id=getattr(path, "stem", None))
    return encoder_pool(seq, cfg.pool_rate) if pool else seq
