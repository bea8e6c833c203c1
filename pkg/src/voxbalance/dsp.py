"""Framing, windowing, magnitude spectra and per-frame amplitude features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .audio_io import AudioClip
from .errors import InvalidConfig

RECTANGULAR = "rectangular"
HANN = "hann"
WINDOWS = (RECTANGULAR, HANN)


@dataclass(frozen=True)
class FrameParams:
    frame_len: int
    hop: int
    window: str = HANN

    def __post_init__(self):
        if self.frame_len < 2:
            raise InvalidConfig(f"frame_len must be >= 2, got {self.frame_len}")
        if not 0 < self.hop <= self.frame_len:
            raise InvalidConfig(f"hop must satisfy 0 < hop <= frame_len, got {self.hop}")
        if self.window not in WINDOWS:
            raise InvalidConfig(f"unknown window {self.window!r}")

    @classmethod
    def from_ms(cls, sample_rate: int, frame_ms: float = 25.0, hop_ms: float = 10.0,
                window: str = HANN) -> "FrameParams":
        return cls(int(round(sample_rate * frame_ms / 1000)),
                   int(round(sample_rate * hop_ms / 1000)), window)


@dataclass(frozen=True)
class Spectrogram:
    magnitudes: np.ndarray  # (frames, frame_len // 2 + 1)
    bin_hz: float
    params: FrameParams

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    def peak_bins(self) -> np.ndarray:
        return np.argmax(self.magnitudes, axis=1)


@dataclass(frozen=True)
class TimeFeatures:
    rms: np.ndarray
    peak: np.ndarray


def window(name: str, n: int) -> np.ndarray:
    if name == RECTANGULAR:
        return np.ones(n)
    if name == HANN:
        # periodic Hann: overlap-adds to a constant at hop = n/2
        return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    raise InvalidConfig(f"unknown window {name!r}")


def n_frames(length: int, frame_len: int, hop: int) -> int:
    if length < frame_len:
        return 0
    return (length - frame_len) // hop + 1


def frame_array(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Strided ``(n_frames, frame_len)`` view of ``x``; trailing partial frames are dropped."""
    x = np.asarray(x)
    if len(x) < frame_len:
        return np.zeros((0, frame_len), dtype=x.dtype)
    return sliding_window_view(x, frame_len)[::hop]


def frame_signal(clip: AudioClip, params: FrameParams) -> np.ndarray:
    return frame_array(clip.mono, params.frame_len, params.hop)


def dft_magnitude(frame, window_name: str = RECTANGULAR) -> np.ndarray:
    """``|X_k|`` for ``k = 0 .. N//2`` of the windowed real frame."""
    x = np.asarray(frame, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise InvalidConfig("frame must be 1-D with at least 2 samples")
    if window_name != RECTANGULAR:
        x = x * window(window_name, len(x))
    return np.abs(np.fft.rfft(x))


def spectrogram(clip: AudioClip, params: FrameParams) -> Spectrogram:
    frames = frame_signal(clip, params)
    mags = np.abs(np.fft.rfft(frames * window(params.window, params.frame_len), axis=1))
    if mags.shape[0] == 0:
        mags = np.zeros((0, params.frame_len // 2 + 1))
    return Spectrogram(mags, clip.sample_rate / params.frame_len, params)


def time_features(clip: AudioClip, params: FrameParams) -> TimeFeatures:
    frames = frame_signal(clip, params)
    if frames.shape[0] == 0:
        return TimeFeatures(np.zeros(0), np.zeros(0))
    rms = np.sqrt(np.mean(frames ** 2, axis=1))
    peak = np.max(np.abs(frames), axis=1)
    # rounding can push rms a hair above peak for constant frames
    return TimeFeatures(np.minimum(rms, peak), peak)


def peak_frequency(x: np.ndarray, sample_rate: int) -> float:
    """Frequency of the strongest bin of a Hann-windowed spectrum, refined by
    parabolic interpolation on log magnitudes."""
    x = np.asarray(x, dtype=np.float64)
    mags = dft_magnitude(x, HANN)
    k = int(np.argmax(mags))
    if 0 < k < len(mags) - 1:
        a, b, c = np.log(mags[k - 1:k + 2] + 1e-300)
        denom = a - 2 * b + c
        if denom != 0:
            k = k + 0.5 * (a - c) / denom
    return k * sample_rate / len(x)
