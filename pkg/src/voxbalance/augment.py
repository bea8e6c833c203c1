"""Waveform augmentations: pitch shift, time stretch, noise injection, reverb.

Every operation is a pure function of ``(clip, params, seed)``. Randomness
comes only from ``numpy.random.default_rng(seed)``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .audio_io import AudioClip, resample_array
from .dsp import HANN, window
from .errors import (
    InvalidAugmentSpec,
    InvalidRate,
    InvalidRT60,
    InvalidShift,
    UndefinedSNR,
)

PITCH_SHIFT = "pitch_shift"
TIME_STRETCH = "time_stretch"
NOISE = "noise"
REVERB = "reverb"

_PARAMS = {
    PITCH_SHIFT: ("semitones",),
    TIME_STRETCH: ("rate",),
    NOISE: ("snr_db",),
    REVERB: ("rt60", "wet"),
}

MIN_STRETCH, MAX_STRETCH = 0.25, 4.0
MAX_SEMITONES = 12.0
SEGMENT_MS = 30.0
SEARCH_MS = 10.0
_UINT64 = 2 ** 64


def derive_seed(base: int, *parts) -> int:
    """Stable 64-bit seed from a base seed and any mix of ints and strings."""
    words = [int(base) % _UINT64]
    for p in parts:
        if isinstance(p, (int, np.integer)):
            words.append(int(p) % _UINT64)
        else:
            digest = hashlib.sha256(str(p).encode("utf-8")).digest()
            words.append(int.from_bytes(digest[:8], "little"))
    state = np.random.SeedSequence(words).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def _check_stretch(rate: float) -> None:
    if not MIN_STRETCH <= rate <= MAX_STRETCH:
        raise InvalidRate(f"stretch rate {rate} outside [{MIN_STRETCH}, {MAX_STRETCH}]")


def _check_shift(semitones: float) -> None:
    if not -MAX_SEMITONES <= semitones <= MAX_SEMITONES:
        raise InvalidShift(f"{semitones} semitones outside [-12, 12]")


def inject_noise(clip: AudioClip, snr_db: float, seed: int) -> AudioClip:
    """Add white Gaussian noise at exactly ``snr_db`` (before clamping)."""
    x = clip.samples
    p_signal = float(np.mean(x ** 2)) if x.size else 0.0
    if p_signal == 0.0:
        raise UndefinedSNR("input has zero signal power")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(x.shape)
    p_noise = p_signal / 10.0 ** (snr_db / 10.0)
    g *= np.sqrt(p_noise / np.mean(g ** 2))
    return AudioClip.from_array(x + g, clip.sample_rate)


def wsola(x: np.ndarray, rate: float, sample_rate: int,
          segment_ms: float = SEGMENT_MS, search_ms: float = SEARCH_MS) -> np.ndarray:
    """Waveform-similarity overlap-add. Output length is ``round(len(x) / rate)``."""
    x = np.asarray(x, dtype=np.float64)
    n_out = int(round(len(x) / rate))
    if rate == 1.0:
        return x.copy()
    seg = max(4, 2 * int(round(segment_ms * sample_rate / 2000)))
    hop = seg // 2
    tol = int(round(search_ms * sample_rate / 1000))
    win = window(HANN, seg)

    n_frames = (hop + n_out) // hop + 2
    pad = tol + seg
    last_nominal = int(round((n_frames - 1) * hop * rate))
    tail = max(0, last_nominal + 2 * pad + seg - len(x))
    xp = np.concatenate([np.zeros(pad), x, np.zeros(tail + pad)])

    out = np.zeros(n_frames * hop + seg)
    wsum = np.zeros_like(out)
    prev = None
    for k in range(n_frames):
        nominal = pad + int(round(k * hop * rate)) - hop
        start = nominal
        if prev is not None:
            template = xp[prev + hop:prev + hop + seg]
            region = xp[nominal - tol:nominal + tol + seg]
            corr = np.correlate(region, template, mode="valid")
            if np.max(corr) > 0:
                start = nominal - tol + int(np.argmax(corr))
        out[k * hop:k * hop + seg] += win * xp[start:start + seg]
        wsum[k * hop:k * hop + seg] += win
        prev = start
    y = out[hop:hop + n_out]
    w = wsum[hop:hop + n_out]
    return np.where(w > 1e-8, y / np.where(w > 1e-8, w, 1.0), 0.0)


def time_stretch(clip: AudioClip, rate: float, seed: int | None = None) -> AudioClip:
    """Change duration by ``1/rate`` while keeping pitch (WSOLA).

    ``seed`` is accepted for a uniform signature; the method is deterministic.
    """
    _check_stretch(rate)
    rows = [wsola(ch, rate, clip.sample_rate) for ch in clip.samples]
    return AudioClip.from_array(np.vstack(rows), clip.sample_rate)


def pitch_shift(clip: AudioClip, semitones: float, seed: int | None = None) -> AudioClip:
    """Shift pitch by resampling then time-stretching back to the original length."""
    _check_shift(semitones)
    if semitones == 0:
        return clip
    factor = 2.0 ** (semitones / 12.0)
    n = clip.n_samples
    rows = []
    for ch in clip.samples:
        squeezed = resample_array(ch, 1.0 / factor)
        y = wsola(squeezed, 1.0 / factor, clip.sample_rate) if len(squeezed) else squeezed
        y = y[:n] if len(y) >= n else np.pad(y, (0, n - len(y)))
        rows.append(y)
    return AudioClip.from_array(np.vstack(rows), clip.sample_rate)


def impulse_response(rt60: float, sample_rate: int, seed: int) -> np.ndarray:
    """Seeded white noise under an exponential envelope that is 60 dB down at ``rt60``.

    The response spans ``[0, rt60]`` inclusive and is scaled to unit peak.
    """
    if not rt60 > 0:
        raise InvalidRT60(f"rt60 must be positive, got {rt60}")
    n = int(np.floor(rt60 * sample_rate)) + 1
    t = np.arange(n) / sample_rate
    envelope = 10.0 ** (-3.0 * t / rt60)
    ir = np.random.default_rng(seed).standard_normal(n) * envelope
    return ir / np.max(np.abs(ir))


def add_reverb(clip: AudioClip, rt60: float, wet: float, seed: int) -> AudioClip:
    """Mix the dry signal with its convolution by a synthetic room response."""
    if not 0.0 <= wet <= 1.0:
        raise InvalidAugmentSpec(f"wet must be in [0, 1], got {wet}")
    ir = impulse_response(rt60, clip.sample_rate, seed)
    n_out = clip.n_samples + len(ir) - 1
    out = np.zeros((clip.channels, n_out))
    for c, ch in enumerate(clip.samples):
        if wet > 0 and len(ch):
            out[c] = wet * fftconvolve(ch, ir)
        out[c, :clip.n_samples] += (1.0 - wet) * ch
    peak = np.max(np.abs(out)) if out.size else 0.0
    if peak > 1.0:
        out /= peak
    return AudioClip.from_array(out, clip.sample_rate)


@dataclass(frozen=True)
class AugmentSpec:
    """One augmentation with its parameters and seed; JSON form ``{op, params, seed}``."""

    op: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.op not in _PARAMS:
            raise InvalidAugmentSpec(f"unknown op {self.op!r}")
        if set(self.params) != set(_PARAMS[self.op]):
            raise InvalidAugmentSpec(
                f"{self.op} takes params {list(_PARAMS[self.op])}, got {sorted(self.params)}")
        if not 0 <= int(self.seed) < _UINT64:
            raise InvalidAugmentSpec(f"seed {self.seed} is not a 64-bit unsigned integer")
        params = {k: float(v) for k, v in self.params.items()}
        if self.op == PITCH_SHIFT:
            _check_shift(params["semitones"])
        elif self.op == TIME_STRETCH:
            _check_stretch(params["rate"])
        elif self.op == REVERB:
            if not params["rt60"] > 0:
                raise InvalidRT60(f"rt60 must be positive, got {params['rt60']}")
            if not 0.0 <= params["wet"] <= 1.0:
                raise InvalidAugmentSpec(f"wet must be in [0, 1], got {params['wet']}")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "seed", int(self.seed))

    def apply(self, clip: AudioClip) -> AudioClip:
        p = self.params
        if self.op == PITCH_SHIFT:
            return pitch_shift(clip, p["semitones"], self.seed)
        if self.op == TIME_STRETCH:
            return time_stretch(clip, p["rate"], self.seed)
        if self.op == NOISE:
            return inject_noise(clip, p["snr_db"], self.seed)
        return add_reverb(clip, p["rt60"], p["wet"], self.seed)

    def to_dict(self) -> dict:
        return {"op": self.op, "params": dict(sorted(self.params.items())), "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentSpec":
        try:
            return cls(d["op"], dict(d["params"]), int(d["seed"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidAugmentSpec(f"bad spec object {d!r}") from exc

    @classmethod
    def from_json(cls, text: str) -> "AugmentSpec":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InvalidAugmentSpec(f"invalid JSON: {exc}") from exc
