"""Autocorrelation pitch tracking and pitch-band gender labelling.

The band heuristic uses the ASHA average speaking ranges: adult men
85-155 Hz, adult women 165-255 Hz. A clip is labelled by the median F0
of its voiced frames; medians outside both bands are left unclassified.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .audio_io import AudioClip, mixdown
from .dsp import FrameParams, frame_array
from .errors import EmptyEvaluation, InvalidConfig


class BandLabel(str, enum.Enum):
    MALE = "male"
    FEMALE = "female"
    UNCLASSIFIED = "unclassified"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PitchConfig:
    f0_min: float = 60.0
    f0_max: float = 400.0
    voicing_rms_floor: float = 0.01
    clarity_floor: float = 0.3
    # When ``frame`` is None the frame grid is frame_ms/hop_ms at the clip's rate.
    frame_ms: float = 40.0
    hop_ms: float = 10.0
    frame: FrameParams | None = None
    # Earliest autocorrelation peak within this fraction of the best one wins;
    # guards against picking a multiple of the true period.
    octave_tolerance: float = 0.9

    def __post_init__(self):
        if not 0 < self.f0_min < self.f0_max:
            raise InvalidConfig(f"need 0 < f0_min < f0_max, got {self.f0_min}, {self.f0_max}")
        if self.voicing_rms_floor < 0 or not 0 <= self.clarity_floor <= 1:
            raise InvalidConfig("voicing floors out of range")
        if not 0 < self.octave_tolerance <= 1:
            raise InvalidConfig("octave_tolerance must be in (0, 1]")

    def frame_params(self, sample_rate: int) -> FrameParams:
        if self.frame is not None:
            return self.frame
        return FrameParams.from_ms(sample_rate, self.frame_ms, self.hop_ms, window="rectangular")

    def lag_range(self, sample_rate: int) -> tuple[int, int]:
        if not self.f0_max < sample_rate / 2 or sample_rate < 4 * self.f0_max:
            raise InvalidConfig(
                f"sample rate {sample_rate} Hz too low for f0_max {self.f0_max} Hz")
        lo = max(1, int(np.floor(sample_rate / self.f0_max)))
        hi = int(np.ceil(sample_rate / self.f0_min))
        if hi + 2 > self.frame_params(sample_rate).frame_len:
            raise InvalidConfig(
                f"frame too short for f0_min {self.f0_min} Hz at {sample_rate} Hz")
        return lo, hi


@dataclass(frozen=True)
class PitchTrack:
    f0: np.ndarray  # Hz, NaN where unvoiced
    clarity: np.ndarray
    hop_s: float

    @property
    def voiced(self) -> np.ndarray:
        return ~np.isnan(self.f0)

    @property
    def n_voiced(self) -> int:
        return int(np.count_nonzero(self.voiced))

    def median_f0(self) -> float | None:
        if self.n_voiced == 0:
            return None
        return float(np.median(self.f0[self.voiced]))


@dataclass(frozen=True)
class GenderBands:
    male: tuple[float, float] = (85.0, 155.0)
    female: tuple[float, float] = (165.0, 255.0)

    def __post_init__(self):
        (m0, m1), (f0, f1) = self.male, self.female
        if not (m0 < m1 and f0 < f1):
            raise InvalidConfig("bands must have positive width")
        if not (m1 < f0 or f1 < m0):
            raise InvalidConfig("male and female bands overlap")

    @classmethod
    def parse(cls, text: str) -> "GenderBands":
        """Parse ``"male=85:155,female=165:255"``."""
        bands = {}
        try:
            for part in text.split(","):
                name, rng = part.split("=")
                lo, hi = rng.split(":")
                bands[name.strip().lower()] = (float(lo), float(hi))
        except ValueError as exc:
            raise InvalidConfig(f"bad band spec {text!r}") from exc
        if set(bands) != {"male", "female"}:
            raise InvalidConfig(f"band spec must name exactly male and female: {text!r}")
        return cls(male=bands["male"], female=bands["female"])

    def label(self, f0: float | None) -> BandLabel:
        if f0 is None or np.isnan(f0):
            return BandLabel.UNCLASSIFIED
        if self.male[0] <= f0 <= self.male[1]:
            return BandLabel.MALE
        if self.female[0] <= f0 <= self.female[1]:
            return BandLabel.FEMALE
        return BandLabel.UNCLASSIFIED

    def to_dict(self) -> dict:
        return {"male": list(self.male), "female": list(self.female)}

    def to_spec(self) -> str:
        """Inverse of :meth:`parse`."""
        return ",".join(f"{name}={lo!r}:{hi!r}" for name, (lo, hi) in
                        (("male", self.male), ("female", self.female)))


def normalized_autocorrelation(frames: np.ndarray, max_lag: int) -> np.ndarray:
    """Normalized cross-correlation of each frame with its lagged self.

    ``r[f, tau] = sum x[n] x[n+tau] / sqrt(sum x[n]^2 * sum x[n+tau]^2)`` over
    the overlapping part, for ``tau = 0 .. max_lag``.
    """
    frames = np.asarray(frames, dtype=np.float64)
    n = frames.shape[1]
    spec = np.fft.rfft(frames, 2 * n, axis=1)
    acf = np.fft.irfft(spec * np.conj(spec), 2 * n, axis=1)[:, :max_lag + 1]
    c = np.concatenate([np.zeros((frames.shape[0], 1)), np.cumsum(frames ** 2, axis=1)], axis=1)
    lags = np.arange(max_lag + 1)
    head = c[:, n - lags]  # energy of x[0 : n - tau]
    tail = c[:, [n]] - c[:, lags]  # energy of x[tau : n]
    denom = np.sqrt(head * tail)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > 1e-12, acf / denom, 0.0)
    return r


def _pick_lag(r: np.ndarray, lo: int, hi: int, tolerance: float) -> tuple[float, float] | None:
    """Fractional lag and peak value of the chosen autocorrelation maximum."""
    seg = r[lo - 1:hi + 2]
    inner = seg[1:-1]
    is_peak = (inner >= seg[:-2]) & (inner > seg[2:])
    peaks = np.flatnonzero(is_peak)
    if len(peaks) == 0:
        return None
    best = inner[peaks].max()
    if best <= 0:
        return None
    i = peaks[np.argmax(inner[peaks] >= tolerance * best)]
    a, b, c = seg[i], seg[i + 1], seg[i + 2]
    denom = a - 2 * b + c
    shift = 0.5 * (a - c) / denom if denom < 0 else 0.0
    peak = b - 0.25 * (a - c) * shift
    return lo + i + shift, float(peak)


def estimate_pitch(clip: AudioClip, cfg: PitchConfig | None = None) -> PitchTrack:
    """Per-frame F0 by normalized autocorrelation with parabolic peak refinement.

    A frame is voiced when its RMS reaches ``voicing_rms_floor`` and the
    chosen autocorrelation peak reaches ``clarity_floor``.
    """
    cfg = cfg or PitchConfig()
    rate = clip.sample_rate
    lo, hi = cfg.lag_range(rate)
    params = cfg.frame_params(rate)
    frames = frame_array(clip.mono, params.frame_len, params.hop)
    hop_s = params.hop / rate
    if frames.shape[0] == 0:
        return PitchTrack(np.zeros(0), np.zeros(0), hop_s)

    r = normalized_autocorrelation(frames, hi + 1)
    rms = np.sqrt(np.mean(frames ** 2, axis=1))
    f0 = np.full(frames.shape[0], np.nan)
    clarity = np.zeros(frames.shape[0])
    for k in range(frames.shape[0]):
        picked = _pick_lag(r[k], lo, hi, cfg.octave_tolerance)
        if picked is None:
            continue
        lag, peak = picked
        clarity[k] = min(max(peak, 0.0), 1.0)
        freq = rate / lag
        if (rms[k] >= cfg.voicing_rms_floor and clarity[k] >= cfg.clarity_floor
                and cfg.f0_min <= freq <= cfg.f0_max):
            f0[k] = freq
    return PitchTrack(f0, clarity, hop_s)


def classify_band(track: PitchTrack, bands: GenderBands | None = None) -> tuple[BandLabel, float | None]:
    bands = bands or GenderBands()
    median = track.median_f0()
    return bands.label(median), median


def classify_clip(clip: AudioClip, cfg: PitchConfig | None = None,
                  bands: GenderBands | None = None) -> tuple[BandLabel, float | None]:
    return classify_band(estimate_pitch(mixdown(clip), cfg), bands)


@dataclass
class ClassifierReport:
    total: int
    correct: int
    confusion: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "confusion": self.confusion,
        }


def _as_label(value) -> str:
    return value.value if isinstance(value, BandLabel) else str(value).strip().lower()


def evaluate_classifier(pairs) -> ClassifierReport:
    """Accuracy and confusion counts from ``(true_label, predicted_label)`` pairs.

    A prediction is correct when its label name equals the true gender.
    """
    counts = Counter((_as_label(t), _as_label(p)) for t, p in pairs)
    if not counts:
        raise EmptyEvaluation("no labelled pairs")
    confusion: dict[str, dict[str, int]] = {}
    for (t, p), c in sorted(counts.items()):
        confusion.setdefault(t, {})[p] = c
    correct = sum(c for (t, p), c in counts.items() if t == p)
    return ClassifierReport(sum(counts.values()), correct, confusion)
