"""CommonVoice-style manifest ingestion, clip segmentation and stratum statistics."""

from __future__ import annotations

import enum
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .audio_io import AudioClip, mixdown, read_wav_info
from .augment import AugmentSpec
from .errors import CorpusIOError, EmptyCorpus, InvalidConfig, RowError, SchemaError, VoxError

MALE, FEMALE, OTHER, UNLABELED = "male", "female", "other", "unlabeled"
GENDERS = (MALE, FEMALE, OTHER, UNLABELED)

_GENDER_ALIASES = {
    "male": MALE, "m": MALE, "male_masculine": MALE,
    "female": FEMALE, "f": FEMALE, "female_feminine": FEMALE,
    "other": OTHER,
    "": UNLABELED, "unlabeled": UNLABELED,
}

REQUIRED_COLUMNS = ("path", "sentence")
# columns with first-class fields; everything else rides along in ``extra``
_KNOWN_COLUMNS = {"path", "sentence", "gender", "accent", "accents", "age",
                  "category", "duration", "augment_spec"}


class SpeechCategory(str, enum.Enum):
    CONTROLLED = "controlled"
    SEMI_CONTROLLED = "semi_controlled"
    NATURAL = "natural"


def normalize_gender(value: str | None) -> str:
    """Map a gender cell onto the four-value vocabulary (case-insensitive).

    Unrecognized non-empty values count as ``other``.
    """
    key = (value or "").strip().lower()
    return _GENDER_ALIASES.get(key, OTHER)


def _label(value: str | None) -> str:
    value = (value or "").strip()
    return value if value else UNLABELED


def _parse_category(value: str | None) -> SpeechCategory | None:
    key = (value or "").strip().lower().replace("-", "_")
    if not key:
        return None
    try:
        return SpeechCategory(key)
    except ValueError:
        return None


@dataclass(frozen=True)
class ManifestEntry:
    clip_path: str
    transcript: str
    gender: str = UNLABELED
    accent: str = UNLABELED
    age: str = UNLABELED
    category: SpeechCategory | None = None
    duration: float | None = None
    augment_spec: AugmentSpec | None = None
    extra: tuple = ()  # ((column, value), ...) for columns without a field

    def __post_init__(self):
        if not self.clip_path:
            raise ValueError("clip_path must be non-empty")
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be one of {GENDERS}, got {self.gender!r}")
        if self.duration is not None and self.duration < 0:
            raise ValueError("duration must be >= 0")


def _split_header(line: str) -> list[str]:
    return [c.strip() for c in line.rstrip("\r\n").split("\t")]


def iter_manifest(tsv: str):
    """Yield one :class:`ManifestEntry` or one :class:`RowError` per non-blank data line.

    Raises :class:`SchemaError` if a required column is missing.
    """
    lines = tsv.splitlines()
    if not lines or not lines[0].strip():
        raise SchemaError(REQUIRED_COLUMNS[0])
    header = _split_header(lines[0])
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise SchemaError(col)
    index = {name: i for i, name in enumerate(header)}
    accent_col = "accent" if "accent" in index else "accents"
    extras = [c for c in header if c not in _KNOWN_COLUMNS]

    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.rstrip("\r\n").split("\t")
        if len(cells) < len(header):
            yield RowError(lineno, f"{len(cells)} cells, header has {len(header)}")
            continue

        def cell(name):
            i = index.get(name)
            return cells[i] if i is not None else ""

        path = cell("path").strip()
        if not path:
            yield RowError(lineno, "empty path")
            continue
        try:
            duration = float(cell("duration")) if cell("duration").strip() else None
            spec = cell("augment_spec").strip()
            spec = AugmentSpec.from_json(spec) if spec else None
        except (ValueError, VoxError) as exc:
            yield RowError(lineno, str(exc))
            continue
        yield ManifestEntry(
            clip_path=path,
            transcript=" ".join(cell("sentence").split()),
            gender=normalize_gender(cell("gender")),
            accent=_label(cell(accent_col)),
            age=_label(cell("age")),
            category=_parse_category(cell("category")),
            duration=duration,
            augment_spec=spec,
            extra=tuple((c, cells[index[c]]) for c in extras),
        )


def resolve_durations(entries, audio_root, jobs: int = 1) -> tuple[list[ManifestEntry], list[tuple[str, str]]]:
    """Fill ``duration`` from each WAV header. Returns updated entries and
    ``(path, reason)`` for files that could not be read (left unresolved)."""
    root = Path(audio_root)

    def probe(entry):
        try:
            return read_wav_info(root / entry.clip_path).duration, None
        except (OSError, VoxError) as exc:
            return None, str(exc)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(probe, entries))
    else:
        results = [probe(e) for e in entries]
    out, problems = [], []
    for entry, (duration, err) in zip(entries, results):
        if err is not None:
            problems.append((entry.clip_path, err))
        out.append(replace(entry, duration=duration))
    return out, problems


def parse_manifest(tsv: str, audio_root=None, jobs: int = 1) -> list[ManifestEntry]:
    """Parse manifest text, raising on the first bad row.

    With ``audio_root`` set, durations come from the referenced WAV headers;
    unreadable files leave ``duration`` as None.
    """
    entries = []
    for item in iter_manifest(tsv):
        if isinstance(item, RowError):
            raise item
        entries.append(item)
    if audio_root is not None:
        entries, _ = resolve_durations(entries, audio_root, jobs)
    return entries


def read_manifest(path, audio_root=None, jobs: int = 1) -> list[ManifestEntry]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusIOError(str(path), str(exc)) from exc
    return parse_manifest(text, audio_root, jobs)


def format_manifest(entries) -> str:
    """Serialize entries as TSV with a ``duration`` column and, when any
    entry carries one, an ``augment_spec`` column."""
    entries = list(entries)
    extra_cols: list[str] = []
    for e in entries:
        for name, _ in e.extra:
            if name not in extra_cols:
                extra_cols.append(name)
    with_spec = any(e.augment_spec is not None for e in entries)
    header = ["path", "sentence", "gender", "accent", "age", "category", "duration"]
    header += extra_cols + (["augment_spec"] if with_spec else [])
    rows = ["\t".join(header)]
    for e in entries:
        extra = dict(e.extra)
        row = [
            e.clip_path, e.transcript, e.gender, e.accent, e.age,
            e.category.value if e.category else "",
            "" if e.duration is None else f"{e.duration:.6f}",
        ]
        row += [extra.get(c, "") for c in extra_cols]
        if with_spec:
            row.append(e.augment_spec.to_json() if e.augment_spec else "")
        rows.append("\t".join(c.replace("\t", " ") for c in row))
    return "\n".join(rows) + "\n"


def write_manifest(path, entries) -> None:
    Path(path).write_text(format_manifest(entries), encoding="utf-8")


# -- statistics --------------------------------------------------------------

GENDER = ("gender",)
GENDER_ACCENT = ("gender", "accent")


def stratum_key(entry: ManifestEntry, by=GENDER) -> str:
    return "|".join(getattr(entry, attr) for attr in by)


@dataclass(frozen=True)
class CorpusStats:
    total: int
    counts: dict = field(default_factory=dict)
    by: tuple = GENDER

    @property
    def proportions(self) -> dict:
        return {k: c / self.total for k, c in self.counts.items()}

    def to_dict(self) -> dict:
        return {
            "stratum_by": list(self.by),
            "total": self.total,
            "counts": dict(self.counts),
            "proportions": self.proportions,
        }


def corpus_stats(entries, by=GENDER) -> CorpusStats:
    counts = Counter(stratum_key(e, by) for e in entries)
    if not counts:
        raise EmptyCorpus("manifest has no entries")
    return CorpusStats(sum(counts.values()), dict(sorted(counts.items())), tuple(by))


# -- segmentation ------------------------------------------------------------

def segment_bounds(clip: AudioClip, max_len: float, silence_rms: float = 0.01,
                   min_silence: float = 0.3, frame_ms: float = 10.0):
    """Sample ranges ``[(start, end), ...]`` for :func:`segment_clip`, plus a
    flag set when a span with no usable silence had to be hard-cut."""
    if not max_len > 0:
        raise InvalidConfig(f"max_len must be positive, got {max_len}")
    x = mixdown(clip).mono
    n, sr = len(x), clip.sample_rate
    max_n = max(1, int(math.floor(max_len * sr)))
    hop = max(1, int(round(frame_ms * sr / 1000)))
    if n == 0:
        return [], False

    starts = np.arange(0, n, hop)
    sq = np.concatenate([[0.0], np.cumsum(x ** 2)])
    ends = np.minimum(starts + hop, n)
    rms = np.sqrt((sq[ends] - sq[starts]) / (ends - starts))
    silent = rms < silence_rms
    if silent.all():
        return [], False
    if n <= max_n:
        return [(0, n)], False

    # speech regions = complement of silence runs long enough to cut in
    min_run = min_silence * sr
    regions, pos, i = [], 0, 0
    while i < len(silent):
        if not silent[i]:
            i += 1
            continue
        j = i
        while j < len(silent) and silent[j]:
            j += 1
        a, b = int(starts[i]), int(ends[j - 1])
        if b - a >= min_run:
            if a > pos:
                regions.append((pos, a))
            pos = b
        i = j
    if pos < n:
        regions.append((pos, n))

    spans = []
    cur_start, cur_end = regions[0]
    for s, e in regions[1:]:
        if e - cur_start <= max_n:
            cur_end = e
        else:
            spans.append((cur_start, cur_end))
            cur_start, cur_end = s, e
    spans.append((cur_start, cur_end))

    bounds, hard_cut = [], False
    for s, e in spans:
        if e - s <= max_n:
            bounds.append((s, e))
            continue
        hard_cut = True
        bounds.extend((a, min(a + max_n, e)) for a in range(s, e, max_n))
    return bounds, hard_cut


def segment_clip(clip: AudioClip, max_len: float, silence_rms: float = 0.01,
                 min_silence: float = 0.3) -> list[AudioClip]:
    """Split ``clip`` into pieces no longer than ``max_len`` seconds, cutting
    inside silences of at least ``min_silence`` seconds (silence at a cut is
    dropped). All-silent input gives ``[]``."""
    bounds, _ = segment_bounds(clip, max_len, silence_rms, min_silence)
    return [AudioClip(clip.samples[:, s:e], clip.sample_rate) for s, e in bounds]
