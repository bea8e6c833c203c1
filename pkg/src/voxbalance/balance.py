"""Stratified corpus balancing.

A plan decides, per stratum, which source entries are kept and which
augmented duplicates are generated; executing it writes a self-contained
balanced corpus (``<out>/audio`` + ``manifest_balanced.tsv``).

Within a stratum every entry has the same chance of being kept, which is
what removes the demographic selection skew of the source corpus.
"""

from __future__ import annotations

import json
import math
import posixpath
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .audio_io import PCM16, load_wav, read_wav_info, save_wav
from .augment import NOISE, PITCH_SHIFT, TIME_STRETCH, AugmentSpec, derive_seed
from .corpus import (
    GENDER,
    UNLABELED,
    ManifestEntry,
    corpus_stats,
    stratum_key,
    write_manifest,
)
from .errors import (
    CollisionError,
    CorpusIOError,
    DegenerateCorpus,
    InfeasibleTarget,
    InvalidConfig,
    VoxError,
)

DOWNSAMPLE = "downsample_to_min"
UPSAMPLE = "upsample_with_augmentation"
TARGET = "target_proportions"
_ALIASES = {"downsample": DOWNSAMPLE, DOWNSAMPLE: DOWNSAMPLE,
            "upsample": UPSAMPLE, UPSAMPLE: UPSAMPLE}

# parameter grids for upsampling duplicates; identity values left out
PITCH_GRID = (-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0)
STRETCH_GRID = (0.85, 0.9, 0.95, 1.05, 1.1, 1.15)
SNR_GRID = (10.0, 15.0, 20.0, 25.0, 30.0)
_GRIDS = ((PITCH_SHIFT, "semitones", PITCH_GRID),
          (TIME_STRETCH, "rate", STRETCH_GRID),
          (NOISE, "snr_db", SNR_GRID))

MANIFEST_NAME = "manifest_balanced.tsv"
AUDIO_DIR = "audio"


@dataclass(frozen=True)
class BalanceStrategy:
    kind: str
    targets: dict | None = None
    include_unlabeled: bool = False
    by: tuple = GENDER

    def __post_init__(self):
        if self.kind not in (DOWNSAMPLE, UPSAMPLE, TARGET):
            raise InvalidConfig(f"unknown strategy {self.kind!r}")
        if self.kind == TARGET:
            if not self.targets:
                raise InvalidConfig("target_proportions needs a stratum -> proportion map")
            if any(p < 0 for p in self.targets.values()):
                raise InvalidConfig("target proportions must be non-negative")
            if abs(sum(self.targets.values()) - 1.0) > 1e-9:
                raise InvalidConfig(f"target proportions sum to {sum(self.targets.values())}, not 1")
            object.__setattr__(self, "targets", dict(sorted(self.targets.items())))
        elif self.targets:
            raise InvalidConfig(f"{self.kind} takes no target proportions")
        object.__setattr__(self, "by", tuple(self.by))

    @classmethod
    def parse(cls, text: str, include_unlabeled: bool = False, by=GENDER) -> "BalanceStrategy":
        """``downsample``, ``upsample`` or ``target:male=0.5,female=0.5``."""
        text = text.strip()
        if text.startswith("target:") or text.startswith(TARGET + ":"):
            targets = {}
            try:
                for part in text.split(":", 1)[1].split(","):
                    name, value = part.split("=")
                    targets[name.strip()] = float(value)
            except ValueError as exc:
                raise InvalidConfig(f"bad target spec {text!r}") from exc
            return cls(TARGET, targets, include_unlabeled, by)
        if text not in _ALIASES:
            raise InvalidConfig(f"unknown strategy {text!r}")
        return cls(_ALIASES[text], None, include_unlabeled, by)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "targets": self.targets,
                "include_unlabeled": self.include_unlabeled, "by": list(self.by)}

    @classmethod
    def from_dict(cls, d: dict) -> "BalanceStrategy":
        return cls(d["kind"], d.get("targets"), bool(d.get("include_unlabeled", False)),
                   tuple(d.get("by", GENDER)))


@dataclass(frozen=True)
class Duplication:
    source: str
    spec: AugmentSpec
    output_path: str

    def to_dict(self) -> dict:
        return {"source": self.source, "augment_spec": self.spec.to_dict(),
                "output_path": self.output_path}

    @classmethod
    def from_dict(cls, d: dict) -> "Duplication":
        return cls(d["source"], AugmentSpec.from_dict(d["augment_spec"]), d["output_path"])


@dataclass
class BalancePlan:
    strategy: BalanceStrategy
    seed: int
    kept: dict = field(default_factory=dict)  # stratum -> [entry id]
    duplications: dict = field(default_factory=dict)  # stratum -> [Duplication]
    equalized: list = field(default_factory=list)  # strata the strategy acted on

    def target_counts(self) -> dict:
        strata = sorted(set(self.kept) | set(self.duplications))
        return {s: len(self.kept.get(s, ())) + len(self.duplications.get(s, ())) for s in strata}

    @property
    def n_duplications(self) -> int:
        return sum(len(v) for v in self.duplications.values())

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.to_dict(),
            "seed": self.seed,
            "equalized": list(self.equalized),
            "kept": {s: list(ids) for s, ids in sorted(self.kept.items())},
            "duplications": {s: [d.to_dict() for d in dups]
                             for s, dups in sorted(self.duplications.items())},
            "target_counts": self.target_counts(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "BalancePlan":
        return cls(
            strategy=BalanceStrategy.from_dict(d["strategy"]),
            seed=int(d["seed"]),
            kept={s: list(ids) for s, ids in d["kept"].items()},
            duplications={s: [Duplication.from_dict(x) for x in dups]
                          for s, dups in d["duplications"].items()},
            equalized=list(d.get("equalized", [])),
        )

    @classmethod
    def from_json(cls, text: str) -> "BalancePlan":
        return cls.from_dict(json.loads(text))


def _augmented_name(source: str, k: int) -> str:
    parent, name = posixpath.split(source.replace("\\", "/"))
    stem = name.rsplit(".", 1)[0] if "." in name else name
    return posixpath.join(parent, f"{stem}.aug{k}.wav")


def _sample_without_replacement(ids: list, k: int, seed: int, stratum: str) -> list:
    rng = np.random.default_rng(derive_seed(seed, "downsample", stratum))
    chosen = np.sort(rng.choice(len(ids), size=k, replace=False))
    return [ids[i] for i in chosen]


def _target_counts(counts: dict, targets: dict) -> dict:
    """Largest sample whose stratum sizes follow ``targets`` using no duplication."""
    named = {s: p for s, p in targets.items() if p > 0}
    for s in named:
        if counts.get(s, 0) == 0:
            raise InfeasibleTarget(f"stratum {s!r} has target {named[s]} but no entries")
    total = min(counts[s] / p for s, p in named.items())
    total = int(math.floor(total + 1e-9))
    want = {s: p * total for s, p in named.items()}
    out = {s: min(counts[s], int(math.floor(w + 1e-9))) for s, w in want.items()}
    short = total - sum(out.values())
    by_remainder = sorted(named, key=lambda s: (-(want[s] - out[s]), s))
    for s in by_remainder:
        if short <= 0:
            break
        if out[s] < counts[s]:
            out[s] += 1
            short -= 1
    for s in targets:
        out.setdefault(s, 0)
    return out


def plan_balance(entries, strategy: BalanceStrategy, seed: int, stats=None) -> BalancePlan:
    """Build a deterministic :class:`BalancePlan` for ``entries``.

    Entries are identified by ``clip_path``. Unlabeled-gender strata pass
    through untouched unless ``strategy.include_unlabeled`` is set.
    """
    entries = list(entries)
    stats = stats or corpus_stats(entries, strategy.by)
    if tuple(stats.by) != tuple(strategy.by):
        raise InvalidConfig(f"stats stratified by {stats.by}, strategy by {strategy.by}")
    ids = [e.clip_path for e in entries]
    if len(set(ids)) != len(ids):
        raise InvalidConfig("manifest contains duplicate clip paths")

    groups: dict[str, list[str]] = {}
    unlabeled: set[str] = set()
    for e in entries:
        key = stratum_key(e, strategy.by)
        groups.setdefault(key, []).append(e.clip_path)
        if e.gender == UNLABELED:
            unlabeled.add(key)
    if {k: len(v) for k, v in groups.items()} != dict(stats.counts):
        raise InvalidConfig("stats do not match entries")

    if strategy.kind == TARGET:
        active = sorted(strategy.targets)
    else:
        active = sorted(k for k in groups if strategy.include_unlabeled or k not in unlabeled)
    passthrough = {k: v for k, v in groups.items() if k not in active
                   and (k in unlabeled and not strategy.include_unlabeled)}
    plan = BalancePlan(strategy, int(seed), kept=dict(passthrough), equalized=active)

    counts = {k: len(groups.get(k, ())) for k in active}
    if strategy.kind == TARGET:
        for s, n in _target_counts(counts, strategy.targets).items():
            plan.kept[s] = _sample_without_replacement(groups.get(s, []), n, seed, s)
        return plan

    if sum(1 for c in counts.values() if c > 0) < 2:
        raise DegenerateCorpus(f"need two non-empty strata to equalize, have {sorted(counts)}")

    if strategy.kind == DOWNSAMPLE:
        m = min(counts.values())
        for s in active:
            plan.kept[s] = _sample_without_replacement(groups[s], m, seed, s)
        return plan

    top = max(counts.values())
    taken = set(ids)
    used_seeds: set[int] = set()
    for s in active:
        plan.kept[s] = list(groups[s])
        rng = np.random.default_rng(derive_seed(seed, "upsample", s))
        dups = []
        for j in range(top - counts[s]):
            # round-robin over sources so every source is reused as evenly as possible
            source = groups[s][j % counts[s]]
            op, name, grid = _GRIDS[int(rng.integers(len(_GRIDS)))]
            value = grid[int(rng.integers(len(grid)))]
            spec_seed = derive_seed(seed, "augment", s, j)
            bump = 0
            while spec_seed in used_seeds:
                bump += 1
                spec_seed = derive_seed(seed, "augment", s, j, bump)
            used_seeds.add(spec_seed)
            out_path = _augmented_name(source, j // counts[s] + 1)
            if out_path in taken:
                raise CollisionError(f"generated path {out_path} already used")
            taken.add(out_path)
            dups.append(Duplication(source, AugmentSpec(op, {name: value}, spec_seed), out_path))
        if dups:
            plan.duplications[s] = dups
    return plan


def _render(task):
    src, dst, spec, encoding = task
    clip = AugmentSpec.from_dict(spec).apply(load_wav(src))
    save_wav(dst, clip, encoding)
    return clip.duration


def _claim(path: Path) -> None:
    if path.exists():
        raise CollisionError(str(path))
    path.parent.mkdir(parents=True, exist_ok=True)


def execute_balance(plan: BalancePlan, entries, audio_root, out_dir, jobs: int = 1,
                    encoding: str = PCM16) -> list[ManifestEntry]:
    """Materialize ``plan`` under ``out_dir``.

    Kept clips are copied and augmented clips rendered into ``out_dir/audio``
    (paths relative to it, as in the source manifest); the balanced manifest
    is written to ``out_dir/manifest_balanced.tsv`` and returned.
    """
    audio_root, out_dir = Path(audio_root), Path(out_dir)
    out_audio = out_dir / AUDIO_DIR
    by_id = {e.clip_path: e for e in entries}
    manifest_path = out_dir / MANIFEST_NAME
    if manifest_path.exists():
        raise CollisionError(str(manifest_path))

    for stratum, ids in plan.kept.items():
        for i in ids:
            if i not in by_id:
                raise InvalidConfig(f"plan keeps unknown entry {i!r} ({stratum})")
    dups = [d for s in sorted(plan.duplications) for d in plan.duplications[s]]
    for d in dups:
        if d.source not in by_id:
            raise InvalidConfig(f"plan duplicates unknown entry {d.source!r}")

    kept_ids = {i for ids in plan.kept.values() for i in ids}
    kept = [e for e in entries if e.clip_path in kept_ids]
    for e in kept:
        src = audio_root / e.clip_path
        if not src.is_file():
            raise CorpusIOError(str(src), "missing source file")
    for d in dups:
        src = audio_root / d.source
        if not src.is_file():
            raise CorpusIOError(str(src), "missing source file")

    out_entries = []
    for e in kept:
        dst = out_audio / e.clip_path
        _claim(dst)
        shutil.copyfile(audio_root / e.clip_path, dst)
        if e.duration is None:
            e = replace(e, duration=read_wav_info(dst).duration)
        out_entries.append(e)

    tasks = []
    for d in dups:
        dst = out_audio / d.output_path
        _claim(dst)
        tasks.append((str(audio_root / d.source), str(dst), d.spec.to_dict(), encoding))
    try:
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                durations = list(pool.map(_render, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
        else:
            durations = [_render(t) for t in tasks]
    except (OSError, VoxError) as exc:
        raise CorpusIOError(str(out_audio), str(exc)) from exc

    for d, duration in zip(dups, durations):
        src = by_id[d.source]
        out_entries.append(replace(src, clip_path=d.output_path, duration=duration, augment_spec=d.spec))

    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest_path, out_entries)
    return out_entries
