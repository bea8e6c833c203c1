"""Deterministic synthetic corpora for tests, demos and acceptance runs.

Voices are harmonic tones (1/k harmonic amplitudes, random phases) with a
fixed F0 per clip, which is enough to exercise pitch banding, augmentation
and balancing end to end without shipping real recordings.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio_io import AudioClip, save_wav
from .augment import derive_seed

SENTENCES = (
    "the quick brown fox jumps over the lazy dog",
    "please turn on the kitchen lights",
    "what is the weather like tomorrow",
    "set a timer for ten minutes",
    "tell me a joke about computers",
    "open the camera application",
    "who wrote the declaration of independence",
    "play some quiet music in the living room",
    "remind me to call my sister tonight",
    "how far is the moon from the earth",
)

F0_RANGES = {
    "male": (95.0, 145.0),
    "female": (175.0, 245.0),
    "other": (90.0, 250.0),
    "unlabeled": (90.0, 250.0),
}

# CommonVoice skew: 46% male, 16% female, rest without a gender label
SKEWED_COUNTS = {"male": 46, "female": 16, "unlabeled": 38}


def harmonic_voice(f0: float, duration: float, sample_rate: int, seed: int = 0,
                   harmonics: int = 8, amplitude: float = 0.4) -> np.ndarray:
    rng = np.random.default_rng(seed)
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    x = np.zeros_like(t)
    for k in range(1, harmonics + 1):
        if k * f0 >= sample_rate / 2:
            break
        x += np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k
    peak = np.max(np.abs(x)) if len(x) else 0.0
    return amplitude * x / peak if peak > 0 else x


def write_corpus(out_dir, rows, seed: int, duration: float = 1.0, sample_rate: int = 16000,
                 clip_dir: str = "clips") -> Path:
    """Write one clip per ``(gender_cell, f0_hz)`` row plus ``manifest.tsv``.

    Returns the manifest path; clip paths in it are relative to ``out_dir``.
    """
    out_dir = Path(out_dir)
    (out_dir / clip_dir).mkdir(parents=True, exist_ok=True)
    lines = ["client_id\tpath\tsentence\tgender\tage\taccent"]
    for i, (gender, f0) in enumerate(rows):
        rel = f"{clip_dir}/{gender or 'unlabeled'}_{i:05d}.wav"
        x = harmonic_voice(f0, duration, sample_rate, derive_seed(seed, "voice", i))
        save_wav(out_dir / rel, AudioClip(x, sample_rate))
        sentence = SENTENCES[i % len(SENTENCES)]
        lines.append(f"spk{i:05d}\t{rel}\t{sentence}\t{gender}\t\t")
    manifest = out_dir / "manifest.tsv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def corpus_rows(counts: dict, seed: int) -> list:
    """``(gender_cell, f0)`` rows with F0 drawn uniformly from each stratum's range."""
    rng = np.random.default_rng(derive_seed(seed, "f0"))
    rows = []
    for stratum in sorted(counts):
        lo, hi = F0_RANGES[stratum]
        cell = "" if stratum == "unlabeled" else stratum
        rows += [(cell, float(rng.uniform(lo, hi))) for _ in range(counts[stratum])]
    return rows


def make_synthetic_corpus(out_dir, counts: dict | None = None, seed: int = 0,
                          duration: float = 1.0, sample_rate: int = 16000) -> Path:
    return write_corpus(out_dir, corpus_rows(counts or SKEWED_COUNTS, seed), seed, duration, sample_rate)


def corrupt(words: list, rate: float, rng) -> list:
    """Apply random word substitutions, deletions and insertions at ``rate`` per word."""
    vocab = "alpha bravo charlie delta echo foxtrot golf hotel".split()
    out = []
    for w in words:
        if rng.random() >= rate:
            out.append(w)
            continue
        kind = rng.integers(3)
        if kind == 0:
            out.append(vocab[rng.integers(len(vocab))])
        elif kind == 2:
            out += [w, vocab[rng.integers(len(vocab))]]
    return out


def make_eval_pairs(error_rates: dict, per_stratum: int, seed: int) -> str:
    """Pairs TSV whose hypotheses are references corrupted at each stratum's rate."""
    lines = ["reference\thypothesis\tstratum"]
    for stratum in sorted(error_rates):
        rng = np.random.default_rng(derive_seed(seed, "pairs", stratum))
        for i in range(per_stratum):
            ref = SENTENCES[i % len(SENTENCES)]
            hyp = " ".join(corrupt(ref.split(), error_rates[stratum], rng))
            lines.append(f"{ref}\t{hyp}\t{stratum}")
    return "\n".join(lines) + "\n"
