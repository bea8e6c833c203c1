"""Acceptance criteria, one test each; every test records a PASS/FAIL line
that is printed in the "acceptance criteria" summary section."""

import gc
import json
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import edit_oracle, edit_table_all, envelope_decay_db, measured_snr_db, naive_dft_magnitude
from oracles import sawtooth, sine
from voxbalance.audio_io import AudioClip
from voxbalance.augment import (
    AugmentSpec,
    add_reverb,
    impulse_response,
    inject_noise,
    pitch_shift,
    time_stretch,
)
from voxbalance.balance import BalanceStrategy, plan_balance
from voxbalance.cli import main as cli_main
from voxbalance.corpus import read_manifest
from voxbalance.dsp import dft_magnitude
from voxbalance.errors import EmptyReference
from voxbalance.metrics import align, cer, wer
from voxbalance.pipeline import PipelineConfig, run_pipeline
from voxbalance.pitch import BandLabel, classify_clip, estimate_pitch, evaluate_classifier
from voxbalance.synth import SKEWED_COUNTS, harmonic_voice, make_eval_pairs, make_synthetic_corpus

pytestmark = pytest.mark.acceptance


def test_dsp_transform_matches_naive_dft(criterion):
    rng = np.random.default_rng(0)
    start = time.perf_counter()
    worst_dft = worst_parseval = 0.0
    for i in range(1000):
        n = (8, 64, 256, 1024)[i % 4]
        x = rng.standard_normal(n)
        fast = dft_magnitude(x)
        ref = naive_dft_magnitude(x)
        worst_dft = max(worst_dft, np.max(np.abs(fast - ref)) / np.max(ref))
        spec_energy = (fast[0] ** 2 + 2 * np.sum(fast[1:-1] ** 2) + fast[-1] ** 2) / n
        worst_parseval = max(worst_parseval, abs(spec_energy - np.sum(x ** 2)) / np.sum(x ** 2))
    elapsed = time.perf_counter() - start
    ok = worst_dft <= 1e-9 and worst_parseval <= 1e-6 and elapsed < 10
    criterion("DSP: fast DFT vs naive oracle", ok,
              f"max rel err {worst_dft:.2e} (<=1e-9), Parseval {worst_parseval:.2e} (<=1e-6), {elapsed:.1f}s (<10s)")
    assert ok


def test_pitch_oracle(criterion):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for i in range(50):
        f0 = rng.uniform(80, 300)
        rate = (16000, 44100)[i % 2]
        make = sine if i % 4 < 2 else sawtooth
        est = estimate_pitch(AudioClip(make(f0, 0.5, rate), rate)).median_f0()
        worst = max(worst, np.inf if est is None else abs(est - f0) / f0)
    silent_voiced = sum(estimate_pitch(AudioClip(np.zeros(rate), rate)).n_voiced for rate in (16000, 44100))
    elapsed = time.perf_counter() - start
    ok = worst <= 0.02 and silent_voiced == 0 and elapsed < 30
    criterion("Pitch: median F0 of 50 tones/sawtooths", ok,
              f"max rel err {worst:.4%} (<=2%), voiced frames in silence {silent_voiced}, {elapsed:.1f}s (<30s)")
    assert ok


def test_band_classification(criterion):
    rng = np.random.default_rng(2)
    cases = [(120.0, BandLabel.MALE), (200.0, BandLabel.FEMALE)]
    cases += [(rng.uniform(90, 150), BandLabel.MALE) for _ in range(14)]
    cases += [(rng.uniform(170, 250), BandLabel.FEMALE) for _ in range(14)]
    correct = 0
    for i, (f0, want) in enumerate(cases):
        clip = AudioClip(harmonic_voice(f0, 0.5, 16000, seed=i), 16000)
        correct += classify_clip(clip, )[0] == want
    gap, _ = classify_clip(AudioClip(sine(160.0, 0.5, 16000), 16000))
    ok = correct == len(cases) == 30 and gap == BandLabel.UNCLASSIFIED
    criterion("Bands: 120 Hz male, 200 Hz female, 160 Hz unclassified", ok,
              f"{correct}/{len(cases)} in-band correct, 160 Hz -> {gap.value}")
    assert ok


def test_classifier_accuracy_arithmetic(criterion):
    pairs = [("female", "female")] * 34 + [("female", "male")] * 20 + [("female", "unclassified")] * 8
    report = evaluate_classifier(pairs)
    ok = report.total == 62 and report.correct == 34 and abs(report.accuracy - 0.548) <= 0.001
    criterion("Classifier evaluation: 34 of 62", ok, f"accuracy {report.accuracy:.4f} (0.548 +/- 0.001)")
    assert ok


def test_edit_distance_oracle(criterion):
    start = time.perf_counter()
    seqs, table = edit_table_all("abc", 6)
    words = [" ".join(s) for s in seqs]
    chars = ["".join(s) for s in seqs]
    # keep the collector from rescanning the 1.2M-entry oracle table
    gc.freeze()
    mismatches = 0
    try:
        for i, a in enumerate(seqs):
            ref_words, ref_chars = words[i], chars[i]
            for b, hyp_words, hyp_chars in zip(seqs, words, chars):
                edits, diagonal = table[a, b]
                r = align(a, b)
                mismatches += r.edits != edits or r.hits + r.substitutions != diagonal
                if a:
                    expected = edits / len(a)
                    mismatches += wer(ref_words, hyp_words) != expected
                    mismatches += cer(ref_chars, hyp_chars) != expected
    finally:
        gc.unfreeze()
    empty_refs_rejected = all(_raises_empty(f) for f in (wer, cer))
    rng = np.random.default_rng(3)
    random_mismatches = 0
    for _ in range(1000):
        a = tuple(rng.choice(list("abcde"), rng.integers(7, 30)))
        b = tuple(rng.choice(list("abcde"), rng.integers(0, 30)))
        edits, diagonal = edit_oracle(a, b)
        r = align(a, b)
        random_mismatches += r.edits != edits or r.hits + r.substitutions != diagonal
    example = wer("a b c d", "a x c")
    elapsed = time.perf_counter() - start
    ok = (mismatches == 0 and random_mismatches == 0 and example == 0.5
          and empty_refs_rejected and elapsed < 60)
    criterion("Edit distance: exhaustive len<=6 over 3 symbols + 1000 random", ok,
              f"{len(seqs) ** 2} pairs, {mismatches} + {random_mismatches} mismatches, "
              f"WER('a b c d','a x c')={example}, {elapsed:.1f}s (<60s)")
    assert ok


def _raises_empty(fn):
    try:
        fn("", "a")
    except EmptyReference:
        return True
    return False


def test_augmentation_contracts(criterion):
    rate = 16000
    voice = AudioClip(harmonic_voice(150.0, 1.0, rate, seed=4, amplitude=0.3), rate)
    snr_err = max(abs(measured_snr_db(voice.mono, inject_noise(voice, snr, seed=int(snr)).mono) - snr)
                  for snr in np.arange(0.0, 40.5, 2.5))

    tone = AudioClip(sine(220.0, 1.0, rate, amplitude=0.5), rate)
    shifted = estimate_pitch(pitch_shift(tone, 2.0)).median_f0()
    target = 220.0 * 2 ** (2 / 12)
    shift_err = abs(shifted - target) / target

    hop = int(round(0.015 * rate))
    stretched = time_stretch(voice, 2.0)
    length_err = abs(stretched.n_samples - voice.n_samples / 2)

    rt60 = 0.5
    decay = envelope_decay_db(impulse_response(rt60, rate, seed=9), rate, rt60)

    specs = [AugmentSpec("noise", {"snr_db": 10.0}, 1), AugmentSpec("pitch_shift", {"semitones": -1.5}, 2),
             AugmentSpec("time_stretch", {"rate": 0.9}, 3), AugmentSpec("reverb", {"rt60": 0.4, "wet": 0.5}, 4)]
    deterministic = all(np.array_equal(s.apply(voice).samples, s.apply(voice).samples) for s in specs)
    deterministic &= np.array_equal(add_reverb(voice, 0.3, 0.3, 7).samples, add_reverb(voice, 0.3, 0.3, 7).samples)

    ok = snr_err <= 0.5 and shift_err <= 0.02 and length_err <= hop and abs(decay - 60) <= 1 and deterministic
    criterion("Augmentation contracts", ok,
              f"SNR err {snr_err:.3f} dB (<=0.5), +2 st -> {shifted:.2f} Hz ({target:.1f} +/- 2%), "
              f"stretch 2.0 off by {length_err:.0f} samples (<= hop {hop}), IR decay {decay:.2f} dB (60 +/- 1), "
              f"deterministic {deterministic}")
    assert ok


def _cli(*argv):
    code = cli_main([str(a) for a in argv])
    assert code == 0, argv


def test_balancing_scenario(criterion, tmp_path, capsys):
    start = time.perf_counter()
    counts = {k: 10 * v for k, v in SKEWED_COUNTS.items()}
    manifest = make_synthetic_corpus(tmp_path / "corpus", counts, seed=46, duration=0.5)
    root = manifest.parent
    _cli("balance", "--manifest", manifest, "--audio-root", root, "--out", tmp_path / "up",
         "--strategy", "upsample", "--seed", 16)
    _cli("balance", "--manifest", manifest, "--audio-root", root, "--out", tmp_path / "down",
         "--strategy", "downsample", "--seed", 16)
    capsys.readouterr()
    up = json.loads((tmp_path / "up/stats_after.json").read_text())["counts"]
    down = json.loads((tmp_path / "down/stats_after.json").read_text())["counts"]
    entries = read_manifest(manifest)
    replans = {plan_balance(entries, BalanceStrategy.parse(s), 16).to_json() == (tmp_path / d / "plan.json").read_text()
               for s, d in (("upsample", "up"), ("downsample", "down"))}
    elapsed = time.perf_counter() - start
    ok = (up["male"] == up["female"] == 460 and down["male"] == down["female"] == 160
          and replans == {True} and elapsed < 120)
    criterion("Balancing: 1000 entries at 46/16/38", ok,
              f"upsample {up['male']}/{up['female']}, downsample {down['male']}/{down['female']}, "
              f"plans identical on rerun {replans == {True}}, {elapsed:.1f}s (<120s)")
    assert ok


def _tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_end_to_end_determinism(criterion, tmp_path):
    manifest = make_synthetic_corpus(tmp_path / "corpus", SKEWED_COUNTS, seed=0, duration=0.5)
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text(make_eval_pairs({"male": 0.1, "female": 0.25}, 30, seed=0))
    trees = []
    for name, jobs in (("run1", 1), ("run2", 1), ("run8", 8)):
        cfg = PipelineConfig(manifest, manifest.parent, tmp_path / name, seed=7, pairs=pairs, jobs=jobs)
        run_pipeline(cfg)
        trees.append(_tree(tmp_path / name))
    reports = [k for k in trees[0] if k.endswith((".json", ".csv", ".tsv"))]
    same_runs = trees[0] == trees[1]
    same_jobs = trees[0] == trees[2]
    ok = same_runs and same_jobs and "audit_report.json" in trees[0]
    criterion("End-to-end determinism: inspect -> classify -> balance -> evaluate", ok,
              f"{len(trees[0])} files ({len(reports)} reports) byte-identical across reruns {same_runs}, "
              f"--jobs 1 vs 8 {same_jobs}")
    assert ok
