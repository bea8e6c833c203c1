import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import envelope_decay_db, measured_snr_db, sawtooth, sine
from voxbalance.audio_io import AudioClip
from voxbalance.augment import (
    AugmentSpec,
    add_reverb,
    derive_seed,
    impulse_response,
    inject_noise,
    pitch_shift,
    time_stretch,
)
from voxbalance.errors import (
    InvalidAugmentSpec,
    InvalidRate,
    InvalidRT60,
    InvalidShift,
    UndefinedSNR,
)
from voxbalance.pitch import PitchConfig, estimate_pitch

RATE = 16000
HOP = int(0.015 * RATE)  # WSOLA synthesis hop: half of the 30 ms segment
WIDE = PitchConfig(f0_min=60, f0_max=1000)


def tone(freq=220, seconds=1.0, amplitude=0.5):
    return AudioClip(sine(freq, seconds, RATE, amplitude), RATE)


def f0_of(clip):
    return estimate_pitch(clip, WIDE).median_f0()


def test_noise_snr_20db():
    clean = tone()
    noisy = inject_noise(clean, 20, seed=1)
    assert abs(measured_snr_db(clean.mono, noisy.mono) - 20) <= 0.5


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 40), st.integers(0, 2 ** 64 - 1))
def test_noise_snr_property(snr, seed):
    clean = tone(seconds=0.5)
    noisy = inject_noise(clean, snr, seed)
    assert abs(measured_snr_db(clean.mono, noisy.mono) - snr) <= 0.5


def test_noise_on_silence():
    with pytest.raises(UndefinedSNR):
        inject_noise(AudioClip(np.zeros(100), RATE), 10, 0)


def test_noise_deterministic_and_seed_sensitive():
    a, b = inject_noise(tone(), 10, 42), inject_noise(tone(), 10, 42)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, inject_noise(tone(), 10, 43).samples)


@pytest.mark.parametrize("rate", [1.0, 0.5, 0.8, 1.25, 2.0, 0.25, 4.0])
def test_stretch_length(rate):
    clip = tone(seconds=2.0)
    out = time_stretch(clip, rate, seed=0)
    assert abs(out.n_samples - round(clip.n_samples / rate)) <= HOP


def test_stretch_2x_halves_duration():
    out = time_stretch(tone(seconds=2.0), 2.0)
    assert abs(out.duration - 1.0) <= HOP / RATE


def test_stretch_keeps_pitch():
    out = time_stretch(tone(220), 0.5)
    assert abs(f0_of(out) - 220) <= 0.02 * 220


def test_stretch_out_of_range():
    for rate in (0.2, 4.5, 0):
        with pytest.raises(InvalidRate):
            time_stretch(tone(), rate)


@pytest.mark.parametrize("semitones,expected,tol", [(0, 220, 0.01), (12, 440, 0.02), (2, 220 * 2 ** (2 / 12), 0.02),
                                                    (-12, 110, 0.02)])
def test_pitch_shift_f0(semitones, expected, tol):
    out = pitch_shift(tone(220), semitones)
    assert abs(f0_of(out) - expected) <= tol * expected
    assert out.n_samples == RATE


def test_pitch_shift_2_semitones_value():
    # 220 * 2^(2/12) = 246.94 Hz
    assert abs(220 * 2 ** (2 / 12) - 246.9) < 0.05


@pytest.mark.parametrize("s", [-7, -3, 4, 9])
def test_pitch_shift_roundtrip(s):
    clip = AudioClip(sawtooth(180, 1.0, RATE), RATE)
    back = pitch_shift(pitch_shift(clip, s), -s)
    assert abs(f0_of(back) - 180) <= 0.03 * 180


def test_pitch_shift_out_of_range():
    with pytest.raises(InvalidShift):
        pitch_shift(tone(), 12.5)


def test_reverb_dry_passthrough():
    clip = tone(seconds=0.2)
    out = add_reverb(clip, 0.3, 0.0, seed=1)
    ir_len = len(impulse_response(0.3, RATE, 1))
    assert out.n_samples == clip.n_samples + ir_len - 1
    np.testing.assert_array_equal(out.mono[:clip.n_samples], clip.mono)
    assert np.all(out.mono[clip.n_samples:] == 0)


def test_reverb_of_impulse_is_ir():
    x = np.zeros(100)
    x[0] = 1.0
    out = add_reverb(AudioClip(x, RATE), 0.25, 1.0, seed=9)
    ir = impulse_response(0.25, RATE, 9)
    np.testing.assert_allclose(out.mono[:len(ir)], ir, atol=1e-12)
    assert out.n_samples == 100 + len(ir) - 1


@pytest.mark.parametrize("rt60", [0.3, 0.8, 1.5])
def test_ir_decays_60db_at_rt60(rt60):
    ir = impulse_response(rt60, RATE, seed=3)
    assert abs((len(ir) - 1) / RATE - rt60) <= 1 / RATE
    assert abs(envelope_decay_db(ir, RATE, rt60) - 60) <= 1


def test_reverb_output_bounded_and_deterministic():
    clip = tone(seconds=0.5, amplitude=0.9)
    a = add_reverb(clip, 0.5, 0.7, seed=5)
    assert np.max(np.abs(a.mono)) <= 1.0
    assert np.array_equal(a.samples, add_reverb(clip, 0.5, 0.7, seed=5).samples)


def test_reverb_invalid():
    with pytest.raises(InvalidRT60):
        add_reverb(tone(), 0, 0.5, 1)
    with pytest.raises(InvalidAugmentSpec):
        add_reverb(tone(), 0.2, 1.5, 1)


SPECS = [
    AugmentSpec("pitch_shift", {"semitones": 1.5}, 7),
    AugmentSpec("time_stretch", {"rate": 0.9}, 8),
    AugmentSpec("noise", {"snr_db": 15}, 2 ** 64 - 1),
    AugmentSpec("reverb", {"rt60": 0.2, "wet": 0.3}, 0),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.op)
def test_spec_json_roundtrip_and_determinism(spec):
    assert AugmentSpec.from_json(spec.to_json()) == spec
    assert json.loads(spec.to_json()) == {"op": spec.op, "params": spec.params, "seed": spec.seed}
    clip = AudioClip(sawtooth(150, 0.5, RATE), RATE)
    a, b = spec.apply(clip), spec.apply(clip)
    assert np.array_equal(a.samples, b.samples)
    assert a.sample_rate == RATE and np.max(np.abs(a.samples)) <= 1.0


@pytest.mark.parametrize("op,params,seed,err", [
    ("echo", {}, 0, InvalidAugmentSpec),
    ("noise", {"snr": 3}, 0, InvalidAugmentSpec),
    ("noise", {"snr_db": 3}, -1, InvalidAugmentSpec),
    ("pitch_shift", {"semitones": 13}, 0, InvalidShift),
    ("time_stretch", {"rate": 5}, 0, InvalidRate),
    ("reverb", {"rt60": 0, "wet": 0.5}, 0, InvalidRT60),
    ("reverb", {"rt60": 1, "wet": -0.1}, 0, InvalidAugmentSpec),
])
def test_spec_validation(op, params, seed, err):
    with pytest.raises(err):
        AugmentSpec(op, params, seed)


def test_spec_from_bad_json():
    with pytest.raises(InvalidAugmentSpec):
        AugmentSpec.from_json("{not json")
    with pytest.raises(InvalidAugmentSpec):
        AugmentSpec.from_json('{"op": "noise"}')


def test_derive_seed():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
    seeds = {derive_seed(1, "clip", i) for i in range(1000)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2 ** 64 for s in seeds)
    assert derive_seed(1, "a") != derive_seed(2, "a")
