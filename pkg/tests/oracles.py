"""Independent reference computations the library is checked against.

Nothing here imports the code paths under test.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _dft_matrix(n):
    k = np.arange(n // 2 + 1)[:, None]
    t = np.arange(n)[None, :]
    # angle reduced mod N before scaling keeps the twiddles exact to rounding
    return np.exp(-2j * np.pi * ((k * t) % n) / n)


def naive_dft_magnitude(x):
    """O(N^2) DFT magnitude for k = 0..N/2 by direct summation."""
    x = np.asarray(x, dtype=np.float64)
    return np.abs(_dft_matrix(len(x)) @ x)


def edit_oracle(ref, hyp):
    """(edits, diagonal_steps) by direct recursion on suffixes: fewest edits,
    then most hits+substitutions."""
    ref, hyp = tuple(ref), tuple(hyp)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(ref):
            return (len(hyp) - j, 0)
        if j == len(hyp):
            return (len(ref) - i, 0)
        e, d = go(i + 1, j + 1)
        best = (e + (ref[i] != hyp[j]), d + 1)
        for e2, d2 in (go(i + 1, j), go(i, j + 1)):
            if (e2 + 1, -d2) < (best[0], -best[1]):
                best = (e2 + 1, d2)
        return best

    return go(0, 0)


def edit_table_all(alphabet, max_len):
    """(edits, diagonal) for every pair of sequences up to ``max_len`` over
    ``alphabet``, memoized on the sequences themselves."""
    from itertools import product

    seqs = [()]
    for n in range(1, max_len + 1):
        seqs += list(product(alphabet, repeat=n))
    memo = {}
    # shorter suffixes first so each lookup below is already filled
    order = sorted(seqs, key=len)
    for a in order:
        for b in order:
            if not a:
                memo[a, b] = (len(b), 0)
            elif not b:
                memo[a, b] = (len(a), 0)
            else:
                e, d = memo[a[1:], b[1:]]
                best = (e + (a[0] != b[0]), d + 1)
                e2, d2 = memo[a[1:], b]
                if (e2 + 1, -d2) < (best[0], -best[1]):
                    best = (e2 + 1, d2)
                e2, d2 = memo[a, b[1:]]
                if (e2 + 1, -d2) < (best[0], -best[1]):
                    best = (e2 + 1, d2)
                memo[a, b] = best
    return seqs, memo


def measured_snr_db(clean, noisy):
    clean, noisy = np.asarray(clean), np.asarray(noisy)
    return 10 * np.log10(np.mean(clean ** 2) / np.mean((noisy - clean) ** 2))


def envelope_decay_db(ir, sample_rate, at_seconds, window_s=0.01):
    """Decay (dB below start) of a noisy exponential envelope at ``at_seconds``,
    from a straight-line fit to short-window energy in dB."""
    ir = np.asarray(ir)
    w = max(1, int(window_s * sample_rate))
    n = len(ir) // w
    energy = np.mean(ir[:n * w].reshape(n, w) ** 2, axis=1)
    centers = (np.arange(n) + 0.5) * w / sample_rate
    slope, _ = np.polyfit(centers, 10 * np.log10(energy), 1)
    return -slope * at_seconds


def sine(freq, seconds, rate, amplitude=0.5, phase=0.0):
    t = np.arange(int(round(seconds * rate))) / rate
    return amplitude * np.sin(2 * np.pi * freq * t + phase)


def sawtooth(freq, seconds, rate, amplitude=0.5):
    t = np.arange(int(round(seconds * rate))) / rate
    return amplitude * (2.0 * ((freq * t) % 1.0) - 1.0)
