"""Edit-distance alignment, WER/CER and per-stratum bias gaps."""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import EmptyReference, EmptyStratum, RowError, SchemaError

_PUNCT = str.maketrans("", "", string.punctuation)


class AlignmentResult(NamedTuple):
    substitutions: int
    deletions: int
    insertions: int
    hits: int

    @property
    def reference_length(self) -> int:
        return self.hits + self.substitutions + self.deletions

    @property
    def edits(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def align(ref, hyp) -> AlignmentResult:
    """Minimal unit-cost alignment of two token sequences.

    Among alignments of minimal total cost the one with the most diagonal
    steps (hits + substitutions) is chosen, so a substitution always beats an
    insertion/deletion pair and the S/D/I split is unique.
    """
    if not isinstance(ref, (list, tuple, str)):
        ref = list(ref)
    if not isinstance(hyp, (list, tuple, str)):
        hyp = list(hyp)
    # a shared prefix/suffix is all hits in some best alignment
    lead = 0
    while lead < len(ref) and lead < len(hyp) and ref[lead] == hyp[lead]:
        lead += 1
    trail = 0
    while (trail < len(ref) - lead and trail < len(hyp) - lead
           and ref[-1 - trail] == hyp[-1 - trail]):
        trail += 1
    if lead or trail:
        ref, hyp = ref[lead:len(ref) - trail], hyp[lead:len(hyp) - trail]
    n, m = len(ref), len(hyp)
    if n == 0 or m == 0:
        return AlignmentResult(0, n, m, lead + trail)
    # cost = edits * big - diagonal_steps; minimizing it orders by edits, then
    # prefers more diagonal steps (diagonal_steps < big always)
    big = n + m + 1
    sub = big - 1
    prev = [j * big for j in range(m + 1)]
    for r in ref:
        left = prev[0] + big
        cur = [left]
        for h, diag, up in zip(hyp, prev, prev[1:]):
            c = diag - 1 if r == h else diag + sub
            gap = (up if up < left else left) + big
            left = gap if gap < c else c
            cur.append(left)
        prev = cur
    cost = prev[m]
    edits = -(-cost // big)
    diagonal = edits * big - cost
    deletions, insertions = n - diagonal, m - diagonal
    substitutions = edits - deletions - insertions
    return AlignmentResult(substitutions, deletions, insertions, diagonal - substitutions + lead + trail)


def _words(text: str, strip_punctuation: bool) -> list[str]:
    text = text.lower()
    if strip_punctuation:
        text = text.translate(_PUNCT)
    return text.split()


def normalize_text(text: str, strip_punctuation: bool = False) -> str:
    """Lowercase, optionally drop ASCII punctuation, collapse whitespace runs."""
    return " ".join(_words(text, strip_punctuation))


def word_alignment(ref: str, hyp: str, strip_punctuation: bool = False) -> AlignmentResult:
    r = _words(ref, strip_punctuation)
    if not r:
        raise EmptyReference("reference has no words")
    return align(r, _words(hyp, strip_punctuation))


def char_alignment(ref: str, hyp: str, strip_punctuation: bool = False) -> AlignmentResult:
    r = normalize_text(ref, strip_punctuation)
    if not r:
        raise EmptyReference("reference has no characters")
    return align(r, normalize_text(hyp, strip_punctuation))


def wer(ref: str, hyp: str, strip_punctuation: bool = False) -> float:
    a = word_alignment(ref, hyp, strip_punctuation)
    return a.edits / a.reference_length


def cer(ref: str, hyp: str, strip_punctuation: bool = False) -> float:
    a = char_alignment(ref, hyp, strip_punctuation)
    return a.edits / a.reference_length


@dataclass(frozen=True)
class EvalPair:
    reference: str
    hypothesis: str
    stratum: str

    def __post_init__(self):
        if not normalize_text(self.reference):
            raise EmptyReference(f"stratum {self.stratum!r}")


@dataclass
class StratumMetrics:
    utterances: int = 0
    words: int = 0
    word_edits: int = 0
    chars: int = 0
    char_edits: int = 0

    @property
    def wer(self) -> float:
        return self.word_edits / self.words

    @property
    def cer(self) -> float:
        return self.char_edits / self.chars

    def to_dict(self) -> dict:
        return {"utterances": self.utterances, "words": self.words,
                "word_edits": self.word_edits, "chars": self.chars,
                "char_edits": self.char_edits, "wer": self.wer, "cer": self.cer}


@dataclass
class GroupMetrics:
    strata: dict = field(default_factory=dict)  # name -> StratumMetrics

    @property
    def bias_gap(self) -> float:
        wers = [m.wer for m in self.strata.values()]
        return max(wers) - min(wers) if wers else 0.0

    @property
    def cer_gap(self) -> float:
        cers = [m.cer for m in self.strata.values()]
        return max(cers) - min(cers) if cers else 0.0

    def to_dict(self) -> dict:
        return {"strata": {k: v.to_dict() for k, v in sorted(self.strata.items())},
                "bias_gap": self.bias_gap, "cer_gap": self.cer_gap}

    def to_csv(self) -> str:
        lines = ["stratum,wer,cer,utterances"]
        for name, m in sorted(self.strata.items()):
            lines.append(f"{name},{m.wer!r},{m.cer!r},{m.utterances}")
        return "\n".join(lines) + "\n"


def score_pair(pair: EvalPair, strip_punctuation: bool = False) -> tuple:
    w = word_alignment(pair.reference, pair.hypothesis, strip_punctuation)
    c = char_alignment(pair.reference, pair.hypothesis, strip_punctuation)
    return pair.stratum, w.reference_length, w.edits, c.reference_length, c.edits


def reduce_scores(scores, strata=None) -> GroupMetrics:
    """Pool per-pair edit counts by stratum (order-independent sums)."""
    groups = {s: StratumMetrics() for s in (strata or ())}
    for stratum, words, word_edits, chars, char_edits in scores:
        m = groups.setdefault(stratum, StratumMetrics())
        m.utterances += 1
        m.words += words
        m.word_edits += word_edits
        m.chars += chars
        m.char_edits += char_edits
    for name, m in groups.items():
        if m.utterances == 0:
            raise EmptyStratum(name)
    return GroupMetrics(groups)


def group_metrics(pairs, strata=None, strip_punctuation: bool = False) -> GroupMetrics:
    """Pooled WER/CER per stratum: summed edits over summed reference lengths.

    ``strata`` optionally names strata that must be present; any of them
    without pairs raises :class:`EmptyStratum`.
    """
    return reduce_scores((score_pair(p, strip_punctuation) for p in pairs), strata)


PAIR_COLUMNS = ("reference", "hypothesis", "stratum")


def parse_pairs(tsv: str) -> list[EvalPair]:
    """Read ``reference  hypothesis  stratum`` TSV (header required)."""
    lines = tsv.splitlines()
    if not lines:
        raise SchemaError(PAIR_COLUMNS[0])
    header = [c.strip() for c in lines[0].split("\t")]
    for col in PAIR_COLUMNS:
        if col not in header:
            raise SchemaError(col)
    idx = [header.index(c) for c in PAIR_COLUMNS]
    pairs = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) < len(header):
            raise RowError(lineno, f"{len(cells)} cells, header has {len(header)}")
        ref, hyp, stratum = (cells[i] for i in idx)
        if not normalize_text(ref):
            raise RowError(lineno, "empty reference")
        if not stratum.strip():
            raise EmptyStratum(f"line {lineno}: blank stratum")
        pairs.append(EvalPair(ref, hyp, stratum.strip()))
    return pairs
