"""Exception hierarchy.

Every error carries a stable kebab-case ``code`` (used as the message prefix
and in CLI diagnostics) and the process exit code the CLI maps it to.
"""

from __future__ import annotations


class VoxError(Exception):
    code = "internal-error"
    exit_code = 1

    def __init__(self, detail: str | None = None):
        self.detail = detail
        super().__init__(f"{self.code}: {detail}" if detail else self.code)


class InputError(VoxError):
    """Bad or unreadable input (CLI exit 2)."""

    exit_code = 2


class RequestError(VoxError):
    """Well-formed input asking for something infeasible (CLI exit 3)."""

    exit_code = 3


# audio_io
class MalformedContainer(InputError):
    code = "malformed-container"


class UnsupportedFormat(InputError):
    code = "unsupported-format"


class TruncatedInput(InputError):
    code = "truncated-input"


class EmptyInput(InputError):
    code = "empty-input"


class InvalidRate(InputError):
    code = "invalid-rate"


# dsp / pitch
class InvalidConfig(InputError):
    code = "invalid-config"


class EmptyEvaluation(InputError):
    code = "empty-evaluation"


# augment
class UndefinedSNR(InputError):
    code = "undefined-snr"


class InvalidShift(InputError):
    code = "invalid-shift"


class InvalidRT60(InputError):
    code = "invalid-rt60"


class InvalidAugmentSpec(InputError):
    code = "invalid-augment-spec"


# corpus
class SchemaError(InputError):
    code = "schema-error"

    def __init__(self, column: str):
        self.column = column
        super().__init__(column)


class RowError(InputError):
    code = "row-error"

    def __init__(self, line: int, reason: str = ""):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}" + (f": {reason}" if reason else ""))


class EmptyCorpus(InputError):
    code = "empty-corpus"


class CorpusIOError(InputError):
    code = "io-error"

    def __init__(self, path: str, reason: str = ""):
        self.path = str(path)
        super().__init__(self.path + (f" ({reason})" if reason else ""))


class CollisionError(InputError):
    code = "collision-error"


# balance
class DegenerateCorpus(RequestError):
    code = "degenerate-corpus"


class InfeasibleTarget(RequestError):
    code = "infeasible-target"


# metrics
class EmptyReference(InputError):
    code = "empty-reference"


class EmptyStratum(RequestError):
    code = "empty-stratum"
