"""RIFF/WAVE PCM decoding and encoding, channel mixdown and resampling.

Only two encodings are handled: 16-bit integer PCM and 32-bit IEEE float.
Samples are held as float64 in ``[-1, 1]`` with shape ``(channels, n)``.
16-bit values are scaled by 1/32768, so +32767 decodes to just under 1.0.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import i0

from .errors import (
    EmptyInput,
    InvalidConfig,
    InvalidRate,
    MalformedContainer,
    TruncatedInput,
    UnsupportedFormat,
)

PCM16 = "pcm16"
FLOAT32 = "float32"
ENCODINGS = (PCM16, FLOAT32)

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE

_SINC_HALF_TAPS = 32
_KAISER_BETA = 8.6


@dataclass(frozen=True)
class AudioClip:
    """Decoded audio. ``samples`` has shape ``(channels, n)`` and is read-only."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64)
        if x.ndim == 1:
            x = x[np.newaxis, :]
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError(f"samples must be (channels, n), got shape {x.shape}")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        if x.size and not (np.all(np.isfinite(x)) and np.max(np.abs(x)) <= 1.0):
            raise ValueError("samples must be finite and within [-1, 1]")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @classmethod
    def from_array(cls, x, sample_rate: int, clip: bool = True) -> "AudioClip":
        """Build a clip from an arbitrary float array, clamping to [-1, 1]."""
        x = np.asarray(x, dtype=np.float64)
        if clip:
            x = np.clip(np.nan_to_num(x), -1.0, 1.0)
        return cls(x, sample_rate)

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    @property
    def mono(self) -> np.ndarray:
        """1-D sample view of a single-channel clip."""
        if self.channels != 1:
            raise InvalidConfig(f"expected mono clip, got {self.channels} channels")
        return self.samples[0]

    def __len__(self):
        return self.n_samples


@dataclass(frozen=True)
class WavFormat:
    """Target encoding. ``None`` rate/channels are taken from the clip being written."""

    encoding: str = PCM16
    sample_rate: int | None = None
    channels: int | None = None

    def __post_init__(self):
        if self.encoding not in ENCODINGS:
            raise UnsupportedFormat(f"encoding {self.encoding!r}")

    @property
    def bit_depth(self) -> int:
        return 16 if self.encoding == PCM16 else 32


@dataclass(frozen=True)
class WavInfo:
    """Header-level description of a WAV file (no sample data)."""

    encoding: str
    sample_rate: int
    channels: int
    n_frames: int

    @property
    def duration(self) -> float:
        return self.n_frames / self.sample_rate


def _parse_fmt(body: bytes) -> tuple[str, int, int, int]:
    if len(body) < 16:
        raise MalformedContainer("fmt chunk shorter than 16 bytes")
    tag, channels, rate, _byte_rate, block_align, bits = struct.unpack_from("<HHIIHH", body)
    if tag == _WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 26:
            raise MalformedContainer("extensible fmt chunk too short")
        # first two bytes of the subformat GUID carry the actual format tag
        (tag,) = struct.unpack_from("<H", body, 24)
    if channels < 1 or rate < 1:
        raise MalformedContainer(f"channels={channels} sample_rate={rate}")
    if tag == _WAVE_FORMAT_PCM and bits == 16:
        encoding = PCM16
    elif tag == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        encoding = FLOAT32
    else:
        raise UnsupportedFormat(f"format tag 0x{tag:04x} with {bits} bits per sample")
    if block_align != channels * bits // 8:
        raise MalformedContainer(f"block_align {block_align} inconsistent with {channels}x{bits} bits")
    return encoding, channels, rate, block_align


def _walk_chunks(read, size_left):
    """Yield ``(chunk_id, size)`` pairs; ``read`` consumes bytes, ``size_left`` reports what remains."""
    while size_left() >= 8:
        header = read(8)
        cid, size = header[:4], struct.unpack("<I", header[4:])[0]
        if size > size_left():
            raise TruncatedInput(f"chunk {cid!r} declares {size} bytes, {size_left()} remain")
        yield cid, size


def _check_magic(head: bytes) -> None:
    if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
        raise MalformedContainer("missing RIFF/WAVE magic")


def decode_wav(data: bytes) -> AudioClip:
    """Decode a RIFF/WAVE byte string into an :class:`AudioClip`.

    Unknown chunks are skipped. ``fmt `` must precede ``data``.
    """
    data = bytes(data)
    _check_magic(data[:12])
    buf = io.BytesIO(data)
    buf.seek(12)
    fmt = None
    for cid, size in _walk_chunks(buf.read, lambda: len(data) - buf.tell()):
        if cid == b"fmt ":
            fmt = _parse_fmt(buf.read(size))
        elif cid == b"data":
            if fmt is None:
                raise MalformedContainer("data chunk precedes fmt chunk")
            encoding, channels, rate, block_align = fmt
            if size % block_align:
                raise TruncatedInput(f"data size {size} is not a multiple of block size {block_align}")
            raw = buf.read(size)
            if encoding == PCM16:
                x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
            else:
                x = np.frombuffer(raw, dtype="<f4").astype(np.float64)
                x = np.clip(np.nan_to_num(x, nan=0.0), -1.0, 1.0)
            return AudioClip(x.reshape(-1, channels).T, rate)
        else:
            buf.seek(size, os.SEEK_CUR)
        if size & 1:
            buf.seek(1, os.SEEK_CUR)
    raise MalformedContainer("no data chunk")


def read_wav_info(path) -> WavInfo:
    """Read only the header of a WAV file; sample data is never loaded."""
    path = Path(path)
    total = path.stat().st_size
    with open(path, "rb") as fh:
        _check_magic(fh.read(12))
        fmt = None
        for cid, size in _walk_chunks(fh.read, lambda: total - fh.tell()):
            if cid == b"fmt ":
                fmt = _parse_fmt(fh.read(size))
            elif cid == b"data":
                if fmt is None:
                    raise MalformedContainer("data chunk precedes fmt chunk")
                encoding, channels, rate, block_align = fmt
                if size % block_align:
                    raise TruncatedInput(f"data size {size} is not a multiple of block size {block_align}")
                return WavInfo(encoding, rate, channels, size // block_align)
            else:
                fh.seek(size, os.SEEK_CUR)
            if size & 1:
                fh.seek(1, os.SEEK_CUR)
    raise MalformedContainer("no data chunk")


def encode_wav(clip: AudioClip, fmt: WavFormat | None = None) -> bytes:
    """Serialize ``clip`` as a little-endian RIFF/WAVE byte string."""
    fmt = fmt or WavFormat()
    if clip.n_samples == 0:
        raise EmptyInput("cannot encode a clip with no samples")
    if fmt.sample_rate is not None and fmt.sample_rate != clip.sample_rate:
        raise InvalidConfig(f"format rate {fmt.sample_rate} != clip rate {clip.sample_rate}")
    if fmt.channels is not None and fmt.channels != clip.channels:
        raise InvalidConfig(f"format channels {fmt.channels} != clip channels {clip.channels}")

    interleaved = clip.samples.T.reshape(-1)
    if fmt.encoding == PCM16:
        tag = _WAVE_FORMAT_PCM
        q = np.clip(np.round(interleaved * 32768.0), -32768, 32767)
        payload = q.astype("<i2").tobytes()
    else:
        tag = _WAVE_FORMAT_IEEE_FLOAT
        payload = interleaved.astype("<f4").tobytes()

    block_align = clip.channels * fmt.bit_depth // 8
    fmt_body = struct.pack(
        "<HHIIHH", tag, clip.channels, clip.sample_rate,
        clip.sample_rate * block_align, block_align, fmt.bit_depth,
    )
    chunks = [b"fmt ", struct.pack("<I", len(fmt_body)), fmt_body]
    if fmt.encoding == FLOAT32:
        chunks += [b"fact", struct.pack("<II", 4, clip.n_samples)]
    chunks += [b"data", struct.pack("<I", len(payload)), payload]
    if len(payload) & 1:
        chunks.append(b"\x00")
    body = b"WAVE" + b"".join(chunks)
    return b"RIFF" + struct.pack("<I", len(body)) + body


def load_wav(path) -> AudioClip:
    return decode_wav(Path(path).read_bytes())


def save_wav(path, clip: AudioClip, encoding: str = PCM16) -> None:
    Path(path).write_bytes(encode_wav(clip, WavFormat(encoding)))


def mixdown(clip: AudioClip) -> AudioClip:
    """Average all channels into one."""
    if clip.channels == 1:
        return clip
    return AudioClip(clip.samples.mean(axis=0, keepdims=True), clip.sample_rate)


def _kaiser(u: np.ndarray, beta: float) -> np.ndarray:
    inside = np.abs(u) < 1.0
    out = np.zeros_like(u)
    out[inside] = i0(beta * np.sqrt(1.0 - u[inside] ** 2)) / i0(beta)
    return out


def resample_array(
    x: np.ndarray,
    ratio: float,
    method: str = "sinc",
    half_taps: int = _SINC_HALF_TAPS,
    beta: float = _KAISER_BETA,
    chunk: int = 8192,
) -> np.ndarray:
    """Resample a 1-D signal so that ``len(out) == round(len(x) * ratio)``.

    ``method="sinc"`` is a Kaiser-windowed sinc interpolator whose cutoff
    drops to the output Nyquist when downsampling; ``"linear"`` is plain
    linear interpolation.
    """
    x = np.asarray(x, dtype=np.float64)
    if ratio <= 0:
        raise InvalidRate(f"ratio {ratio}")
    n_out = int(round(len(x) * ratio))
    if n_out == 0 or len(x) == 0:
        return np.zeros(n_out)
    t = np.arange(n_out) / ratio
    if method == "linear":
        return np.interp(t, np.arange(len(x)), x)
    if method != "sinc":
        raise InvalidConfig(f"unknown resampling method {method!r}")

    cutoff = min(1.0, ratio)
    half_width = half_taps / cutoff
    reach = int(np.ceil(half_width))
    offsets = np.arange(-reach + 1, reach + 1)
    padded = np.concatenate([np.zeros(reach), x, np.zeros(reach + 1)])
    out = np.empty(n_out)
    for start in range(0, n_out, chunk):
        tt = t[start:start + chunk]
        base = np.floor(tt).astype(np.int64)
        idx = base[:, None] + offsets[None, :]
        d = tt[:, None] - idx
        w = cutoff * np.sinc(cutoff * d) * _kaiser(d / half_width, beta)
        out[start:start + chunk] = np.sum(w * padded[idx + reach], axis=1)
    return out


def resample(clip: AudioClip, target_rate: int, method: str = "sinc") -> AudioClip:
    """Convert ``clip`` to ``target_rate`` Hz, channel by channel."""
    if target_rate is None or target_rate <= 0 or int(target_rate) != target_rate:
        raise InvalidRate(f"target rate {target_rate}")
    target_rate = int(target_rate)
    if target_rate == clip.sample_rate:
        return clip
    ratio = target_rate / clip.sample_rate
    rows = [resample_array(ch, ratio, method) for ch in clip.samples]
    return AudioClip.from_array(np.vstack(rows), target_rate)
