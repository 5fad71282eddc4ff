"""Waveform loading, saving and resampling.

All audio in the pipeline is mono float64 in [-1, 1]. The canonical model
rate is 16 kHz; nothing in this module resamples implicitly.
"""

from __future__ import annotations

import dataclasses
import struct
import uuid
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

PIPELINE_RATE = 16000

# Conversion convention for 16-bit PCM: divide by 32768 on read, multiply and
# round on write. Asymmetric on purpose; +1.0 saturates to 32767.
INT16_SCALE = 32768.0


class MalformedWav(ValueError):
    """The byte stream is not a well-formed RIFF/WAVE container."""


class UnsupportedEncoding(ValueError):
    """WAV is structurally valid but uses a codec/layout we do not read."""


class UnsupportedRate(ValueError):
    """Requested resampling rate outside the supported set."""


class ClipVersion(str, Enum):
    ORIGINAL = "Original"
    ATTACKED = "Attacked"
    DEFENDED = "Defended"


def _new_clip_id() -> str:
    return uuid.uuid4().hex[:12]


@dataclass(frozen=True)
class AudioClip:
    """Immutable mono waveform with version lineage.

    Samples are clamped to [-1, 1] at construction; `parent_id` is present
    exactly when the clip is not an Original.
    """

    samples: np.ndarray
    sample_rate: int = PIPELINE_RATE
    clip_id: str = field(default_factory=_new_clip_id)
    version: ClipVersion = ClipVersion.ORIGINAL
    parent_id: str | None = None
    label_text: str | None = None

    def __post_init__(self):
        samples = np.clip(np.asarray(self.samples, dtype=np.float64), -1.0, 1.0)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if (self.parent_id is None) != (self.version is ClipVersion.ORIGINAL):
            raise ValueError(
                f"parent_id must be absent iff version is Original "
                f"(version={self.version.value}, parent_id={self.parent_id!r})"
            )

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def derive(self, samples: np.ndarray, version: ClipVersion, clip_id: str | None = None) -> "AudioClip":
        """Child clip in this clip's lineage (Attacked or Defended)."""
        if version is ClipVersion.ORIGINAL:
            raise ValueError("a derived clip cannot be an Original")
        return AudioClip(
            samples=samples,
            sample_rate=self.sample_rate,
            clip_id=clip_id or _new_clip_id(),
            version=version,
            parent_id=self.clip_id,
            label_text=self.label_text,
        )


def load_wav(data: bytes) -> AudioClip:
    """Parse a RIFF/WAVE byte string into an AudioClip.

    Accepts PCM 16-bit (format tag 1) and float32 (format tag 3), mono or
    stereo at any rate. Stereo is averaged down to mono. Raises rather than
    guessing on anything else.
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWav("not a RIFF/WAVE container")
    (riff_size,) = struct.unpack_from("<I", data, 4)
    if riff_size + 8 != len(data):
        raise MalformedWav(f"RIFF size field says {riff_size + 8} bytes, file has {len(data)}")
    fmt = None
    raw = None
    pos = 12
    while pos < len(data):
        if pos + 8 > len(data):
            raise MalformedWav("dangling bytes where a chunk header was expected")
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if len(body) < chunk_size:
            raise MalformedWav(f"chunk {chunk_id!r} overruns the file")
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise MalformedWav("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            raw = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned
    if fmt is None:
        raise MalformedWav("missing fmt chunk")
    if raw is None:
        raise MalformedWav("missing data chunk")

    tag, channels, rate, _byte_rate, _block_align, bits = fmt
    if rate == 0:
        raise MalformedWav("sample rate of zero")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels; only mono and stereo are read")
    if (tag, bits) == (1, 16):
        sample_width = 2
        decode = lambda b: np.frombuffer(b, dtype="<i2").astype(np.float64) / INT16_SCALE
    elif (tag, bits) == (3, 32):
        sample_width = 4
        decode = lambda b: np.frombuffer(b, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedEncoding(f"format tag {tag} at {bits} bits is not supported")

    frame_bytes = sample_width * channels
    if len(raw) % frame_bytes != 0:
        raise MalformedWav("data chunk is not a whole number of frames")
    x = decode(raw)
    if channels == 2:
        x = x.reshape(-1, 2).mean(axis=1)
    return AudioClip(samples=x, sample_rate=rate)


def save_wav(clip: AudioClip) -> bytes:
    """Serialize to canonical mono 16-bit PCM WAV (44-byte header)."""
    q = np.clip(np.rint(clip.samples * INT16_SCALE), -32768, 32767).astype("<i2")
    body = q.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(body),
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        1,  # mono
        clip.sample_rate,
        clip.sample_rate * 2,
        2,  # block align
        16,  # bits
        b"data",
        len(body),
    )
    return header + body


_RESAMPLE_RATES = (8000, 16000)
_TAPS_PER_SIDE = 16
_KAISER_BETA = 8.6


def _kernel(tau: np.ndarray, cutoff_norm: float) -> np.ndarray:
    """Kaiser-windowed sinc evaluated at fractional sample offsets."""
    inside = 1.0 - (tau / _TAPS_PER_SIDE) ** 2
    window = np.where(
        inside > 0.0,
        np.i0(_KAISER_BETA * np.sqrt(np.maximum(inside, 0.0))) / np.i0(_KAISER_BETA),
        0.0,
    )
    return np.sinc(2.0 * cutoff_norm * tau) * window


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Polyphase windowed-sinc resampling between 8 kHz and 16 kHz.

    Cutoff is 0.45 * min(rate_in, rate_out); output length is the input
    length scaled by the rate ratio, rounded down. Linear in the input.
    """
    if target_rate not in _RESAMPLE_RATES:
        raise UnsupportedRate(f"target rate {target_rate}; supported: {_RESAMPLE_RATES}")
    if clip.sample_rate == target_rate:
        return clip
    x = clip.samples
    in_rate = clip.sample_rate
    out_len = (len(x) * target_rate) // in_rate
    if out_len == 0:
        return dataclasses.replace(clip, samples=np.zeros(0), sample_rate=target_rate)

    cutoff_norm = 0.45 * min(in_rate, target_rate) / in_rate  # cycles per input sample
    t = np.arange(out_len) * (in_rate / target_rate)
    n0 = np.floor(t).astype(np.int64)
    frac = t - n0
    offsets = np.arange(-_TAPS_PER_SIDE, _TAPS_PER_SIDE + 1)
    tau = offsets[None, :] - frac[:, None]
    weights = _kernel(tau, cutoff_norm)
    weights /= weights.sum(axis=1, keepdims=True)  # exact unit DC gain per phase

    padded = np.pad(x, (_TAPS_PER_SIDE, _TAPS_PER_SIDE + 1))
    index = n0[:, None] + offsets[None, :] + _TAPS_PER_SIDE
    y = np.einsum("ij,ij->i", padded[index], weights)
    return dataclasses.replace(clip, samples=y, sample_rate=target_rate)
