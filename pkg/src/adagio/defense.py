"""Compression-style input preprocessing defenses.

Two built-in paths: a wideband perceptual quantizer (lapped MDCT analysis,
simplified masking model, uniform coefficient quantization sized to keep
noise under the masking threshold) and a narrowband speech path that
band-limits to the telephone band at 8 kHz before quantizing. A third path
shells out to an external encode/decode command for anyone with a real
codec on hand. None of these produce a bitstream; the defense is always a
round trip back to samples.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .audio_io import AudioClip, ClipVersion, load_wav, resample, save_wav

THRESHOLD_FLOOR = 1e-12
# Absolute threshold in quiet (power units at the MDCT coefficient scale):
# content below this is dropped no matter how empty the neighborhood is.
# Without it the quantizer is transparent in silent bands and faithfully
# preserves exactly the inaudible noise it exists to strip.
QUIET_THRESHOLD_POWER = 2.5e-3
_SPREAD_REACH = 3  # bands each side
_SPREAD_DOWNWARD_DB_PER_BAND = 25.0  # toward lower bands
_SPREAD_UPWARD_DB_PER_BAND = 10.0  # toward higher bands
_NARROWBAND_RATE = 8000
_NARROWBAND_TOP_HZ = 3400.0
_BAND_LOG_START_HZ = 50.0


class DefenseMethod(str, Enum):
    PERCEPTUAL_WIDEBAND = "mp3"
    NARROWBAND_SPEECH = "amr"
    EXTERNAL_CODEC = "external"


class BadLength(ValueError):
    pass


class ExternalCodecFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class DefenseConfig:
    method: DefenseMethod = DefenseMethod.PERCEPTUAL_WIDEBAND
    quality: float = 5.0  # (0, 10]; higher is gentler
    window_length: int = 1024
    band_count: int = 25
    external_command: str | None = None

    def __post_init__(self):
        if self.window_length & (self.window_length - 1) or self.window_length <= 0:
            raise ValueError("window_length must be a power of two")
        if self.band_count < 4:
            raise ValueError("band_count must be at least 4")
        if not (0.0 < self.quality <= 10.0):
            raise ValueError("quality must be in (0, 10]")


@dataclass(frozen=True)
class MaskingProfile:
    """Per-window, per-band masking energies (power units, floored)."""

    thresholds: np.ndarray  # (n_windows, band_count)


@lru_cache(maxsize=8)
def _mdct_basis(n: int) -> np.ndarray:
    """Cosine basis, shape (N, 2N), for frames of 2N windowed samples."""
    k = np.arange(n)[:, None]
    m = np.arange(2 * n)[None, :]
    return np.cos(np.pi / n * (m + 0.5 + n / 2.0) * (k + 0.5))


@lru_cache(maxsize=8)
def _sine_window(two_n: int) -> np.ndarray:
    return np.sin(np.pi * (np.arange(two_n) + 0.5) / two_n)


def mdct(frame: np.ndarray, window_length: int = 1024) -> np.ndarray:
    """Sine-windowed MDCT of one frame of `window_length` samples."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (window_length,):
        raise BadLength(f"frame must have exactly {window_length} samples, got {frame.shape}")
    n = window_length // 2
    return _mdct_basis(n) @ (frame * _sine_window(window_length))


def imdct(coefficients: np.ndarray, window_length: int = 1024) -> np.ndarray:
    """Windowed inverse MDCT; overlap-add of consecutive halves is exact."""
    coefficients = np.asarray(coefficients, dtype=np.float64)
    n = window_length // 2
    if coefficients.shape != (n,):
        raise BadLength(f"expected {n} coefficients, got {coefficients.shape}")
    return (2.0 / n) * (coefficients @ _mdct_basis(n)) * _sine_window(window_length)


def _band_edges(band_count: int, top_hz: float) -> np.ndarray:
    """band_count log-spaced bands over [0, top_hz]; edge 0 is pinned to DC."""
    return np.concatenate(([0.0], np.geomspace(_BAND_LOG_START_HZ, top_hz, band_count)))


def _bin_bands(n_bins: int, sample_rate: int, band_count: int, top_hz: float) -> np.ndarray:
    """Band index per spectral bin; -1 for bins above the band range."""
    centers = (np.arange(n_bins) + 0.5) * (sample_rate / 2.0) / n_bins
    edges = _band_edges(band_count, top_hz)
    bands = np.searchsorted(edges, centers, side="right") - 1
    bands[centers > top_hz] = -1
    return np.minimum(bands, band_count - 1)


def _spreading_kernel() -> tuple[np.ndarray, np.ndarray]:
    offsets = np.arange(-_SPREAD_REACH, _SPREAD_REACH + 1)
    gains = np.where(
        offsets < 0,
        10.0 ** (-_SPREAD_DOWNWARD_DB_PER_BAND * np.abs(offsets) / 10.0),
        10.0 ** (-_SPREAD_UPWARD_DB_PER_BAND * np.abs(offsets) / 10.0),
    )
    return offsets, gains


def masking_thresholds(
    power_spectrum: np.ndarray,
    cfg: DefenseConfig,
    sample_rate: int = 16000,
    top_hz: float | None = None,
) -> MaskingProfile:
    """Simplified psychoacoustic model.

    Bin powers are pooled into log-spaced bands, spread with an asymmetric
    two-sided exponential kernel (masking reaches further above a masker
    than below it), then scaled down by the quality factor.
    """
    power = np.atleast_2d(np.asarray(power_spectrum, dtype=np.float64))
    top = top_hz if top_hz is not None else sample_rate / 2.0
    bands = _bin_bands(power.shape[1], sample_rate, cfg.band_count, top)

    # representative per-bin energy per band (mean, not sum, so the threshold
    # reads directly as a per-coefficient noise allowance)
    band_energy = np.zeros((power.shape[0], cfg.band_count))
    valid = bands >= 0
    np.add.at(band_energy, (slice(None), bands[valid]), power[:, valid])
    bins_per_band = np.bincount(bands[valid], minlength=cfg.band_count)
    band_energy /= np.maximum(bins_per_band, 1)

    offsets, gains = _spreading_kernel()
    spread = np.zeros_like(band_energy)
    for offset, gain in zip(offsets, gains):
        # energy of band b contributes to band b - offset... shift source bands
        source = np.roll(band_energy, offset, axis=1)
        if offset > 0:
            source[:, :offset] = 0.0
        elif offset < 0:
            source[:, offset:] = 0.0
        spread += gain * source

    scale = 10.0 ** (-(cfg.quality + 4.0) / 10.0)
    floor = max(THRESHOLD_FLOOR, QUIET_THRESHOLD_POWER)
    return MaskingProfile(np.maximum(spread * scale, floor))


def _perceptual_round_trip(x: np.ndarray, sample_rate: int, cfg: DefenseConfig, quality: float, top_hz: float | None) -> np.ndarray:
    """Analysis, masked uniform quantization, synthesis; preserves length."""
    two_n = cfg.window_length
    n = two_n // 2
    n_frames = -(-len(x) // n) + 1  # lead-in pad of N plus tail pad to a multiple
    padded = np.zeros((n_frames + 1) * n)
    padded[n : n + len(x)] = x

    starts = np.arange(n_frames) * n
    frames = padded[starts[:, None] + np.arange(two_n)[None, :]]
    coeffs = (frames * _sine_window(two_n)) @ _mdct_basis(n).T  # (n_frames, N)

    local = DefenseConfig(
        method=cfg.method,
        quality=quality,
        window_length=cfg.window_length,
        band_count=cfg.band_count,
        external_command=cfg.external_command,
    )
    profile = masking_thresholds(coeffs**2, local, sample_rate=sample_rate, top_hz=top_hz)
    bands = _bin_bands(n, sample_rate, cfg.band_count, top_hz if top_hz is not None else sample_rate / 2.0)

    steps = np.sqrt(12.0 * profile.thresholds)  # noise power of a uniform quantizer is step^2 / 12
    quantized = np.zeros_like(coeffs)
    valid = bands >= 0
    per_bin_step = steps[:, bands[valid]]
    quantized[:, valid] = np.round(coeffs[:, valid] / per_bin_step) * per_bin_step

    synth = (quantized @ _mdct_basis(n)) * (2.0 / n) * _sine_window(two_n)
    out = np.zeros_like(padded)
    for i in range(n_frames):
        out[starts[i] : starts[i] + two_n] += synth[i]
    return np.clip(out[n : n + len(x)], -1.0, 1.0)


def _external_round_trip(clip: AudioClip, command_template: str) -> np.ndarray:
    with tempfile.TemporaryDirectory(prefix="adagio-codec-") as tmp:
        in_path = os.path.join(tmp, "in.wav")
        out_path = os.path.join(tmp, "out.wav")
        with open(in_path, "wb") as fh:
            fh.write(save_wav(clip))
        command = command_template.format(**{"in": in_path, "out": out_path})
        proc = subprocess.run(shlex.split(command), capture_output=True)
        if proc.returncode != 0:
            raise ExternalCodecFailed(
                f"command exited {proc.returncode}: {proc.stderr.decode(errors='replace')[:500]}"
            )
        try:
            with open(out_path, "rb") as fh:
                decoded = load_wav(fh.read())
        except (OSError, ValueError) as exc:
            raise ExternalCodecFailed(f"unreadable codec output: {exc}") from exc
    samples = decoded.samples
    if decoded.sample_rate != clip.sample_rate:
        decoded_at_rate = resample(decoded, clip.sample_rate)
        samples = decoded_at_rate.samples
    return samples


def _fit_length(x: np.ndarray, n: int) -> np.ndarray:
    if len(x) >= n:
        return x[:n]
    return np.pad(x, (0, n - len(x)))


def apply_defense(clip: AudioClip, cfg: DefenseConfig) -> AudioClip:
    """Run one defense over a clip and return the Defended child clip."""
    if cfg.method is DefenseMethod.PERCEPTUAL_WIDEBAND:
        out = _perceptual_round_trip(clip.samples, clip.sample_rate, cfg, cfg.quality, top_hz=None)
    elif cfg.method is DefenseMethod.NARROWBAND_SPEECH:
        narrow = resample(clip, _NARROWBAND_RATE)
        quality = max(cfg.quality - 2.0, 0.5)
        processed = _perceptual_round_trip(
            narrow.samples, _NARROWBAND_RATE, cfg, quality, top_hz=_NARROWBAND_TOP_HZ
        )
        restored = resample(
            AudioClip(
                samples=processed,
                sample_rate=_NARROWBAND_RATE,
                clip_id=clip.clip_id,
                version=clip.version,
                parent_id=clip.parent_id,
                label_text=clip.label_text,
            ),
            clip.sample_rate,
        )
        out = _fit_length(restored.samples, len(clip))
    elif cfg.method is DefenseMethod.EXTERNAL_CODEC:
        if not cfg.external_command:
            raise ExternalCodecFailed("external_command is not configured")
        out = _fit_length(_external_round_trip(clip, cfg.external_command), len(clip))
    else:  # pragma: no cover
        raise ValueError(f"unknown defense method {cfg.method}")
    return clip.derive(out, ClipVersion.DEFENDED)
