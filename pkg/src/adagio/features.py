"""Differentiable log-mel front end.

Waveform -> overlapping Hann-windowed frames -> power spectrum -> triangular
mel filterbank (HTK scale) -> natural log with a floor. `extract_backward`
is the exact adjoint, so a loss on the features can be pushed all the way
back to individual samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio_io import PIPELINE_RATE, AudioClip


class ClipTooShort(ValueError):
    """Fewer samples than one analysis frame."""


class ShapeMismatch(ValueError):
    """Upstream gradient does not match the feature matrix shape."""


@dataclass(frozen=True)
class FeatureConfig:
    frame_length: int = 400  # 25 ms at 16 kHz
    hop: int = 160  # 10 ms
    fft_size: int = 512
    mel_bins: int = 40
    mel_low: float = 0.0
    mel_high: float = 8000.0
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.frame_length > self.fft_size:
            raise ValueError("frame_length must not exceed fft_size")
        if self.hop > self.frame_length:
            raise ValueError("hop must not exceed frame_length")
        if self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")
        if not (self.mel_low < self.mel_high <= PIPELINE_RATE / 2):
            raise ValueError("need mel_low < mel_high <= Nyquist")

    def frame_count(self, n_samples: int) -> int:
        if n_samples < self.frame_length:
            return 0
        return 1 + (n_samples - self.frame_length) // self.hop


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray  # (T, mel_bins)
    config: FeatureConfig = field(default_factory=FeatureConfig)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: FeatureConfig, sample_rate: int = PIPELINE_RATE) -> np.ndarray:
    """Triangular filters, shape (mel_bins, fft_size // 2 + 1)."""
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(cfg.mel_low), hz_to_mel(cfg.mel_high), cfg.mel_bins + 2))
    bin_hz = np.arange(cfg.fft_size // 2 + 1) * (sample_rate / cfg.fft_size)
    lower = edges_hz[:-2][:, None]
    center = edges_hz[1:-1][:, None]
    upper = edges_hz[2:][:, None]
    rising = (bin_hz[None, :] - lower) / np.maximum(center - lower, 1e-12)
    falling = (upper - bin_hz[None, :]) / np.maximum(upper - center, 1e-12)
    return np.maximum(0.0, np.minimum(rising, falling))


def mel_center_frequencies(cfg: FeatureConfig) -> np.ndarray:
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(cfg.mel_low), hz_to_mel(cfg.mel_high), cfg.mel_bins + 2))
    return edges_hz[1:-1]


def _hann(frame_length: int) -> np.ndarray:
    # periodic Hann
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(frame_length) / frame_length)


def _frame_indices(cfg: FeatureConfig, n_samples: int) -> np.ndarray:
    t = cfg.frame_count(n_samples)
    return np.arange(t)[:, None] * cfg.hop + np.arange(cfg.frame_length)[None, :]


def _forward_pass(clip: AudioClip, cfg: FeatureConfig):
    if clip.sample_rate != PIPELINE_RATE:
        raise ValueError(
            f"feature extraction expects {PIPELINE_RATE} Hz audio, got {clip.sample_rate}; resample explicitly"
        )
    if len(clip) < cfg.frame_length:
        raise ClipTooShort(f"{len(clip)} samples, need at least {cfg.frame_length}")
    window = _hann(cfg.frame_length)
    frames = clip.samples[_frame_indices(cfg, len(clip))] * window
    spectrum = np.fft.rfft(frames, n=cfg.fft_size, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    energy = power @ mel_filterbank(cfg).T
    return window, spectrum, energy


def extract(clip: AudioClip, cfg: FeatureConfig = FeatureConfig()) -> FeatureMatrix:
    _, _, energy = _forward_pass(clip, cfg)
    return FeatureMatrix(np.log(np.maximum(energy, cfg.log_floor)), cfg)


def extract_backward(clip: AudioClip, cfg: FeatureConfig, upstream_grad: np.ndarray) -> np.ndarray:
    """Gradient of <upstream_grad, extract(clip)> with respect to each sample.

    Chains log (clamped to zero below the floor), the linear filterbank, the
    power spectrum, the DFT and the window, then overlap-adds per-frame
    gradients back onto the sample axis.
    """
    upstream_grad = np.asarray(upstream_grad, dtype=np.float64)
    expected = (cfg.frame_count(len(clip)), cfg.mel_bins)
    if upstream_grad.shape != expected:
        raise ShapeMismatch(f"upstream grad shape {upstream_grad.shape}, expected {expected}")
    window, spectrum, energy = _forward_pass(clip, cfg)

    g_energy = np.where(energy >= cfg.log_floor, upstream_grad / np.maximum(energy, cfg.log_floor), 0.0)
    g_power = g_energy @ mel_filterbank(cfg)

    # Adjoint of the one-sided power spectrum: d<g, |X|^2>/dx = 2 Re(sum_k
    # g_k X_k e^{2 pi i k n / N}); realized with an inverse rFFT after
    # doubling the two non-mirrored edge bins.
    weighted = g_power * spectrum
    weighted[:, 0] *= 2.0
    weighted[:, -1] *= 2.0
    g_frames = np.fft.irfft(weighted, n=cfg.fft_size, axis=1) * cfg.fft_size
    g_frames = g_frames[:, : cfg.frame_length] * window

    grad = np.zeros(len(clip))
    np.add.at(grad, _frame_indices(cfg, len(clip)), g_frames)
    return grad
