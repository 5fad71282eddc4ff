"""Iterative targeted perturbation of the raw waveform.

Adam on an additive perturbation, hard L-infinity projection each step, and
a shrinking bound after every exact-match success so the search keeps
looking for a quieter perturbation. The defense module is never consulted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .audio_io import AudioClip, ClipVersion
from .features import FeatureConfig, extract, extract_backward
from .model import (
    InfeasibleTarget,
    ModelWeights,
    backward,
    ctc_loss,
    forward,
    greedy_decode,
    min_frames_for_target,
)

# Reported for a perturbation of exactly zero.
SNR_INFINITE_DB = math.inf

ProgressCallback = Callable[[int, str, float], None]


class LengthMismatch(ValueError):
    pass


class NonFiniteLoss(RuntimeError):
    def __init__(self, iteration: int):
        super().__init__(f"loss became non-finite at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class AttackConfig:
    target_text: str
    iterations: int = 100
    epsilon: float = 0.05
    learning_rate: float = 0.002
    epsilon_decay: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError("epsilon must be in (0, 1]")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not (0.0 < self.epsilon_decay < 1.0):
            raise ValueError("epsilon_decay must be in (0, 1)")


@dataclass
class Perturbation:
    delta: np.ndarray
    epsilon_current: float
    best_delta: np.ndarray | None = None

    def project(self, clean: np.ndarray) -> None:
        np.clip(self.delta, -self.epsilon_current, self.epsilon_current, out=self.delta)
        np.clip(self.delta, -1.0 - clean, 1.0 - clean, out=self.delta)


@dataclass
class AttackResult:
    adversarial_clip: AudioClip
    success: bool
    final_transcription: str
    iterations_used: int
    snr_db: float
    loss_history: list[float] = field(default_factory=list)


def snr(clean: AudioClip, perturbed: AudioClip) -> float:
    """10 log10 of clean energy over perturbation energy, in decibels."""
    if len(clean) != len(perturbed):
        raise LengthMismatch(f"{len(clean)} vs {len(perturbed)} samples")
    noise = perturbed.samples - clean.samples
    noise_power = float(np.sum(noise**2))
    if noise_power == 0.0:
        return SNR_INFINITE_DB
    return 10.0 * math.log10(float(np.sum(clean.samples**2)) / noise_power)


def run_attack(
    clip: AudioClip,
    w: ModelWeights,
    cfg: AttackConfig,
    progress: ProgressCallback | None = None,
    feature_config: FeatureConfig = FeatureConfig(),
) -> AttackResult:
    """Optimize a perturbation until the model transcribes the target.

    The perturbation starts at zero. Every iteration runs the full forward
    chain, reports the current transcription through `progress`, and takes
    one Adam step on the CTC loss toward the target. After each exact-match
    success the infinity bound shrinks; the best (quietest) successful
    perturbation is kept and returned.
    """
    if not cfg.target_text:
        raise ValueError("target_text must be nonempty")
    target = cfg.target_text
    frames = feature_config.frame_count(len(clip))
    needed = min_frames_for_target(target, w.alphabet)
    if frames < needed:
        raise InfeasibleTarget(f"clip yields {frames} frames but target {target!r} needs {needed}")

    clean = clip.samples
    state = Perturbation(delta=np.zeros(len(clean)), epsilon_current=cfg.epsilon)
    adam_m = np.zeros(len(clean))
    adam_v = np.zeros(len(clean))
    best_linf: float | None = None
    loss_history: list[float] = []
    iterations_used = 0

    for iteration in range(1, cfg.iterations + 1):
        iterations_used = iteration
        candidate = AudioClip(
            samples=clean + state.delta,
            sample_rate=clip.sample_rate,
            clip_id=clip.clip_id,
            version=clip.version,
            parent_id=clip.parent_id,
            label_text=clip.label_text,
        )
        feats = extract(candidate, feature_config)
        logits = forward(feats, w)
        transcription = greedy_decode(logits).text
        loss, grad_logits = ctc_loss(logits, target)
        if not math.isfinite(loss):
            raise NonFiniteLoss(iteration)
        loss_history.append(loss)
        if progress is not None:
            progress(iteration, transcription, loss)

        if transcription == target:
            linf = float(np.max(np.abs(state.delta))) if len(state.delta) else 0.0
            if best_linf is None or linf < best_linf:
                best_linf = linf
                state.best_delta = state.delta.copy()
            state.epsilon_current = cfg.epsilon_decay * best_linf
            if state.epsilon_current == 0.0:
                break  # already transcribing the target with zero perturbation

        grad_features, _ = backward(feats, w, grad_logits)
        grad_samples = extract_backward(candidate, feature_config, grad_features)

        adam_m = 0.9 * adam_m + 0.1 * grad_samples
        adam_v = 0.999 * adam_v + 0.001 * grad_samples**2
        m_hat = adam_m / (1.0 - 0.9**iteration)
        v_hat = adam_v / (1.0 - 0.999**iteration)
        state.delta -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + 1e-8)
        state.project(clean)
        assert float(np.max(np.abs(state.delta), initial=0.0)) <= state.epsilon_current + 1e-12
        assert float(np.max(np.abs(clean + state.delta), initial=0.0)) <= 1.0 + 1e-12

    final_delta = state.best_delta if state.best_delta is not None else state.delta
    adversarial = clip.derive(clean + final_delta, ClipVersion.ATTACKED)
    final_transcription = greedy_decode(forward(extract(adversarial, feature_config), w)).text
    return AttackResult(
        adversarial_clip=adversarial,
        success=final_transcription == target,
        final_transcription=final_transcription,
        iterations_used=iterations_used,
        snr_db=snr(clip, adversarial),
        loss_history=loss_history,
    )
