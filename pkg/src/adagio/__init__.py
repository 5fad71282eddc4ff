"""Desk-scale workbench for targeted audio adversarial attacks and
psychoacoustic compression defenses around a small recurrent CTC recognizer."""

from .audio_io import AudioClip, ClipVersion, load_wav, resample, save_wav
from .attack import AttackConfig, AttackResult, run_attack, snr
from .defense import DefenseConfig, DefenseMethod, apply_defense
from .features import FeatureConfig, FeatureMatrix, extract, extract_backward
from .harness import ExperimentConfig, ExperimentReport, run_experiment, write_instances, write_report
from .metrics import WerReport, targeted_success, wer
from .model import (
    Alphabet,
    LogitMatrix,
    ModelWeights,
    TrainConfig,
    Transcription,
    ctc_loss,
    forward,
    greedy_decode,
    load_weights,
    save_weights,
    synthesize_corpus,
    train,
    transcribe,
)

__version__ = "0.1.0"
