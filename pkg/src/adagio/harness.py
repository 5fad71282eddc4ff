"""Batch experiment engine.

Reproduces the 100-samples-by-5-random-targets compression-defense protocol
at desk scale: attack every corpus clip toward several randomly drawn target
phrases, transcribe every adversarial clip under every defense, and report
micro-averaged WER plus exact-match success rates per defense.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .attack import AttackConfig, run_attack
from .audio_io import AudioClip, load_wav
from .defense import DefenseConfig, DefenseMethod, apply_defense
from .features import FeatureConfig
from .metrics import targeted_success, wer
from .model import ModelWeights, synthesize_corpus, transcribe

logger = logging.getLogger(__name__)

NO_DEFENSE = "none"

# Published full-scale reference results (DeepSpeech on Common Voice, 100
# samples x 5 targets). Stamped into report headers as context; the desk
# protocol reproduces the direction of these numbers, not their values.
FULL_SCALE_REFERENCE = {
    "none": {"wer_no_attack": 0.369, "wer_with_attack": 1.287, "targeted_success_rate": 0.9245},
    "amr": {"wer_no_attack": 0.488, "wer_with_attack": 0.666, "targeted_success_rate": 0.0},
    "mp3": {"wer_no_attack": 0.400, "wer_with_attack": 0.780, "targeted_success_rate": 0.0},
}

# verb x noun phrase grid: random (sample, target) pairs usually share one
# word, mirroring the one-word-swap usage scenario
DEFAULT_CORPUS_TEXTS = [
    "call joanna",
    "call marissa",
    "call oscar",
    "call ruby",
    "call delia",
    "stop joanna",
    "stop marissa",
    "stop oscar",
    "stop ruby",
    "stop delia",
    "play joanna",
    "play marissa",
    "play oscar",
    "play ruby",
    "play delia",
    "find joanna",
    "find marissa",
    "find oscar",
    "find ruby",
    "find delia",
]

_EXTRA_WORDS = [
    "river", "stone", "maple", "sunny", "quiet", "rapid", "amber", "cedar",
    "delta", "ember", "frost", "grove", "haven", "ivory", "jade", "khaki",
]


def default_corpus_texts(n: int, seed: int = 0) -> list[str]:
    """First n labels; extends the fixed list with seeded word pairs if needed."""
    if n <= len(DEFAULT_CORPUS_TEXTS):
        return DEFAULT_CORPUS_TEXTS[:n]
    texts = list(DEFAULT_CORPUS_TEXTS)
    rng = np.random.default_rng(seed)
    while len(texts) < n:
        pair = " ".join(rng.choice(_EXTRA_WORDS, size=2, replace=False))
        if pair not in texts:
            texts.append(pair)
    return texts


def default_defenses() -> tuple[DefenseConfig, ...]:
    return (
        DefenseConfig(method=DefenseMethod.NARROWBAND_SPEECH),
        DefenseConfig(method=DefenseMethod.PERCEPTUAL_WIDEBAND),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    n_samples: int = 20
    targets_per_sample: int = 3
    defenses: tuple[DefenseConfig, ...] = field(default_factory=default_defenses)
    attack: AttackConfig = field(default_factory=lambda: AttackConfig(target_text="", iterations=500))
    seed: int = 0
    corpus_source: str = "synthetic"  # or a directory of labeled WAVs
    parallelism: int = 1
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)


@dataclass(frozen=True)
class InstanceRecord:
    clip_id: str
    target: str
    defense: str
    transcription: str
    success: bool
    snr_db: float
    iterations: int


@dataclass(frozen=True)
class DefenseRow:
    defense: str
    wer_no_attack: float
    wer_with_attack: float
    targeted_success_rate: float  # quantized to 4 decimals


@dataclass(frozen=True)
class ExperimentReport:
    header: dict
    rows: tuple[DefenseRow, ...]
    instances: tuple[InstanceRecord, ...]


def _load_corpus(cfg: ExperimentConfig) -> list[tuple[AudioClip, str]]:
    if cfg.corpus_source == "synthetic":
        return synthesize_corpus(default_corpus_texts(cfg.n_samples, cfg.seed), cfg.seed)
    corpus = []
    for name in sorted(os.listdir(cfg.corpus_source)):
        if not name.endswith(".wav"):
            continue
        wav_path = os.path.join(cfg.corpus_source, name)
        label_path = wav_path[:-4] + ".txt"
        with open(label_path) as fh:
            text = fh.read().strip()
        with open(wav_path, "rb") as fh:
            clip = load_wav(fh.read())
        clip = replace(clip, clip_id=name[:-4], label_text=text)
        corpus.append((clip, text))
    if not corpus:
        raise ValueError(f"no labeled WAVs found in {cfg.corpus_source}")
    return corpus[: cfg.n_samples]


def _pick_targets(labels: list[str], own: str, count: int, rng: np.random.Generator) -> list[str]:
    pool = sorted(set(t for t in labels if t != own))
    if not pool:
        raise ValueError("corpus needs at least two distinct labels to draw targets")
    if count <= len(pool):
        picked = rng.choice(len(pool), size=count, replace=False)
    else:
        picked = rng.choice(len(pool), size=count, replace=True)
    return [pool[i] for i in picked]


def _defense_name(cfg: DefenseConfig) -> str:
    return cfg.method.value


def run_experiment(cfg: ExperimentConfig, weights: ModelWeights) -> ExperimentReport:
    """Full protocol: attack every sample toward every drawn target, then
    score transcriptions with and without each defense.

    Per-instance attack or defense failures are recorded as unsuccessful
    instances instead of aborting the run. Deterministic for a fixed seed,
    regardless of `parallelism`.
    """
    corpus = _load_corpus(cfg)
    labels = [text for _, text in corpus]
    rng = np.random.default_rng(cfg.seed)
    plan = [
        (clip, text, _pick_targets(labels, text, cfg.targets_per_sample, rng))
        for clip, text in corpus
    ]

    defense_names = [NO_DEFENSE] + [_defense_name(d) for d in cfg.defenses]
    clean_hyp: dict[str, list[tuple[str, str]]] = {name: [] for name in defense_names}
    for clip, text in corpus:
        clean_hyp[NO_DEFENSE].append((text, transcribe(clip, weights, cfg.feature_config).text))
        for defense in cfg.defenses:
            defended = apply_defense(clip, defense)
            clean_hyp[_defense_name(defense)].append(
                (text, transcribe(defended, weights, cfg.feature_config).text)
            )

    def attack_instance(task):
        clip, text, target = task
        try:
            result = run_attack(clip, weights, replace(cfg.attack, target_text=target), feature_config=cfg.feature_config)
            outcomes = {NO_DEFENSE: (result.final_transcription, result.snr_db, result.iterations_used)}
            for defense in cfg.defenses:
                defended = apply_defense(result.adversarial_clip, defense)
                outcomes[_defense_name(defense)] = (
                    transcribe(defended, weights, cfg.feature_config).text,
                    result.snr_db,
                    result.iterations_used,
                )
            return clip, text, target, outcomes
        except Exception:
            logger.exception("attack instance failed (clip %s, target %r)", clip.clip_id, target)
            failed = {name: ("", 0.0, 0) for name in defense_names}
            return clip, text, target, failed

    tasks = [(clip, text, target) for clip, text, targets in plan for target in targets]
    if cfg.parallelism > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            outcomes = list(pool.map(attack_instance, tasks))
    else:
        outcomes = [attack_instance(t) for t in tasks]

    instances = []
    adv_hyp: dict[str, list[tuple[str, str]]] = {name: [] for name in defense_names}
    for clip, text, target, per_defense in outcomes:
        for name in defense_names:
            transcription, snr_db, iterations = per_defense[name]
            adv_hyp[name].append((text, transcription))
            instances.append(
                InstanceRecord(
                    clip_id=clip.clip_id,
                    target=target,
                    defense=name,
                    transcription=transcription,
                    success=targeted_success(transcription, target),
                    snr_db=snr_db,
                    iterations=iterations,
                )
            )

    rows = tuple(
        DefenseRow(
            defense=name,
            wer_no_attack=_micro_wer(clean_hyp[name]),
            wer_with_attack=_micro_wer(adv_hyp[name]),
            targeted_success_rate=round(
                sum(1 for i in instances if i.defense == name and i.success)
                / max(sum(1 for i in instances if i.defense == name), 1),
                4,
            ),
        )
        for name in defense_names
    )
    header = {
        "seed": cfg.seed,
        "n_samples": len(corpus),
        "targets_per_sample": cfg.targets_per_sample,
        "attack_iterations": cfg.attack.iterations,
        "attack_epsilon": cfg.attack.epsilon,
        "wer_averaging": "micro (total edits / total reference words)",
        "full_scale_reference": FULL_SCALE_REFERENCE,
    }
    order = {name: k for k, name in enumerate(defense_names)}
    instances.sort(key=lambda i: (i.clip_id, i.target, order[i.defense]))
    return ExperimentReport(header=header, rows=rows, instances=tuple(instances))


def _micro_wer(pairs: list[tuple[str, str]]) -> float:
    edits = 0
    ref_words = 0
    for reference, hypothesis in pairs:
        report = wer(reference, hypothesis)
        edits += report.edits
        ref_words += report.ref_words
    return edits / ref_words if ref_words else 0.0


# --- report serialization -----------------------------------------------------

SUMMARY_COLUMNS = ["defense", "wer_no_attack", "wer_with_attack", "targeted_success_rate"]
INSTANCE_COLUMNS = ["clip_id", "target", "defense", "transcription", "success", "snr_db", "iterations"]


def render_summary_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    for key in ("seed", "n_samples", "targets_per_sample", "attack_iterations", "attack_epsilon", "wer_averaging"):
        buf.write(f"# {key}: {report.header[key]}\n")
    for name, values in report.header["full_scale_reference"].items():
        buf.write(
            f"# full-scale-reference {name}: wer_no_attack={values['wer_no_attack']} "
            f"wer_with_attack={values['wer_with_attack']} "
            f"targeted_success_rate={values['targeted_success_rate']:.4f}\n"
        )
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in report.rows:
        writer.writerow(
            [row.defense, repr(row.wer_no_attack), repr(row.wer_with_attack), f"{row.targeted_success_rate:.4f}"]
        )
    return buf.getvalue()


def parse_summary_csv(text: str) -> tuple[DefenseRow, ...]:
    lines = [line for line in text.splitlines() if line and not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if header != SUMMARY_COLUMNS:
        raise ValueError(f"unexpected summary columns: {header}")
    return tuple(
        DefenseRow(name, float(no_attack), float(with_attack), float(rate))
        for name, no_attack, with_attack, rate in reader
    )


def render_instances_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(INSTANCE_COLUMNS)
    for i in report.instances:
        writer.writerow(
            [i.clip_id, i.target, i.defense, i.transcription, str(i.success).lower(), repr(i.snr_db), i.iterations]
        )
    return buf.getvalue()


def write_report(report: ExperimentReport, path, format: str = "csv") -> None:
    """Summary table as CSV, or the whole report (header, rows, instances) as JSON."""
    if format == "csv":
        content = render_summary_csv(report)
    elif format == "json":
        content = json.dumps(
            {
                "header": report.header,
                "rows": [vars(r) for r in report.rows],
                "instances": [vars(i) for i in report.instances],
            },
            indent=2,
        )
    else:
        raise ValueError(f"unknown report format {format!r} (expected 'csv' or 'json')")
    with open(path, "w") as fh:
        fh.write(content)


def write_instances(report: ExperimentReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(render_instances_csv(report))
