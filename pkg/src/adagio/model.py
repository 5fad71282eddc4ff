"""Desk-scale recurrent CTC acoustic model.

A single tanh recurrence over normalized log-mel frames with an affine
readout per frame, trained with CTC. Backpropagation is written out by
hand (no autograd) so the attack can chain gradients down to raw samples.
Log-domain arithmetic throughout the loss keeps long utterances stable.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .audio_io import PIPELINE_RATE, AudioClip
from .features import FeatureConfig, FeatureMatrix, extract

logger = logging.getLogger(__name__)

ALPHABET_CHARACTERS = "abcdefghijklmnopqrstuvwxyz '"

WEIGHTS_MAGIC = b"ADAGIOW1"


class BadCharacter(ValueError):
    """Text contains a character outside the alphabet."""


class InfeasibleTarget(ValueError):
    """Too few frames to emit the blank-extended target."""


class DimensionMismatch(ValueError):
    pass


class Diverged(RuntimeError):
    """Training loss became non-finite."""


class BadMagic(ValueError):
    pass


class TruncatedFile(ValueError):
    pass


@dataclass(frozen=True)
class Alphabet:
    """Character inventory plus a trailing blank used only by CTC."""

    characters: str = ALPHABET_CHARACTERS

    def __post_init__(self):
        if len(set(self.characters)) != len(self.characters):
            raise ValueError("alphabet characters must be unique")

    @property
    def blank_index(self) -> int:
        return len(self.characters)

    @property
    def size(self) -> int:
        """Number of output classes including the blank."""
        return len(self.characters) + 1

    def encode(self, text: str) -> np.ndarray:
        try:
            return np.array([self.characters.index(c) for c in text], dtype=np.int64)
        except ValueError:
            bad = next(c for c in text if c not in self.characters)
            raise BadCharacter(f"character {bad!r} is not in the alphabet") from None

    def decode_indices(self, indices) -> str:
        return "".join(self.characters[i] for i in indices)


DEFAULT_ALPHABET = Alphabet()


@dataclass(frozen=True)
class LogitMatrix:
    """Per-frame unnormalized scores over the alphabet plus blank."""

    values: np.ndarray  # (T, alphabet.size)
    alphabet: Alphabet = DEFAULT_ALPHABET

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Transcription:
    text: str
    per_frame_argmax: np.ndarray | None = None


@dataclass
class ModelWeights:
    """All parameters plus the fixed feature normalization."""

    W_in: np.ndarray  # (H, F)
    W_rec: np.ndarray  # (H, H)
    b_rec: np.ndarray  # (H,)
    W_out: np.ndarray  # (A, H)
    b_out: np.ndarray  # (A,)
    feat_mean: np.ndarray  # (F,)
    feat_std: np.ndarray  # (F,)
    alphabet: Alphabet = DEFAULT_ALPHABET

    def __post_init__(self):
        h, f = self.W_in.shape
        if self.W_rec.shape != (h, h) or self.b_rec.shape != (h,):
            raise DimensionMismatch("recurrent tensor shapes are inconsistent")
        a = self.W_out.shape[0]
        if self.W_out.shape != (a, h) or self.b_out.shape != (a,):
            raise DimensionMismatch("output tensor shapes are inconsistent")
        if self.feat_mean.shape != (f,) or self.feat_std.shape != (f,):
            raise DimensionMismatch("normalization vector shapes are inconsistent")
        if a != self.alphabet.size:
            raise DimensionMismatch(f"output size {a} != alphabet size {self.alphabet.size}")
        for t in self.tensors():
            if not np.all(np.isfinite(t)):
                raise ValueError("weights must be finite")
        if np.any(self.feat_std <= 0):
            raise ValueError("feat_std entries must be positive")

    @property
    def hidden_size(self) -> int:
        return self.W_in.shape[0]

    @property
    def feature_size(self) -> int:
        return self.W_in.shape[1]

    @property
    def output_size(self) -> int:
        return self.W_out.shape[0]

    def tensors(self) -> tuple[np.ndarray, ...]:
        """Serialization order of every tensor in the weights file."""
        return (self.W_in, self.W_rec, self.b_rec, self.W_out, self.b_out, self.feat_mean, self.feat_std)


def _hidden_states(features: FeatureMatrix, w: ModelWeights):
    if features.n_features != w.feature_size:
        raise DimensionMismatch(f"feature size {features.n_features} != model input size {w.feature_size}")
    x_norm = (features.values - w.feat_mean) / w.feat_std
    pre = x_norm @ w.W_in.T + w.b_rec
    hs = np.empty((features.n_frames, w.hidden_size))
    h = np.zeros(w.hidden_size)
    for t in range(features.n_frames):
        h = np.tanh(pre[t] + w.W_rec @ h)
        hs[t] = h
    return x_norm, hs


def forward(features: FeatureMatrix, w: ModelWeights) -> LogitMatrix:
    """One logit row per input frame."""
    _, hs = _hidden_states(features, w)
    return LogitMatrix(hs @ w.W_out.T + w.b_out, w.alphabet)


@dataclass
class _GradientTensors:
    """ModelWeights-shaped gradient container (no positivity constraints)."""

    W_in: np.ndarray
    W_rec: np.ndarray
    b_rec: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray
    feat_mean: np.ndarray
    feat_std: np.ndarray

    def tensors(self) -> tuple[np.ndarray, ...]:
        return (self.W_in, self.W_rec, self.b_rec, self.W_out, self.b_out, self.feat_mean, self.feat_std)


def backward(features: FeatureMatrix, w: ModelWeights, grad_logits: np.ndarray):
    """Backpropagation through time of <grad_logits, forward(features, w)>.

    Returns (grad_features, grad_weights) where grad_features is taken with
    respect to the raw (unnormalized) feature values and grad_weights is a
    ModelWeights-shaped container that includes the normalization vectors.
    """
    grad_logits = np.asarray(grad_logits, dtype=np.float64)
    x_norm, hs = _hidden_states(features, w)
    t_frames = features.n_frames
    if grad_logits.shape != (t_frames, w.output_size):
        raise DimensionMismatch(f"grad_logits shape {grad_logits.shape} != {(t_frames, w.output_size)}")

    g_w_out = grad_logits.T @ hs
    g_b_out = grad_logits.sum(axis=0)

    g_pre = np.empty_like(hs)
    carry = np.zeros(w.hidden_size)
    for t in range(t_frames - 1, -1, -1):
        g_h = grad_logits[t] @ w.W_out + carry
        g_pre[t] = g_h * (1.0 - hs[t] ** 2)
        carry = w.W_rec.T @ g_pre[t]

    h_prev = np.vstack([np.zeros(w.hidden_size), hs[:-1]])
    g_w_in = g_pre.T @ x_norm
    g_w_rec = g_pre.T @ h_prev
    g_b_rec = g_pre.sum(axis=0)

    g_x_norm = g_pre @ w.W_in
    grad_features = g_x_norm / w.feat_std
    g_mean = -grad_features.sum(axis=0)
    g_std = -(g_x_norm * x_norm / w.feat_std).sum(axis=0)

    return grad_features, _GradientTensors(g_w_in, g_w_rec, g_b_rec, g_w_out, g_b_out, g_mean, g_std)


def greedy_decode(logits: LogitMatrix) -> Transcription:
    """Best-path CTC decoding: argmax, collapse repeats, drop blanks."""
    path = np.argmax(logits.values, axis=1)
    blank = logits.alphabet.blank_index
    chars = []
    previous = blank
    for index in path:
        if index != blank and index != previous:
            chars.append(logits.alphabet.characters[index])
        previous = index
    return Transcription(text="".join(chars), per_frame_argmax=path)


def min_frames_for_target(target: str, alphabet: Alphabet = DEFAULT_ALPHABET) -> int:
    """Smallest T that can emit the target under CTC path rules."""
    labels = alphabet.encode(target)
    repeats = int(np.sum(labels[1:] == labels[:-1])) if len(labels) > 1 else 0
    return len(labels) + repeats


def _log_softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def ctc_loss(logits: LogitMatrix, target: str) -> tuple[float, np.ndarray]:
    """Negative log-likelihood of the target plus its exact logit gradient.

    Forward-backward over the blank-extended target in log space. The
    gradient is softmax minus per-class posterior occupancy.
    """
    alphabet = logits.alphabet
    labels = alphabet.encode(target)
    if len(labels) == 0:
        raise InfeasibleTarget("target must contain at least one character")
    t_frames = logits.n_frames
    if t_frames < min_frames_for_target(target, alphabet):
        raise InfeasibleTarget(
            f"{t_frames} frames cannot emit {target!r} (needs {min_frames_for_target(target, alphabet)})"
        )

    blank = alphabet.blank_index
    ext = np.empty(2 * len(labels) + 1, dtype=np.int64)
    ext[0::2] = blank
    ext[1::2] = labels
    s_states = len(ext)

    # skip transition s-2 -> s is legal when it does not jump over a needed blank
    can_skip = np.zeros(s_states, dtype=bool)
    can_skip[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])

    log_probs = _log_softmax(logits.values)
    emit = log_probs[:, ext]  # (T, S)

    neg_inf = -np.inf
    alpha = np.full((t_frames, s_states), neg_inf)
    alpha[0, 0] = emit[0, 0]
    if s_states > 1:
        alpha[0, 1] = emit[0, 1]
    with np.errstate(invalid="ignore"):
        for t in range(1, t_frames):
            stay = alpha[t - 1]
            step = np.concatenate(([neg_inf], alpha[t - 1, :-1]))
            skip = np.concatenate(([neg_inf, neg_inf], alpha[t - 1, :-2]))
            skip = np.where(can_skip, skip, neg_inf)
            alpha[t] = np.logaddexp(np.logaddexp(stay, step), skip) + emit[t]

        log_z = np.logaddexp(alpha[-1, -1], alpha[-1, -2]) if s_states > 1 else alpha[-1, -1]
        if not np.isfinite(log_z):
            raise InfeasibleTarget("target has no feasible alignment")

        # beta excludes the emission at t, so alpha*beta sums complete paths
        beta = np.full((t_frames, s_states), neg_inf)
        beta[-1, -1] = 0.0
        if s_states > 1:
            beta[-1, -2] = 0.0
        for t in range(t_frames - 2, -1, -1):
            nxt = beta[t + 1] + emit[t + 1]
            stay = nxt
            step = np.concatenate((nxt[1:], [neg_inf]))
            skip = np.concatenate((nxt[2:], [neg_inf, neg_inf]))
            skip_ok = np.zeros(s_states, dtype=bool)
            skip_ok[:-2] = can_skip[2:]
            skip = np.where(skip_ok, skip, neg_inf)
            beta[t] = np.logaddexp(np.logaddexp(stay, step), skip)

        log_occupancy_states = alpha + beta - log_z  # (T, S)
        occupancy = np.zeros_like(logits.values)
        state_occ = np.exp(log_occupancy_states)
        np.add.at(occupancy, (slice(None), ext), state_occ)

    grad = np.exp(log_probs) - occupancy
    return float(-log_z), grad


def transcribe(clip: AudioClip, w: ModelWeights, feature_config: FeatureConfig = FeatureConfig()) -> Transcription:
    return greedy_decode(forward(extract(clip, feature_config), w))


# --- synthetic corpus -------------------------------------------------------

CHAR_DURATION_S = 0.120
GAP_DURATION_S = 0.030
CORPUS_NOISE_SNR_DB = 40.0
_PARTIALS_PER_CHAR = 3
_PARTIAL_BAND_HZ = (200.0, 3400.0)
# Each partial stays within the attack's default amplitude budget, so a
# bounded perturbation can fully rewrite a character; the compression noise
# floor sits far below either scale.
_PARTIAL_AMPLITUDE = 0.1


def character_partials(alphabet: Alphabet = DEFAULT_ALPHABET) -> np.ndarray:
    """Per-character sine partial frequencies, fixed for all time.

    Deterministic in the character index alone (each index seeds its own
    draw), so signatures do not depend on corpus composition, ordering, or
    corpus seeds.
    """
    freqs = np.empty((len(alphabet.characters), _PARTIALS_PER_CHAR))
    for index in range(len(alphabet.characters)):
        rng = np.random.default_rng(0xAD_A610 + index)
        freqs[index] = np.sort(rng.uniform(*_PARTIAL_BAND_HZ, size=_PARTIALS_PER_CHAR))
    return freqs


def _band_limited_noise(n: int, rng: np.random.Generator, sample_rate: int) -> np.ndarray:
    """Unit-power Gaussian noise confined to the signature band.

    Keeping the noise inside the band the characters occupy means the rest
    of the spectrum is genuinely silent, for clean and compressed audio
    alike.
    """
    white = rng.normal(0.0, 1.0, size=n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    spectrum[(freqs < _PARTIAL_BAND_HZ[0]) | (freqs > _PARTIAL_BAND_HZ[1])] = 0.0
    shaped = np.fft.irfft(spectrum, n=n)
    return shaped / max(float(np.std(shaped)), 1e-12)


def synthesize_utterance(
    text: str,
    rng: np.random.Generator,
    sample_rate: int = PIPELINE_RATE,
    alphabet: Alphabet = DEFAULT_ALPHABET,
) -> np.ndarray:
    """Toy speech: one 120 ms three-partial signature per character, 30 ms gaps."""
    if not text:
        raise ValueError("utterance text must contain at least one character")
    labels = alphabet.encode(text)
    partials = character_partials(alphabet)
    char_len = int(round(CHAR_DURATION_S * sample_rate))
    gap_len = int(round(GAP_DURATION_S * sample_rate))
    envelope = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(char_len) / char_len)
    t = np.arange(char_len) / sample_rate

    pieces = [np.zeros(gap_len)]
    for label in labels:
        tone = np.zeros(char_len)
        for f in partials[label]:
            tone += _PARTIAL_AMPLITUDE * np.sin(2.0 * np.pi * f * t)
        pieces.append(tone * envelope)
        pieces.append(np.zeros(gap_len))
    clean = np.concatenate(pieces)

    signal_power = float(np.mean(clean**2))
    noise_std = np.sqrt(signal_power / 10.0 ** (CORPUS_NOISE_SNR_DB / 10.0))
    return clean + noise_std * _band_limited_noise(len(clean), rng, sample_rate)


def synthesize_corpus(texts: list[str], seed: int) -> list[tuple[AudioClip, str]]:
    """Deterministic labeled corpus; same texts and seed give identical audio."""
    rng = np.random.default_rng(seed)
    corpus = []
    for i, text in enumerate(texts):
        samples = synthesize_utterance(text, rng)
        clip = AudioClip(samples=samples, clip_id=f"synth-{i:03d}", label_text=text)
        corpus.append((clip, text))
    return corpus


# --- training ---------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    hidden_size: int = 128
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip: float = 5.0
    max_epochs: int = 800
    target_wer: float = 0.0  # negative disables the early stop
    # the stop also waits for the augmentation pool to reach this WER; a
    # looser pool target leaves margins soft enough to study attacks
    pool_target_wer: float = 0.2
    eval_every: int = 10
    seed: int = 0
    # Each epoch trains on a per-utterance random pick from {clean} plus
    # compressed variants, so the recognizer tolerates codec-grade
    # requantization the way a full-scale model would. 0 trains clean-only.
    augment_variants: int = 6
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)


def _init_weights(cfg: TrainConfig, mean: np.ndarray, std: np.ndarray, alphabet: Alphabet) -> ModelWeights:
    rng = np.random.default_rng(cfg.seed)
    h, f, a = cfg.hidden_size, len(mean), alphabet.size
    scale_in = 1.0 / np.sqrt(f)
    scale_rec = 1.0 / np.sqrt(h)
    return ModelWeights(
        W_in=rng.uniform(-scale_in, scale_in, size=(h, f)),
        W_rec=rng.uniform(-scale_rec, scale_rec, size=(h, h)),
        b_rec=np.zeros(h),
        W_out=rng.uniform(-scale_rec, scale_rec, size=(a, h)),
        b_out=np.zeros(a),
        feat_mean=mean,
        feat_std=std,
        alphabet=alphabet,
    )


def _corpus_wer(feature_list, texts, w) -> float:
    from .metrics import wer

    edits = 0
    ref_words = 0
    for features, text in zip(feature_list, texts):
        report = wer(text, greedy_decode(forward(features, w)).text)
        edits += report.edits
        ref_words += report.ref_words
    return edits / ref_words


def _pool_wer(variant_pool, texts, w) -> float:
    """Worst greedy-decode WER across the augmentation pool columns."""
    worst = 0.0
    for column in range(max(len(v) for v in variant_pool)):
        features = [variants[min(column, len(variants) - 1)] for variants in variant_pool]
        worst = max(worst, _corpus_wer(features, texts, w))
    return worst


def _noisy_copy(clip: AudioClip, snr_db: float, seed: int) -> AudioClip:
    rng = np.random.default_rng(seed)
    power = float(np.mean(clip.samples**2))
    noise = rng.normal(0.0, np.sqrt(power / 10.0 ** (snr_db / 10.0)), size=len(clip))
    return AudioClip(samples=clip.samples + noise, sample_rate=clip.sample_rate,
                     clip_id=clip.clip_id, version=clip.version,
                     parent_id=clip.parent_id, label_text=clip.label_text)


def _augmentation_variants(clip: AudioClip, count: int, feature_config: FeatureConfig) -> list[FeatureMatrix]:
    """Features of deterministically corrupted copies of a clip.

    Compression variants teach tolerance of codec-grade requantization;
    additive-noise variants keep the recognizer transcribing (rather than
    emitting nothing) when inputs drift off the clean manifold.
    """
    from .defense import DefenseConfig, DefenseMethod, apply_defense

    base_seed = int.from_bytes(clip.clip_id.encode()[:4].ljust(4, b"\0"), "little")
    mp3 = DefenseConfig(method=DefenseMethod.PERCEPTUAL_WIDEBAND, quality=5.0)
    amr = DefenseConfig(method=DefenseMethod.NARROWBAND_SPEECH, quality=5.5)
    recipes = [
        lambda: apply_defense(clip, mp3),
        lambda: apply_defense(clip, amr),
        lambda: _noisy_copy(clip, 28.0, base_seed),
        lambda: _noisy_copy(clip, 20.0, base_seed + 1),
        # compressed noisy copies: the state a defended adversarial clip is in
        lambda: apply_defense(_noisy_copy(clip, 22.0, base_seed + 2), mp3),
        lambda: apply_defense(_noisy_copy(clip, 22.0, base_seed + 3), amr),
        lambda: apply_defense(clip, DefenseConfig(method=DefenseMethod.PERCEPTUAL_WIDEBAND, quality=7.5)),
        lambda: apply_defense(clip, DefenseConfig(method=DefenseMethod.NARROWBAND_SPEECH, quality=7.5)),
    ]
    return [extract(make(), feature_config) for make in recipes[:count]]


def train(
    corpus: list[tuple[AudioClip, str]],
    cfg: TrainConfig = TrainConfig(),
    alphabet: Alphabet = DEFAULT_ALPHABET,
) -> ModelWeights:
    """Adam on the mean CTC loss over the corpus.

    Deterministic for a fixed seed. Stops early once the corpus greedy-decode
    WER reaches cfg.target_wer. The returned weights are rounded to float32
    so they survive the weights-file round trip bit for bit.
    """
    if not corpus:
        raise ValueError("corpus must be nonempty")
    texts = [text for _, text in corpus]
    for text in texts:
        alphabet.encode(text)

    feature_list = [extract(clip, cfg.feature_config) for clip, _ in corpus]
    all_frames = np.concatenate([f.values for f in feature_list], axis=0)
    mean = all_frames.mean(axis=0)
    std = np.maximum(all_frames.std(axis=0), 1e-3)

    variant_pool = [
        [clean] + (_augmentation_variants(clip, cfg.augment_variants, cfg.feature_config) if cfg.augment_variants else [])
        for (clip, _), clean in zip(corpus, feature_list)
    ]
    augment_rng = np.random.default_rng(cfg.seed)

    w = _init_weights(cfg, mean, std, alphabet)
    trainable = ("W_in", "W_rec", "b_rec", "W_out", "b_out")
    adam_m = {k: np.zeros_like(getattr(w, k)) for k in trainable}
    adam_v = {k: np.zeros_like(getattr(w, k)) for k in trainable}
    step = 0

    for epoch in range(1, cfg.max_epochs + 1):
        grads = {k: np.zeros_like(getattr(w, k)) for k in trainable}
        total_loss = 0.0
        for variants, text in zip(variant_pool, texts):
            # half the draws train on the clean utterance, half on a variant
            if len(variants) == 1 or augment_rng.random() < 0.5:
                features = variants[0]
            else:
                features = variants[1 + augment_rng.integers(len(variants) - 1)]
            logits = forward(features, w)
            loss, grad_logits = ctc_loss(logits, text)
            total_loss += loss
            _, gw = backward(features, w, grad_logits / len(corpus))
            for k in trainable:
                grads[k] += getattr(gw, k)
        mean_loss = total_loss / len(corpus)
        if not np.isfinite(mean_loss):
            raise Diverged(f"mean CTC loss became {mean_loss} at epoch {epoch}")

        norm = np.sqrt(sum(float(np.sum(g**2)) for g in grads.values()))
        if norm > cfg.grad_clip:
            for k in trainable:
                grads[k] *= cfg.grad_clip / norm

        step += 1
        for k in trainable:
            adam_m[k] = cfg.beta1 * adam_m[k] + (1.0 - cfg.beta1) * grads[k]
            adam_v[k] = cfg.beta2 * adam_v[k] + (1.0 - cfg.beta2) * grads[k] ** 2
            m_hat = adam_m[k] / (1.0 - cfg.beta1**step)
            v_hat = adam_v[k] / (1.0 - cfg.beta2**step)
            getattr(w, k)[...] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)

        if epoch % cfg.eval_every == 0 or epoch == cfg.max_epochs:
            current_wer = _corpus_wer(feature_list, texts, w)
            logger.info("epoch %d: mean loss %.4f, corpus WER %.4f", epoch, mean_loss, current_wer)
            # the early stop also waits for the corrupted variants, else the
            # recognizer would freeze before it is robust to them
            if current_wer <= cfg.target_wer and (
                cfg.augment_variants == 0 or _pool_wer(variant_pool, texts, w) <= cfg.pool_target_wer
            ):
                break

    return ModelWeights(
        **{k: getattr(w, k).astype(np.float32).astype(np.float64) for k in trainable},
        feat_mean=w.feat_mean.astype(np.float32).astype(np.float64),
        feat_std=w.feat_std.astype(np.float32).astype(np.float64),
        alphabet=alphabet,
    )


# --- weight serialization ----------------------------------------------------


def weights_to_bytes(w: ModelWeights) -> bytes:
    header = WEIGHTS_MAGIC + struct.pack("<III", w.hidden_size, w.feature_size, w.output_size)
    return header + b"".join(np.ascontiguousarray(t, dtype="<f4").tobytes() for t in w.tensors())


def weights_from_bytes(data: bytes, alphabet: Alphabet = DEFAULT_ALPHABET) -> ModelWeights:
    if len(data) < len(WEIGHTS_MAGIC) or data[: len(WEIGHTS_MAGIC)] != WEIGHTS_MAGIC:
        raise BadMagic("not a weights file (bad magic)")
    offset = len(WEIGHTS_MAGIC)
    if len(data) < offset + 12:
        raise TruncatedFile("missing dimension header")
    h, f, a = struct.unpack_from("<III", data, offset)
    if h == 0 or f == 0 or a == 0:
        raise DimensionMismatch("zero dimension in header")
    if a != alphabet.size:
        raise DimensionMismatch(f"file outputs {a} classes, alphabet needs {alphabet.size}")
    offset += 12
    shapes = [(h, f), (h, h), (h,), (a, h), (a,), (f,), (f,)]
    tensors = []
    for shape in shapes:
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(data):
            raise TruncatedFile(f"tensor of shape {shape} is cut short")
        tensors.append(np.frombuffer(data, dtype="<f4", count=count, offset=offset).astype(np.float64).reshape(shape))
        offset = end
    if offset != len(data):
        raise DimensionMismatch("trailing bytes after the last tensor")
    return ModelWeights(*tensors, alphabet=alphabet)


def save_weights(w: ModelWeights, path) -> None:
    with open(path, "wb") as fh:
        fh.write(weights_to_bytes(w))


def load_weights(path, alphabet: Alphabet = DEFAULT_ALPHABET) -> ModelWeights:
    with open(path, "rb") as fh:
        return weights_from_bytes(fh.read(), alphabet)
