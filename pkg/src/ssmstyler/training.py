"""Adam optimizer, finite-difference gradient checker, synthetic style
corpus, and the deterministic toy training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .dsp import Waveform
from .errors import AbortStep, InvalidArgument
from .fusion import FusionVariant
from .losses import LossReport, LossWeights, make_report
from .model import ModelConfig, init_params, pipeline_losses, tensor_params, write_grads
from .params import ParamStore
from .textenc import tokenize

STYLE_WORDS = ("excited", "mysterious", "soothing", "angry")
CLASS_FREQS_HZ = (220.0, 330.0, 440.0)
# Pseudo-phoneme classes also differ in amplitude: phase-invariant frequency
# discrimination is out of reach for a tiny tanh encoder in 200 steps, and
# real phonemes differ in envelope as well as spectrum.
CLASS_AMPS = (0.7, 1.0, 1.3)


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise InvalidArgument("beta1/beta2 must lie in [0, 1)")


def adam_step(params: ParamStore, state: AdamState) -> None:
    """One bias-corrected Adam update; gradients are zeroed afterwards."""
    for name in params.names():
        g = params.grad(name)
        if not np.all(np.isfinite(g)):
            raise AbortStep(f"non-finite gradient for parameter {name!r}")
    state.step_count += 1
    t = state.step_count
    for name in params.names():
        g = params.grad(name)
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(g)
            v = np.zeros_like(g)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        params.set_value(name, params[name] - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    params.zero_grads()


# ---------------------------------------------------------------------------
# gradient checking


@dataclass(frozen=True)
class GradCheckEntry:
    name: str
    index: int
    analytic: float
    numeric: float
    rel_error: float


@dataclass(frozen=True)
class GradCheckReport:
    entries: tuple[GradCheckEntry, ...]

    @property
    def max_rel_error(self) -> float:
        return max(e.rel_error for e in self.entries)


def finite_diff_check(loss_fn, params: ParamStore, epsilon: float,
                      sample: int, seed: int = 0,
                      prefixes: tuple[str, ...] | None = None) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    `loss_fn(params, compute_grads)` must return the scalar loss and, when
    compute_grads is true, populate the store's gradient arrays. Relative
    error is |a - n| / max(|a|, |n|, 1e-12). When `prefixes` is given, indices
    are sampled only from parameters whose names match; otherwise a uniform
    sample over all indices would almost never land in the small arrays.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise InvalidArgument(f"epsilon {epsilon} outside [1e-7, 1e-3]")
    params.zero_grads()
    loss_fn(params, True)
    rng = np.random.default_rng(seed)
    names = params.names()
    if prefixes is not None:
        names = [n for n in names if n.startswith(prefixes)]
        if not names:
            raise InvalidArgument(f"no parameters match prefixes {prefixes}")
    sizes = np.array([params[n].size for n in names])
    offsets = np.cumsum(sizes)
    total = int(offsets[-1])
    picks = rng.choice(total, size=min(sample, total), replace=False)
    entries = []
    for flat_idx in sorted(int(i) for i in picks):
        which = int(np.searchsorted(offsets, flat_idx, side="right"))
        name = names[which]
        local = flat_idx - (offsets[which] - sizes[which])
        value = params[name]
        analytic = float(params.grad(name).ravel()[local])
        original = float(value.ravel()[local])
        value.ravel()[local] = original + epsilon
        up = loss_fn(params, False)
        value.ravel()[local] = original - epsilon
        down = loss_fn(params, False)
        value.ravel()[local] = original
        numeric = (up - down) / (2.0 * epsilon)
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-12)
        entries.append(GradCheckEntry(name, int(local), analytic, numeric, rel))
    return GradCheckReport(tuple(entries))


# ---------------------------------------------------------------------------
# synthetic corpus


@dataclass
class ToyExample:
    waveform: Waveform
    prompt: str
    frame_labels: np.ndarray
    style_id: int


def _segment_labels(rng: np.random.Generator, n_segments: int) -> np.ndarray:
    return rng.integers(0, len(CLASS_FREQS_HZ), size=n_segments)


def _style_prompt(rng: np.random.Generator, style_word: str) -> str:
    lead = ("", "a ", "very ", "a very ")[rng.integers(0, 4)]
    tail = ("", " tone", " voice", " speech")[rng.integers(0, 4)]
    return f"{lead}{style_word}{tail}".strip()


def generate_toy_example(rng: np.random.Generator, style_id: int,
                         config: ModelConfig, duration_s: float = 0.5) -> ToyExample:
    sr = config.sample_rate_hz
    n = int(round(sr * duration_s))
    n_segments = 5
    seg_len = n // n_segments
    seg_classes = _segment_labels(rng, n_segments)
    t = np.arange(n) / sr
    sample_labels = np.repeat(seg_classes, seg_len)
    sample_labels = np.pad(sample_labels, (0, n - sample_labels.size), mode="edge")
    base = np.array([CLASS_FREQS_HZ[c] for c in sample_labels])
    class_amp = np.array([CLASS_AMPS[c] for c in sample_labels])

    style_word = STYLE_WORDS[style_id]
    pitch_mul, amp_mul = 1.0, 1.0
    if style_word == "excited":
        pitch_mul, amp_mul = 1.5, 1.2
    elif style_word == "soothing":
        pitch_mul, amp_mul = 0.75, 0.7
    freqs = base * pitch_mul
    phase = 2.0 * np.pi * np.cumsum(freqs) / sr
    x = 0.6 * np.sin(phase) + 0.3 * np.sin(2.0 * phase)
    if style_word == "angry":
        x = x + 0.2 * np.sin(3.0 * phase) + 0.12 * np.sin(5.0 * phase)
    if style_word == "mysterious":
        x = x * (0.55 + 0.45 * np.sin(2.0 * np.pi * 3.0 * t))
    x = 0.35 * amp_mul * class_amp * x
    waveform = Waveform(np.clip(x, -1.0, 1.0), sr)

    t_latent = config.conv_spec.output_length(n)
    stride = config.conv_spec.stride_samples
    receptive = config.conv_spec.min_input_length()
    centers = np.minimum(np.arange(t_latent) * stride + receptive // 2, n - 1)
    frame_labels = sample_labels[centers].astype(np.intp)
    prompt = _style_prompt(rng, style_word)
    return ToyExample(waveform, prompt, frame_labels, style_id)


def generate_toy_corpus(seed: int, n_per_style: int,
                        config: ModelConfig | None = None) -> list[ToyExample]:
    """Deterministic corpus: n_per_style examples for each of the 4 styles."""
    if n_per_style < 1:
        raise InvalidArgument("n_per_style must be >= 1")
    if config is None:
        config = ModelConfig()
    rng = np.random.default_rng(seed)
    corpus = []
    for _ in range(n_per_style):
        for style_id in range(len(STYLE_WORDS)):
            corpus.append(generate_toy_example(rng, style_id, config))
    return corpus


# ---------------------------------------------------------------------------
# training loop


def train_step(params: ParamStore, example: ToyExample, config: ModelConfig,
               variant: FusionVariant, weights: LossWeights,
               state: AdamState) -> LossReport:
    tokens = tokenize(example.prompt, config.vocab)
    ptensors = tensor_params(params)
    out = pipeline_losses(ptensors, example.waveform.samples, tokens,
                          example.frame_labels, config, variant, weights)
    report = make_report(out.content, out.style, out.smooth, weights)
    out.total.backward()
    write_grads(params, ptensors)
    adam_step(params, state)
    return report


def train(corpus: list[ToyExample], epochs: int, weights: LossWeights, seed: int,
          variant: FusionVariant = FusionVariant.TRANSFORMER_SSM,
          config: ModelConfig | None = None,
          params: ParamStore | None = None,
          log=None) -> tuple[ParamStore, list[LossReport]]:
    """Per-example Adam training; fully deterministic given (seed, corpus)."""
    if not corpus:
        raise InvalidArgument("corpus is empty")
    if config is None:
        config = ModelConfig()
    if params is None:
        params = init_params(seed, config)
    state = AdamState()
    history: list[LossReport] = []
    for _ in range(epochs):
        for example in corpus:
            report = train_step(params, example, config, variant, weights, state)
            if not np.isfinite(report.total):
                raise AbortStep(f"non-finite loss at step {len(history)}")
            history.append(report)
            if log is not None:
                log(report.line(len(history) - 1))
    return params, history
