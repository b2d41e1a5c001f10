"""Training objectives: frame-wise content classification, contrastive style
matching, hidden-state smoothness, and their weighted total."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import DegenerateEmbedding, InvalidArgument
from .params import ParamStore


@dataclass(frozen=True)
class LossWeights:
    lambda_content: float = 1.0
    lambda_style: float = 1.0
    lambda_smooth: float = 0.01

    def __post_init__(self):
        vals = (self.lambda_content, self.lambda_style, self.lambda_smooth)
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise InvalidArgument("loss weights must be finite and non-negative")


@dataclass(frozen=True)
class LossReport:
    content: float
    style: float
    smooth: float
    total: float

    def line(self, step: int) -> str:
        return (f"step={step} content={self.content:.6g} style={self.style:.6g} "
                f"smooth={self.smooth:.6g} total={self.total:.6g}")


def content_loss_tensor(frames, frame_labels, weight, bias) -> ad.Tensor:
    labels = np.asarray(frame_labels, dtype=np.intp)
    n_classes = ad.value_of(weight).shape[0]
    t = ad.value_of(frames).shape[0]
    if labels.shape != (t,):
        raise InvalidArgument(f"need one label per frame: {labels.shape} vs T={t}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InvalidArgument(f"label outside [0, {n_classes})")
    logits = ad.add(ad.matmul(frames, ad.transpose(weight, (1, 0))), bias)
    return ad.cross_entropy_mean(logits, labels)


def content_loss(latent_frames, frame_labels, params: ParamStore) -> float:
    frames = np.asarray(getattr(latent_frames, "frames", latent_frames), dtype=np.float64)
    return content_loss_tensor(frames, frame_labels,
                               params["content.weight"], params["content.bias"]).item()


def style_loss_tensor(audio_emb, text_emb) -> ad.Tensor:
    av, tv = ad.value_of(audio_emb), ad.value_of(text_emb)
    na, nt = float(np.linalg.norm(av)), float(np.linalg.norm(tv))
    if na == 0.0 or nt == 0.0:
        raise DegenerateEmbedding("style loss is undefined for zero-norm embeddings")
    cos = ad.div(ad.tsum(ad.mul(audio_emb, text_emb)), na * nt)
    return ad.sub(1.0, cos)


def style_loss(audio_emb, text_emb) -> float:
    """1 - cosine similarity; inputs are expected to be (near-)unit vectors."""
    return style_loss_tensor(np.asarray(audio_emb, dtype=np.float64),
                             np.asarray(text_emb, dtype=np.float64)).item()


def smoothness_loss_pair_tensor(h_pair) -> ad.Tensor:
    """Sum of squared moduli of consecutive hidden-state differences."""
    t = ad.value_of(h_pair).shape[0]
    if t < 2:
        return ad.mul(ad.tsum(h_pair), 0.0)
    diff = ad.sub(ad.tslice(h_pair, slice(1, None)), ad.tslice(h_pair, slice(0, -1)))
    return ad.tsum(ad.mul(diff, diff))


def smoothness_loss(h) -> float:
    states = np.asarray(getattr(h, "states", h))
    if states.shape[0] < 2:
        return 0.0
    diff = np.diff(states, axis=0)
    return float(np.sum(np.abs(diff) ** 2))


def total_loss(content: float, style: float, smooth: float,
               weights: LossWeights) -> float:
    for v in (content, style, smooth):
        if not np.isfinite(v):
            raise InvalidArgument("loss components must be finite")
    return (weights.lambda_content * content
            + weights.lambda_style * style
            + weights.lambda_smooth * smooth)


def make_report(content: float, style: float, smooth: float,
                weights: LossWeights) -> LossReport:
    return LossReport(content, style, smooth, total_loss(content, style, smooth, weights))
