"""Transformer-SSM fusion layer: cross-attention from spectral frames to
text tokens, combined with the gated spectral recurrence by concatenation
plus a learned projection. Includes the two ablation variants."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .dsp import SpectralGrid, complex_from_pair, pair_from_complex
from .errors import InvalidArgument
from .params import ParamStore
from .ssm import compute_gate_tensors
from .textenc import TextEmbedding


class FusionVariant(enum.Enum):
    TRANSFORMER_SSM = "transformer_ssm"
    PURE_TRANSFORMER = "pure_transformer"
    PURE_SSM = "pure_ssm"


@dataclass(frozen=True)
class AttentionConfig:
    d_model: int
    d_head: int

    def __post_init__(self):
        if self.d_head < 1 or self.d_model < 1:
            raise InvalidArgument("attention dimensions must be positive")

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.d_head)


def flatten_pair(pair) -> ad.Tensor:
    """(T, F, C, 2) -> (T, 2*F*C); order: channel, then bin, then (re, im)."""
    t, f, c, _ = ad.value_of(pair).shape
    return ad.reshape(ad.transpose(pair, (0, 2, 1, 3)), (t, 2 * f * c))


def unflatten_pair(flat, f_bins: int, channels: int) -> ad.Tensor:
    t = ad.value_of(flat).shape[0]
    return ad.transpose(ad.reshape(flat, (t, channels, f_bins, 2)), (0, 2, 1, 3))


def cross_attention_tensors(frames, tokens, params: ParamStore,
                            cfg: AttentionConfig) -> ad.Tensor:
    """Single-head attention: queries from frames, keys/values from tokens."""
    if ad.value_of(tokens).shape[0] == 0:
        raise InvalidArgument("cross attention needs at least one text token")
    q = ad.matmul(frames, ad.transpose(params["attn.wq"], (1, 0)))
    k = ad.matmul(tokens, ad.transpose(params["attn.wk"], (1, 0)))
    v = ad.matmul(tokens, ad.transpose(params["attn.wv"], (1, 0)))
    scores = ad.mul(ad.matmul(q, ad.transpose(k, (1, 0))), cfg.scale)
    weights = ad.softmax(scores, axis=-1)
    context = ad.matmul(weights, v)
    return ad.matmul(context, ad.transpose(params["attn.wo"], (1, 0)))


def fuse_tensors(ssm_branch, attn_branch, params: ParamStore) -> ad.Tensor:
    """Concatenate the two branches per frame and apply the learned affine map."""
    sv, av = ad.value_of(ssm_branch), ad.value_of(attn_branch)
    if sv.shape != av.shape:
        raise InvalidArgument(f"branch shapes differ: {sv.shape} vs {av.shape}")
    stacked = ad.concat([ssm_branch, attn_branch], axis=1)
    w = params["fuse.weight"]
    b = params["fuse.bias"]
    return ad.add(ad.matmul(stacked, ad.transpose(w, (1, 0))), b)


def fusion_forward_tensors(pair, tokens, pooled, variant: FusionVariant,
                           params, cfg: AttentionConfig):
    """Full fusion layer on a (T, F, C, 2) spectral tensor.

    Returns (output pair tensor, hidden-state pair tensor or None).
    """
    t, f_bins, channels, _ = ad.value_of(pair).shape
    flat = flatten_pair(pair)
    hidden = None
    if variant in (FusionVariant.TRANSFORMER_SSM, FusionVariant.PURE_SSM):
        alpha, beta = compute_gate_tensors(pooled, params, f_bins, channels)
        hidden = ad.ssm_scan_pair(pair, alpha, beta)
        ssm_branch = flatten_pair(hidden)
    else:
        ssm_branch = np.zeros((t, cfg.d_model))
    if variant in (FusionVariant.TRANSFORMER_SSM, FusionVariant.PURE_TRANSFORMER):
        attn_branch = cross_attention_tensors(flat, tokens, params, cfg)
    else:
        attn_branch = np.zeros((t, cfg.d_model))
    fused = fuse_tensors(ssm_branch, attn_branch, params)
    return unflatten_pair(fused, f_bins, channels), hidden


# ---------------------------------------------------------------------------
# plain-array surfaces


def cross_attention(frames, text: TextEmbedding, params: ParamStore,
                    cfg: AttentionConfig) -> np.ndarray:
    return cross_attention_tensors(np.asarray(frames, dtype=np.float64),
                                   text.tokens, params, cfg).value


def fuse(ssm_branch, attn_branch, params: ParamStore) -> np.ndarray:
    return fuse_tensors(np.asarray(ssm_branch, dtype=np.float64),
                        np.asarray(attn_branch, dtype=np.float64), params).value


def attention_config_for(grid: SpectralGrid, d_head: int = 8) -> AttentionConfig:
    t, f_bins, channels = grid.data.shape
    return AttentionConfig(d_model=2 * f_bins * channels, d_head=d_head)


def transformer_ssm_forward(grid: SpectralGrid, text: TextEmbedding,
                            variant: FusionVariant, params: ParamStore,
                            cfg: AttentionConfig | None = None) -> SpectralGrid:
    if cfg is None:
        cfg = attention_config_for(grid)
    pair = pair_from_complex(grid.data)
    out_pair, _ = fusion_forward_tensors(pair, text.tokens, text.pooled,
                                         variant, params, cfg)
    return SpectralGrid(complex_from_pair(out_pair.value), grid.config,
                        grid.original_length)
