"""Model configuration, deterministic parameter initialization, and the
end-to-end differentiable pipeline shared by training, gradient checking,
evaluation, and style transfer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .decoder import DecoderSpec, decode_waveform_tensor, default_decoder_spec
from .dsp import StftConfig, istft_pair, stft_pair
from .errors import InvalidConfig
from .fusion import AttentionConfig, FusionVariant, fusion_forward_tensors
from .losses import LossWeights, content_loss_tensor, smoothness_loss_pair_tensor, style_loss_tensor
from .params import ParamStore
from .speech import ConvSpec, default_conv_spec, encode_speech_tensor, project_style_audio_tensor
from .ssm import compute_gate_tensors  # noqa: F401  (re-exported for callers)
from .textenc import (TokenSequence, Vocabulary, embed_text_tensors, load_vocabulary,
                      project_style_tensors)


@dataclass(frozen=True)
class ModelConfig:
    sample_rate_hz: int = 8000
    d_text: int = 16
    d_style: int = 8
    d_head: int = 8
    n_classes: int = 3
    d_latent: int = 8
    stft: StftConfig = field(default_factory=StftConfig)
    conv_spec: ConvSpec = field(default_factory=default_conv_spec)
    decoder_spec: DecoderSpec = field(default_factory=default_decoder_spec)
    vocab: Vocabulary = field(default_factory=load_vocabulary)

    def __post_init__(self):
        if self.conv_spec.layers[-1].out_channels != self.d_latent:
            raise InvalidConfig("encoder output channels must equal d_latent")
        if self.decoder_spec.total_upsample != self.conv_spec.stride_samples:
            raise InvalidConfig("decoder upsample product must equal encoder stride")

    @property
    def f_bins(self) -> int:
        return self.stft.f_bins

    @property
    def d_model(self) -> int:
        return 2 * self.f_bins * self.d_latent

    @property
    def attention(self) -> AttentionConfig:
        return AttentionConfig(d_model=self.d_model, d_head=self.d_head)


def param_shapes(config: ModelConfig) -> dict[str, tuple[tuple[int, ...], int]]:
    """Ordered map name -> (shape, fan_in); fan_in 0 marks a zero-init bias."""
    lanes = config.f_bins * config.d_latent
    shapes: dict[str, tuple[tuple[int, ...], int]] = {}
    shapes["text.embedding"] = ((len(config.vocab), config.d_text), config.d_text)
    for i, layer in enumerate(config.conv_spec.layers):
        shapes[f"enc.layer{i}.weight"] = (
            (layer.out_channels, layer.in_channels, layer.kernel_size),
            layer.in_channels * layer.kernel_size,
        )
        shapes[f"enc.layer{i}.bias"] = ((layer.out_channels,), 0)
    for gate in ("alpha", "beta"):
        shapes[f"gate.{gate}.weight"] = ((lanes, config.d_text), config.d_text)
        shapes[f"gate.{gate}.bias"] = ((lanes,), 0)
    shapes["attn.wq"] = ((config.d_head, config.d_model), config.d_model)
    shapes["attn.wk"] = ((config.d_head, config.d_text), config.d_text)
    shapes["attn.wv"] = ((config.d_head, config.d_text), config.d_text)
    shapes["attn.wo"] = ((config.d_model, config.d_head), config.d_head)
    shapes["fuse.weight"] = ((config.d_model, 2 * config.d_model), 2 * config.d_model)
    shapes["fuse.bias"] = ((config.d_model,), 0)
    for i, layer in enumerate(config.decoder_spec.layers):
        shapes[f"dec.layer{i}.weight"] = (
            (layer.out_channels, layer.in_channels, layer.kernel_size),
            layer.in_channels * layer.kernel_size,
        )
        shapes[f"dec.layer{i}.bias"] = ((layer.out_channels,), 0)
    shapes["phi_text.weight"] = ((config.d_style, config.d_text), config.d_text)
    shapes["phi_text.bias"] = ((config.d_style,), 0)
    shapes["phi_audio.weight"] = ((config.d_style, config.d_latent), config.d_latent)
    shapes["phi_audio.bias"] = ((config.d_style,), 0)
    shapes["content.weight"] = ((config.n_classes, config.d_latent), config.d_latent)
    shapes["content.bias"] = ((config.n_classes,), 0)
    return shapes


def init_params(seed: int, config: ModelConfig) -> ParamStore:
    """Uniform [-a, a] weights with a = sqrt(1/fan_in); all biases zero."""
    rng = np.random.default_rng(seed)
    store = ParamStore()
    for name, (shape, fan_in) in param_shapes(config).items():
        if fan_in == 0:
            store.add(name, np.zeros(shape))
        else:
            bound = np.sqrt(1.0 / fan_in)
            store.add(name, rng.uniform(-bound, bound, size=shape))
    return store


def tensor_params(store: ParamStore) -> dict[str, ad.Tensor]:
    return {name: ad.Tensor(store[name]) for name in store.names()}


def write_grads(store: ParamStore, tensors: dict[str, ad.Tensor]) -> None:
    for name, t in tensors.items():
        if t.grad is not None:
            store.set_grad(name, store.grad(name) + t.grad)


@dataclass
class PipelineOutputs:
    total: ad.Tensor
    content: float
    style: float
    smooth: float
    latent_out: ad.Tensor
    audio_emb: ad.Tensor
    text_emb: ad.Tensor
    fused_pair: ad.Tensor


def stft_multi_tensor(latent, config: StftConfig) -> ad.Tensor:
    """Per-channel differentiable STFT stacked into a (T, F, C, 2) tensor."""
    t_latent, channels = ad.value_of(latent).shape
    cols = []
    for c in range(channels):
        pair = stft_pair(ad.tslice(latent, (slice(None), c)), config)
        t_frames, f_bins, _ = pair.value.shape
        cols.append(ad.reshape(pair, (t_frames, f_bins, 1, 2)))
    return ad.concat(cols, axis=2)


def latent_from_pair_tensor(pair, config: StftConfig, original_length: int) -> ad.Tensor:
    channels = ad.value_of(pair).shape[2]
    cols = []
    for c in range(channels):
        sig = istft_pair(ad.tslice(pair, (slice(None), slice(None), c)),
                         config, original_length)
        cols.append(ad.reshape(sig, (original_length, 1)))
    return ad.concat(cols, axis=1)


def pipeline_losses(ptensors, samples, tokens: TokenSequence, frame_labels,
                    config: ModelConfig, variant: FusionVariant,
                    weights: LossWeights,
                    decoder_term_weight: float = 0.0) -> PipelineOutputs:
    """Forward pass producing the weighted training objective as a Tensor.

    `decoder_term_weight` > 0 adds a mean-square penalty on the pre-clamp
    decoded waveform so gradient checks exercise the decoder stack too.
    """
    z = encode_speech_tensor(samples, config.conv_spec, ptensors)
    t_latent = z.value.shape[0]
    grid_pair = stft_multi_tensor(z, config.stft)
    token_rows, pooled = embed_text_tensors(tokens, ptensors["text.embedding"])
    fused_pair, hidden = fusion_forward_tensors(grid_pair, token_rows, pooled,
                                                variant, ptensors, config.attention)
    latent_out = latent_from_pair_tensor(fused_pair, config.stft, t_latent)

    content = content_loss_tensor(latent_out, frame_labels,
                                  ptensors["content.weight"], ptensors["content.bias"])
    audio_emb = project_style_audio_tensor(latent_out, ptensors)
    text_emb = project_style_tensors(pooled, ptensors["phi_text.weight"],
                                     ptensors["phi_text.bias"])
    style = style_loss_tensor(audio_emb, text_emb)
    if hidden is not None:
        smooth = smoothness_loss_pair_tensor(hidden)
    else:
        smooth = ad.Tensor(0.0)

    total = ad.add(ad.add(ad.mul(content, weights.lambda_content),
                          ad.mul(style, weights.lambda_style)),
                   ad.mul(smooth, weights.lambda_smooth))
    if decoder_term_weight > 0.0:
        wave_pre = decode_waveform_tensor(latent_out, config.decoder_spec,
                                          ptensors, clamp=False)
        total = ad.add(total, ad.mul(ad.tmean(ad.mul(wave_pre, wave_pre)),
                                     decoder_term_weight))
    return PipelineOutputs(total=total, content=content.item(), style=style.item(),
                           smooth=smooth.item(), latent_out=latent_out,
                           audio_emb=audio_emb, text_emb=text_emb,
                           fused_pair=fused_pair)
