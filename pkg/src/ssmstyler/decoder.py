"""Latent recovery via inverse STFT and a small transposed-convolution
waveform synthesizer (the desk-scale stand-in for a neural vocoder)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .dsp import SpectralGrid, Waveform, istft_pair, latent_array_from_grid, pair_from_complex
from .errors import InvalidConfig
from .params import ParamStore
from .speech import LatentSequence


@dataclass(frozen=True)
class DecoderLayer:
    in_channels: int
    out_channels: int
    kernel_size: int
    upsample_factor: int


@dataclass(frozen=True)
class DecoderSpec:
    layers: tuple[DecoderLayer, ...]

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_channels != nxt.in_channels:
                raise InvalidConfig(
                    f"channel chain broken: {prev.out_channels} -> {nxt.in_channels}"
                )

    @property
    def total_upsample(self) -> int:
        out = 1
        for layer in self.layers:
            out *= layer.upsample_factor
        return out


def default_decoder_spec(d_latent: int = 8) -> DecoderSpec:
    return DecoderSpec((
        DecoderLayer(d_latent, 8, kernel_size=5, upsample_factor=4),
        DecoderLayer(8, 1, kernel_size=5, upsample_factor=4),
    ))


def latent_from_grid(grid: SpectralGrid, stride_samples: int) -> LatentSequence:
    """Inverse STFT per channel; channels restacked as latent dimensions."""
    return LatentSequence(latent_array_from_grid(grid), stride_samples)


def latent_pair_to_tensor(pair, grid: SpectralGrid) -> ad.Tensor:
    """Differentiable latent recovery from a (T, F, C, 2) spectral tensor."""
    channels = ad.value_of(pair).shape[2]
    cols = []
    for c in range(channels):
        sig = istft_pair(ad.tslice(pair, (slice(None), slice(None), c)),
                         grid.config, grid.original_length)
        cols.append(ad.reshape(sig, (grid.original_length, 1)))
    return ad.concat(cols, axis=1)


def decode_waveform_tensor(frames, spec: DecoderSpec, params: ParamStore,
                           clamp: bool = True) -> ad.Tensor:
    """Transposed-conv stack; tanh between layers, final layer linear.

    With clamp=False the raw (pre-clamp) output is returned; gradient checks
    use it because the clamp has zero gradient where it is active.
    """
    h = frames
    d_in = ad.value_of(frames).shape[1]
    if spec.layers[0].in_channels != d_in:
        raise InvalidConfig(
            f"decoder expects {spec.layers[0].in_channels} input channels, latent has {d_in}"
        )
    last = len(spec.layers) - 1
    for i, layer in enumerate(spec.layers):
        w = params[f"dec.layer{i}.weight"]
        if tuple(w.shape) != (layer.out_channels, layer.in_channels, layer.kernel_size):
            raise InvalidConfig(f"decoder weight dec.layer{i}.weight has shape {w.shape}")
        h = ad.conv_transpose1d(h, w, params[f"dec.layer{i}.bias"], layer.upsample_factor)
        if i != last:
            h = ad.tanh(h)
    if clamp:
        h = ad.clamp(h, -1.0, 1.0)
    return h


def decode_waveform(latent: LatentSequence, spec: DecoderSpec, params: ParamStore,
                    sample_rate_hz: int = 8000) -> Waveform:
    if spec.total_upsample != latent.stride_samples:
        raise InvalidConfig(
            f"decoder upsample product {spec.total_upsample} != "
            f"encoder stride_samples {latent.stride_samples}"
        )
    out = decode_waveform_tensor(latent.frames, spec, params).value
    return Waveform(out[:, 0], sample_rate_hz)
