"""Convolutional speech encoder and the audio-side contrastive head."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .dsp import Waveform
from .errors import InvalidArgument, InvalidConfig
from .params import ParamStore
from .textenc import project_style_tensors


@dataclass
class LatentSequence:
    frames: np.ndarray  # T_latent x D_latent
    stride_samples: int

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise InvalidArgument("latent frames must be a non-empty T x D array")
        if not np.all(np.isfinite(self.frames)):
            raise InvalidArgument("latent frames contain non-finite entries")
        if self.stride_samples < 1:
            raise InvalidArgument("stride_samples must be positive")


@dataclass(frozen=True)
class ConvLayer:
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int
    activation: str = "tanh"  # tanh | identity

    def __post_init__(self):
        if self.activation not in ("tanh", "identity"):
            raise InvalidConfig(f"unknown activation {self.activation!r}")
        if min(self.in_channels, self.out_channels, self.kernel_size, self.stride) < 1:
            raise InvalidConfig("conv layer dimensions must be positive")


@dataclass(frozen=True)
class ConvSpec:
    layers: tuple[ConvLayer, ...]

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_channels != nxt.in_channels:
                raise InvalidConfig(
                    f"channel chain broken: {prev.out_channels} -> {nxt.in_channels}"
                )

    @property
    def stride_samples(self) -> int:
        out = 1
        for layer in self.layers:
            out *= layer.stride
        return out

    def min_input_length(self) -> int:
        """Smallest input length for which every layer sees T >= kernel_size."""
        need = 1
        for layer in reversed(self.layers):
            need = (need - 1) * layer.stride + layer.kernel_size
        return need

    def output_length(self, n: int) -> int:
        for layer in self.layers:
            n = (n - layer.kernel_size) // layer.stride + 1
        return n


def default_conv_spec(d_latent: int = 8) -> ConvSpec:
    return ConvSpec((
        ConvLayer(1, 8, kernel_size=9, stride=4, activation="tanh"),
        ConvLayer(8, d_latent, kernel_size=5, stride=4, activation="identity"),
    ))


def conv1d_forward(x, weights, bias, kernel_size: int, stride: int) -> np.ndarray:
    """Valid (no-padding) cross-correlation along time; x is T x C_in."""
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidArgument("conv input must be T x C_in")
    if weights.shape[2] != kernel_size:
        raise InvalidArgument("weight kernel axis disagrees with kernel_size")
    if x.shape[0] < kernel_size:
        raise InvalidArgument(
            f"input length {x.shape[0]} shorter than kernel {kernel_size}"
        )
    return ad.conv1d(x, weights, bias, stride).value


def encode_speech_tensor(samples, spec: ConvSpec, params: ParamStore) -> ad.Tensor:
    """Differentiable encoder body: stacked valid convolutions."""
    n = ad.value_of(samples).shape[0]
    need = spec.min_input_length()
    if n < need:
        raise InvalidArgument(
            f"waveform of {n} samples is shorter than the receptive field; "
            f"need at least {need}"
        )
    h = ad.reshape(samples, (n, 1))
    for i, layer in enumerate(spec.layers):
        h = ad.conv1d(h, params[f"enc.layer{i}.weight"], params[f"enc.layer{i}.bias"],
                      layer.stride)
        if layer.activation == "tanh":
            h = ad.tanh(h)
    return h


def encode_speech(w: Waveform, spec: ConvSpec, params: ParamStore) -> LatentSequence:
    frames = encode_speech_tensor(w.samples, spec, params).value
    return LatentSequence(frames, spec.stride_samples)


def project_style_audio_tensor(frames, params: ParamStore) -> ad.Tensor:
    pooled = ad.tmean(frames, axis=0)
    return project_style_tensors(pooled, params["phi_audio.weight"], params["phi_audio.bias"])


def project_style_audio(z: LatentSequence, params: ParamStore) -> np.ndarray:
    return project_style_audio_tensor(z.frames, params).value
