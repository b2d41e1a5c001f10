"""Waveform and spectral primitives: windowing, STFT, inverse STFT, WAV I/O.

The analysis/synthesis pair is overlap-add with a periodic Hann window.
Signals are front-padded by one hop before framing: the periodic Hann is
zero at its first tap, so without the shift the very first sample would be
annihilated and the round trip could never be exact. T_frames stays
ceil(len / hop).
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import InvalidArgument, InvalidConfig, NumericConfigError

_WSS_TINY = 1e-10


def hann_window(size: int) -> np.ndarray:
    """Periodic Hann window: w[n] = 0.5 * (1 - cos(2*pi*n / size))."""
    if not isinstance(size, (int, np.integer)) or size < 2:
        raise InvalidArgument(f"window size must be an integer >= 2, got {size!r}")
    n = np.arange(size)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / size))


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 64
    hop: int = 16
    window_kind: str = "hann"

    def __post_init__(self):
        f, h = self.fft_size, self.hop
        if f < 2 or f % 2 != 0 or (f & (f - 1)) != 0:
            raise InvalidConfig(f"fft_size must be an even power of two, got {f}")
        if h < 1 or h > f or f % h != 0:
            raise InvalidConfig(f"hop must be a positive divisor of fft_size, got {h}")
        if self.window_kind != "hann":
            raise InvalidConfig(f"unsupported window kind {self.window_kind!r}")

    @property
    def f_bins(self) -> int:
        return self.fft_size // 2 + 1

    def window(self) -> np.ndarray:
        return hann_window(self.fft_size)


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise InvalidArgument("waveform samples must be one-dimensional")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgument("waveform contains non-finite samples")
        if int(self.sample_rate_hz) <= 0:
            raise InvalidArgument("sample_rate_hz must be positive")
        self.sample_rate_hz = int(self.sample_rate_hz)


@dataclass
class SpectralGrid:
    """Complex T_frames x F_bins x C_channels grid plus its framing config."""

    data: np.ndarray
    config: StftConfig
    original_length: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 3:
            raise InvalidArgument("spectral grid must be T x F x C")
        if self.data.shape[1] != self.config.f_bins:
            raise InvalidArgument(
                f"F_bins {self.data.shape[1]} != fft_size/2+1 = {self.config.f_bins}"
            )
        if not np.all(np.isfinite(self.data)):
            raise InvalidArgument("spectral grid contains non-finite entries")


def n_frames_for(length: int, hop: int) -> int:
    return -(-length // hop)


def stft_pair(signal, config: StftConfig) -> ad.Tensor:
    """Differentiable STFT of a 1-D signal, as a (T, F, 2) real tensor."""
    n = ad.value_of(signal).shape[0]
    if n == 0:
        raise InvalidArgument("cannot STFT an empty signal")
    n_frames = n_frames_for(n, config.hop)
    shifted = ad.concat([np.zeros(config.hop), signal], axis=0)
    frames = ad.frame_signal(shifted, config.fft_size, config.hop, n_frames=n_frames)
    return ad.rfft_pair(ad.mul(frames, config.window()))


def istft_pair(pair, config: StftConfig, original_length: int) -> ad.Tensor:
    """Differentiable inverse STFT of a (T, F, 2) tensor back to a signal."""
    n_frames = ad.value_of(pair).shape[0]
    full_len = (n_frames - 1) * config.hop + config.fft_size
    win = config.window()
    wss = np.zeros(full_len)
    for t in range(n_frames):
        wss[t * config.hop : t * config.hop + config.fft_size] += win * win
    region = wss[config.hop : config.hop + original_length]
    if region.size < original_length or np.any(region <= _WSS_TINY):
        raise NumericConfigError(
            "window-square sum has a zero inside the output region; "
            "the window/hop combination violates COLA"
        )
    frames = ad.irfft_pair(pair, config.fft_size)
    ola = ad.overlap_add(ad.mul(frames, win), config.hop, full_len)
    safe = np.where(wss > _WSS_TINY, wss, 1.0)
    return ad.tslice(ad.div(ola, safe), slice(config.hop, config.hop + original_length))


def pair_from_complex(data: np.ndarray) -> np.ndarray:
    return np.stack([data.real, data.imag], axis=-1)


def complex_from_pair(pair: np.ndarray) -> np.ndarray:
    return pair[..., 0] + 1j * pair[..., 1]


def stft(signal, config: StftConfig) -> SpectralGrid:
    """STFT of a single-channel signal; stores bins 0..fft_size/2."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or signal.size == 0:
        raise InvalidArgument("stft expects a non-empty 1-D signal")
    pair = stft_pair(signal, config).value
    return SpectralGrid(complex_from_pair(pair)[:, :, None], config, signal.shape[0])


def istft(grid: SpectralGrid) -> np.ndarray:
    """Inverse STFT of a single-channel grid, exact where COLA holds."""
    if grid.data.shape[2] != 1:
        raise InvalidArgument("istft expects a single-channel grid")
    pair = pair_from_complex(grid.data[:, :, 0])
    return istft_pair(pair, grid.config, grid.original_length).value


def stft_multi(latent, config: StftConfig) -> SpectralGrid:
    """Per-channel STFT of a latent sequence (T_latent x D array-like)."""
    frames = np.asarray(getattr(latent, "frames", latent), dtype=np.float64)
    if frames.ndim != 2 or frames.size == 0:
        raise InvalidArgument("stft_multi expects a non-empty T x D latent array")
    channels = [stft_pair(frames[:, c], config).value for c in range(frames.shape[1])]
    data = np.stack([complex_from_pair(p) for p in channels], axis=-1)
    return SpectralGrid(data, config, frames.shape[0])


def latent_array_from_grid(grid: SpectralGrid) -> np.ndarray:
    """Inverse STFT per channel; channels restacked as latent dimensions."""
    cols = []
    for c in range(grid.data.shape[2]):
        pair = pair_from_complex(grid.data[:, :, c])
        cols.append(istft_pair(pair, grid.config, grid.original_length).value)
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# WAV ingestion / egress: RIFF, PCM16 signed little-endian, mono


def read_wav(path) -> Waveform:
    with wave.open(str(path), "rb") as wf:
        if wf.getnchannels() != 1:
            raise InvalidArgument(f"{path}: expected mono WAV, got {wf.getnchannels()} channels")
        if wf.getsampwidth() != 2:
            raise InvalidArgument(f"{path}: expected 16-bit PCM, got {8 * wf.getsampwidth()}-bit")
        raw = wf.readframes(wf.getnframes())
        rate = wf.getframerate()
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return Waveform(samples, rate)


def write_wav(path, waveform: Waveform) -> None:
    scaled = np.clip(waveform.samples, -1.0, 1.0) * 32768.0
    pcm = np.clip(np.rint(scaled), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(waveform.sample_rate_hz)
        wf.writeframes(pcm.tobytes())
