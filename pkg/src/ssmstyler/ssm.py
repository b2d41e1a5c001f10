"""Per-frequency-bin linear recurrence with text-conditioned gates.

h_{t,f} = alpha * h_{t-1,f} + beta * x_{t,f}, with alpha in (0,1) via a
sigmoid and beta > 0 via softplus, both produced from the pooled text
embedding. Gates are real and act identically on the real and imaginary
parts of each spectral value, so per-bin phase direction is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _scan
from . import autodiff as ad
from .dsp import SpectralGrid, complex_from_pair, pair_from_complex
from .errors import InvalidArgument, InvalidConfig
from .params import ParamStore

BETA_EPS = 1e-6


@dataclass
class GateParams:
    alpha: np.ndarray  # F_bins x C, each in (0, 1)
    beta: np.ndarray  # F_bins x C, each > 0

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 2:
            raise InvalidArgument("alpha and beta must both be F_bins x C")
        if not (np.all(self.alpha > 0.0) and np.all(self.alpha < 1.0)):
            raise InvalidArgument("alpha must lie strictly inside (0, 1)")
        if not np.all(self.beta > 0.0):
            raise InvalidArgument("beta must be strictly positive")


@dataclass
class HiddenStateGrid:
    states: np.ndarray  # complex T_frames x F_bins x C

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.complex128)
        if not np.all(np.isfinite(self.states)):
            raise InvalidArgument("hidden states contain non-finite entries")


def compute_gate_tensors(e_pooled, params: ParamStore, f_bins: int,
                         channels: int) -> tuple[ad.Tensor, ad.Tensor]:
    """Differentiable gate construction from the pooled text embedding."""
    w_alpha = params["gate.alpha.weight"]
    w_beta = params["gate.beta.weight"]
    if w_alpha.shape[0] != f_bins * channels or w_beta.shape[0] != f_bins * channels:
        raise InvalidConfig(
            f"gate matrices sized for {w_alpha.shape[0]} lanes, "
            f"grid has {f_bins * channels}"
        )
    pre_a = ad.add(ad.matmul(w_alpha, e_pooled), params["gate.alpha.bias"])
    pre_b = ad.add(ad.matmul(w_beta, e_pooled), params["gate.beta.bias"])
    alpha = ad.reshape(ad.sigmoid(pre_a), (f_bins, channels))
    beta = ad.reshape(ad.add(ad.softplus(pre_b), BETA_EPS), (f_bins, channels))
    return alpha, beta


def compute_gates(e_pooled, params: ParamStore, f_bins: int, channels: int) -> GateParams:
    alpha, beta = compute_gate_tensors(e_pooled, params, f_bins, channels)
    return GateParams(alpha.value, beta.value)


def _check_shapes(x: np.ndarray, gates: GateParams) -> None:
    if x.shape[1:] != gates.alpha.shape:
        raise InvalidArgument(
            f"gate shape {gates.alpha.shape} does not match grid lanes {x.shape[1:]}"
        )


def ssm_scan(grid: SpectralGrid, gates: GateParams) -> HiddenStateGrid:
    """Run the recurrence along time, independently per (bin, channel) lane."""
    _check_shapes(grid.data, gates)
    pair = pair_from_complex(grid.data)
    h = ad.ssm_scan_pair(pair, gates.alpha, gates.beta).value
    return HiddenStateGrid(complex_from_pair(h))


def ssm_scan_backward(grid: SpectralGrid, gates: GateParams,
                      upstream: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact reverse-mode gradients of ssm_scan.

    `upstream` is the complex cotangent of the hidden states under the
    real-pair convention (dL = sum of real-part and imag-part products).
    Returns (grad_x complex, grad_alpha real, grad_beta real).
    """
    upstream = np.asarray(upstream, dtype=np.complex128)
    _check_shapes(grid.data, gates)
    if upstream.shape != grid.data.shape:
        raise InvalidArgument("upstream gradient shape does not match the grid")
    x_pair = pair_from_complex(grid.data)
    t_frames = x_pair.shape[0]
    lane_shape = x_pair.shape[1:]
    x2 = np.ascontiguousarray(x_pair.reshape(t_frames, -1))
    a2 = np.ascontiguousarray(np.broadcast_to(gates.alpha[..., None], lane_shape).reshape(-1))
    b2 = np.ascontiguousarray(np.broadcast_to(gates.beta[..., None], lane_shape).reshape(-1))
    h2 = _scan.scan_forward(x2, a2, b2)
    g2 = np.ascontiguousarray(pair_from_complex(upstream).reshape(t_frames, -1))
    gx2, ga2, gb2 = _scan.scan_backward(x2, a2, b2, h2, g2)
    grad_x = complex_from_pair(gx2.reshape(x_pair.shape))
    grad_alpha = ga2.reshape(lane_shape).sum(axis=-1)
    grad_beta = gb2.reshape(lane_shape).sum(axis=-1)
    return grad_x, grad_alpha, grad_beta


def scan_reference(x: np.ndarray, gates: GateParams) -> np.ndarray:
    """Naive per-step loop; the correctness oracle for any optimized scan."""
    _check_shapes(x, gates)
    h = np.zeros_like(np.asarray(x, dtype=np.complex128))
    prev = np.zeros(x.shape[1:], dtype=np.complex128)
    for t in range(x.shape[0]):
        prev = gates.alpha * prev + gates.beta * x[t]
        h[t] = prev
    return h
