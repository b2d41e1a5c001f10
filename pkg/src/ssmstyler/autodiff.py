"""Minimal reverse-mode tape over numpy arrays.

Every op accepts `Tensor` or plain array-likes and returns a `Tensor`;
gradients flow only into `Tensor` arguments. The tape is built eagerly and
`Tensor.backward()` runs one reverse sweep. Complex spectral data travels
through the tape as real arrays with a trailing (real, imag) axis so that
all cotangents stay real.
"""

from __future__ import annotations

import numpy as np

from . import _scan


class Tensor:
    """A node in the computation graph: a float64 array plus back-links."""

    __slots__ = ("value", "grad", "_links")

    def __init__(self, value, links=()):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._links = tuple(links)

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def backward(self) -> None:
        """Accumulate gradients of `self` (summed if non-scalar) into leaves."""
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _ in node._links:
                if id(parent) not in seen:
                    stack.append((parent, False))
        for node in topo:
            node.grad = None
        self.grad = np.ones_like(self.value)
        for node in reversed(topo):
            g = node.grad
            if g is None:
                continue
            for parent, vjp in node._links:
                contrib = vjp(g)
                if parent.grad is None:
                    parent.grad = contrib
                else:
                    parent.grad = parent.grad + contrib


def value_of(x) -> np.ndarray:
    if isinstance(x, Tensor):
        return x.value
    return np.asarray(x, dtype=np.float64)


def _links(*pairs):
    return tuple((t, fn) for t, fn in pairs if isinstance(t, Tensor))


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Reduce a broadcasted gradient back to `shape`."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a, b) -> Tensor:
    av, bv = value_of(a), value_of(b)
    return Tensor(av + bv, _links(
        (a, lambda g: _unbroadcast(g, av.shape)),
        (b, lambda g: _unbroadcast(g, bv.shape)),
    ))


def sub(a, b) -> Tensor:
    av, bv = value_of(a), value_of(b)
    return Tensor(av - bv, _links(
        (a, lambda g: _unbroadcast(g, av.shape)),
        (b, lambda g: _unbroadcast(-g, bv.shape)),
    ))


def mul(a, b) -> Tensor:
    av, bv = value_of(a), value_of(b)
    return Tensor(av * bv, _links(
        (a, lambda g: _unbroadcast(g * bv, av.shape)),
        (b, lambda g: _unbroadcast(g * av, bv.shape)),
    ))


def div(a, b) -> Tensor:
    av, bv = value_of(a), value_of(b)
    out = av / bv
    return Tensor(out, _links(
        (a, lambda g: _unbroadcast(g / bv, av.shape)),
        (b, lambda g: _unbroadcast(-g * av / (bv * bv), bv.shape)),
    ))


def neg(a) -> Tensor:
    av = value_of(a)
    return Tensor(-av, _links((a, lambda g: -g)))


def matmul(a, b) -> Tensor:
    av, bv = value_of(a), value_of(b)
    out = av @ bv
    if av.ndim == 2 and bv.ndim == 2:
        links = _links((a, lambda g: g @ bv.T), (b, lambda g: av.T @ g))
    elif av.ndim == 2 and bv.ndim == 1:
        links = _links((a, lambda g: np.outer(g, bv)), (b, lambda g: av.T @ g))
    elif av.ndim == 1 and bv.ndim == 2:
        links = _links((a, lambda g: bv @ g), (b, lambda g: np.outer(av, g)))
    elif av.ndim == 1 and bv.ndim == 1:
        links = _links((a, lambda g: g * bv), (b, lambda g: g * av))
    else:
        raise ValueError(f"unsupported matmul ranks {av.ndim}x{bv.ndim}")
    return Tensor(out, links)


# ---------------------------------------------------------------------------
# nonlinearities


def tanh(a) -> Tensor:
    out = np.tanh(value_of(a))
    return Tensor(out, _links((a, lambda g: g * (1.0 - out * out))))


def sigmoid(a) -> Tensor:
    av = value_of(a)
    out = 1.0 / (1.0 + np.exp(-np.abs(av)))
    out = np.where(av >= 0, out, 1.0 - out)
    return Tensor(out, _links((a, lambda g: g * out * (1.0 - out))))


def softplus(a) -> Tensor:
    av = value_of(a)
    out = np.logaddexp(0.0, av)
    sig = 1.0 / (1.0 + np.exp(-np.abs(av)))
    sig = np.where(av >= 0, sig, 1.0 - sig)
    return Tensor(out, _links((a, lambda g: g * sig)))


def exp(a) -> Tensor:
    out = np.exp(value_of(a))
    return Tensor(out, _links((a, lambda g: g * out)))


def log(a) -> Tensor:
    av = value_of(a)
    return Tensor(np.log(av), _links((a, lambda g: g / av)))


def sqrt(a) -> Tensor:
    out = np.sqrt(value_of(a))
    return Tensor(out, _links((a, lambda g: g * 0.5 / out)))


def clamp(a, lo: float, hi: float) -> Tensor:
    av = value_of(a)
    out = np.clip(av, lo, hi)
    mask = (av >= lo) & (av <= hi)
    return Tensor(out, _links((a, lambda g: g * mask)))


# ---------------------------------------------------------------------------
# reductions and shape surgery


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    av = value_of(a)
    out = av.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, av.shape).copy() if np.ndim(g) else np.full(av.shape, g)
        gg = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(gg, av.shape).copy()

    return Tensor(out, _links((a, vjp)))


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    av = value_of(a)
    count = av.size if axis is None else av.shape[axis]
    return div(tsum(a, axis=axis, keepdims=keepdims), float(count))


def reshape(a, shape) -> Tensor:
    av = value_of(a)
    return Tensor(av.reshape(shape), _links((a, lambda g: g.reshape(av.shape))))


def transpose(a, axes) -> Tensor:
    av = value_of(a)
    inv = np.argsort(axes)
    return Tensor(av.transpose(axes), _links((a, lambda g: g.transpose(inv))))


def concat(parts, axis: int = 0) -> Tensor:
    vals = [value_of(p) for p in parts]
    out = np.concatenate(vals, axis=axis)
    offsets = np.cumsum([0] + [v.shape[axis] for v in vals])

    def make_vjp(i):
        sl = [slice(None)] * out.ndim
        sl[axis] = slice(offsets[i], offsets[i + 1])
        sl = tuple(sl)
        return lambda g: g[sl]

    return Tensor(out, _links(*((p, make_vjp(i)) for i, p in enumerate(parts))))


def tslice(a, key) -> Tensor:
    av = value_of(a)

    def vjp(g):
        buf = np.zeros_like(av)
        buf[key] = g
        return buf

    return Tensor(av[key], _links((a, vjp)))


def gather_rows(table, ids) -> Tensor:
    tv = value_of(table)
    ids = np.asarray(ids, dtype=np.intp)

    def vjp(g):
        buf = np.zeros_like(tv)
        np.add.at(buf, ids, g)
        return buf

    return Tensor(tv[ids], _links((table, vjp)))


# ---------------------------------------------------------------------------
# softmax / cross-entropy


def softmax(a, axis: int = -1) -> Tensor:
    av = value_of(a)
    shifted = av - av.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * s).sum(axis=axis, keepdims=True)
        return s * (g - dot)

    return Tensor(s, _links((a, vjp)))


def cross_entropy_mean(logits, labels) -> Tensor:
    """Mean softmax cross-entropy over rows of `logits` (n_rows x n_classes)."""
    lv = value_of(logits)
    labels = np.asarray(labels, dtype=np.intp)
    n = lv.shape[0]
    shifted = lv - lv.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1)) + lv.max(axis=1)
    loss = float(np.mean(logz - lv[np.arange(n), labels]))
    probs = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)

    def vjp(g):
        grad = probs.copy()
        grad[np.arange(n), labels] -= 1.0
        return grad * (g / n)

    return Tensor(loss, _links((logits, vjp)))


# ---------------------------------------------------------------------------
# signal-processing primitives (all real-linear, vjp == adjoint)


def frame_signal(a, frame_len: int, hop: int, n_frames: int | None = None) -> Tensor:
    """Slice a 1-D signal into overlapping frames, zero-padding the tail.

    Frame t covers samples [t*hop, t*hop + frame_len); by default
    T = ceil(n / hop).
    """
    av = value_of(a)
    n = av.shape[0]
    if n_frames is None:
        n_frames = -(-n // hop)
    padded_len = max(n, (n_frames - 1) * hop + frame_len)
    padded = np.zeros(padded_len)
    padded[:n] = av
    idx = np.arange(n_frames)[:, None] * hop + np.arange(frame_len)[None, :]
    frames = padded[idx]

    def vjp(g):
        buf = np.zeros(padded_len)
        np.add.at(buf, idx, g)
        return buf[:n]

    return Tensor(frames, _links((a, vjp)))


def overlap_add(frames, hop: int, out_len: int) -> Tensor:
    """Sum frames (T x frame_len) at offsets t*hop; truncate to out_len."""
    fv = value_of(frames)
    n_frames, frame_len = fv.shape
    full_len = (n_frames - 1) * hop + frame_len
    idx = np.arange(n_frames)[:, None] * hop + np.arange(frame_len)[None, :]
    buf = np.zeros(full_len)
    np.add.at(buf, idx, fv)
    out = buf[:out_len]

    def vjp(g):
        gbuf = np.zeros(full_len)
        gbuf[:out_len] = g
        return gbuf[idx]

    return Tensor(out, _links((frames, vjp)))


def rfft_pair(a) -> Tensor:
    """Real DFT along the last axis, returned as a trailing (real, imag) pair.

    Input (..., N) -> output (..., N//2 + 1, 2).
    """
    av = value_of(a)
    n = av.shape[-1]
    spec = np.fft.rfft(av, axis=-1)
    out = np.stack([spec.real, spec.imag], axis=-1)

    def vjp(g):
        gc = g[..., 0] + 1j * g[..., 1]
        full = np.zeros(av.shape, dtype=np.complex128)
        full[..., : gc.shape[-1]] = gc
        return np.fft.ifft(full, axis=-1).real * n

    return Tensor(out, _links((a, vjp)))


def irfft_pair(a, n: int) -> Tensor:
    """Inverse of the half-spectrum (real, imag) pair back to a length-n signal.

    The imaginary parts of bins 0 and n/2 do not contribute (Hermitian
    half-spectrum convention), so their gradients are exactly zero.
    """
    av = value_of(a)
    spec = av[..., 0] + 1j * av[..., 1]
    out = np.fft.irfft(spec, n=n, axis=-1)

    def vjp(g):
        gs = np.fft.rfft(g, axis=-1)
        weights = np.full(gs.shape[-1], 2.0)
        weights[0] = 1.0
        if n % 2 == 0:
            weights[-1] = 1.0
        gs = gs * (weights / n)
        return np.stack([gs.real, gs.imag], axis=-1)

    return Tensor(out, _links((a, vjp)))


# ---------------------------------------------------------------------------
# convolutions


def conv1d(x, w, b, stride: int) -> Tensor:
    """Valid cross-correlation along time: x (T x Cin), w (Cout x Cin x K)."""
    xv, wv, bv = value_of(x), value_of(w), value_of(b)
    t_in = xv.shape[0]
    k = wv.shape[2]
    t_out = (t_in - k) // stride + 1
    out = np.broadcast_to(bv, (t_out, wv.shape[0])).copy()
    for j in range(k):
        out += xv[j : j + stride * t_out : stride] @ wv[:, :, j].T

    def vjp_x(g):
        gx = np.zeros_like(xv)
        for j in range(k):
            gx[j : j + stride * t_out : stride] += g @ wv[:, :, j]
        return gx

    def vjp_w(g):
        gw = np.empty_like(wv)
        for j in range(k):
            gw[:, :, j] = g.T @ xv[j : j + stride * t_out : stride]
        return gw

    return Tensor(out, _links((x, vjp_x), (w, vjp_w), (b, lambda g: g.sum(axis=0))))


def conv_transpose1d(x, w, b, upsample: int) -> Tensor:
    """Zero-insertion upsample by `upsample`, then causal FIR with kernel w.

    x (T x Cin), w (Cout x Cin x K) -> output (T*upsample x Cout); output
    sample n sums w[:, :, j] @ up[n - j] over j <= n.
    """
    xv, wv, bv = value_of(x), value_of(w), value_of(b)
    t_in = xv.shape[0]
    k = wv.shape[2]
    length = t_in * upsample
    up = np.zeros((length, xv.shape[1]))
    up[::upsample] = xv
    out = np.broadcast_to(bv, (length, wv.shape[0])).copy()
    for j in range(k):
        if j < length:
            out[j:] += up[: length - j] @ wv[:, :, j].T

    def vjp_x(g):
        gup = np.zeros_like(up)
        for j in range(k):
            if j < length:
                gup[: length - j] += g[j:] @ wv[:, :, j]
        return gup[::upsample]

    def vjp_w(g):
        gw = np.zeros_like(wv)
        for j in range(k):
            if j < length:
                gw[:, :, j] = g[j:].T @ up[: length - j]
        return gw

    return Tensor(out, _links((x, vjp_x), (w, vjp_w), (b, lambda g: g.sum(axis=0))))


# ---------------------------------------------------------------------------
# state-space scan


def ssm_scan_pair(x, alpha, beta) -> Tensor:
    """Linear recurrence h_t = alpha * h_{t-1} + beta * x_t over lanes.

    x has shape (T, F, C, 2) with a trailing (real, imag) axis; alpha and
    beta are (F, C) and act identically on both components.
    """
    xv, av, bv = value_of(x), value_of(alpha), value_of(beta)
    t_frames = xv.shape[0]
    lane_shape = xv.shape[1:]
    x2 = np.ascontiguousarray(xv.reshape(t_frames, -1))
    a2 = np.ascontiguousarray(np.broadcast_to(av[..., None], lane_shape).reshape(-1))
    b2 = np.ascontiguousarray(np.broadcast_to(bv[..., None], lane_shape).reshape(-1))
    h2 = _scan.scan_forward(x2, a2, b2)
    out = h2.reshape(xv.shape)

    def grads(g):
        g2 = np.ascontiguousarray(g.reshape(t_frames, -1))
        gx2, ga2, gb2 = _scan.scan_backward(x2, a2, b2, h2, g2)
        return (
            gx2.reshape(xv.shape),
            ga2.reshape(lane_shape).sum(axis=-1),
            gb2.reshape(lane_shape).sum(axis=-1),
        )

    cache = {}

    def cached(g, which):
        key = id(g)
        if cache.get("key") != key:
            cache["key"] = key
            cache["val"] = grads(g)
        return cache["val"][which]

    return Tensor(out, _links(
        (x, lambda g: cached(g, 0)),
        (alpha, lambda g: cached(g, 1)),
        (beta, lambda g: cached(g, 2)),
    ))
