"""Pure-numpy scan kernels; reference semantics for the compiled extension."""

import numpy as np


def scan_forward(x, alpha, beta):
    """h_t = alpha * h_{t-1} + beta * x_t with h_{-1} = 0; x is (T, L)."""
    h = np.empty_like(x)
    prev = np.zeros(x.shape[1])
    for t in range(x.shape[0]):
        prev = alpha * prev + beta * x[t]
        h[t] = prev
    return h


def scan_backward(x, alpha, beta, h, g):
    """Adjoint of scan_forward: a_t = g_t + alpha * a_{t+1} run in reverse.

    Returns (grad_x, grad_alpha, grad_beta), each gradient of a real scalar
    loss with cotangent g on h.
    """
    t_len, lanes = x.shape
    gx = np.empty_like(x)
    galpha = np.zeros(lanes)
    gbeta = np.zeros(lanes)
    a = np.zeros(lanes)
    for t in range(t_len - 1, -1, -1):
        a = g[t] + alpha * a
        gx[t] = beta * a
        if t > 0:
            galpha += a * h[t - 1]
        gbeta += a * x[t]
    return gx, galpha, gbeta
