"""Op-level gradient checks for the tape: every custom vjp is verified
against central finite differences on a random scalar projection."""

import numpy as np
import pytest

from ssmstyler import autodiff as ad

RNG = np.random.default_rng(1234)


def scalarize(op, *arrays, eps=1e-6, rtol=1e-6):
    """Check d/dx sum(op(x...) * r) against finite differences for each input."""
    tensors = [ad.Tensor(a.copy()) for a in arrays]
    out = op(*tensors)
    r = RNG.normal(size=out.value.shape)
    loss = ad.tsum(ad.mul(out, r))
    loss.backward()

    def f(arrs):
        return float(np.sum(op(*[ad.Tensor(a) for a in arrs]).value * r))

    for i, t in enumerate(tensors):
        analytic = t.grad
        numeric = np.zeros_like(arrays[i])
        for idx in np.ndindex(arrays[i].shape):
            perturbed = [a.copy() for a in arrays]
            perturbed[i][idx] += eps
            up = f(perturbed)
            perturbed[i][idx] -= 2 * eps
            down = f(perturbed)
            numeric[idx] = (up - down) / (2 * eps)
        np.testing.assert_allclose(analytic, numeric, rtol=rtol, atol=1e-7)


def test_backward_chain_rule_scalar():
    x = ad.Tensor(np.array(0.7))
    y = ad.mul(ad.tanh(x), ad.exp(x))
    y.backward()
    # d/dx tanh(x) e^x = e^x (tanh(x) + sech^2 x)
    expected = np.exp(0.7) * (np.tanh(0.7) + 1.0 / np.cosh(0.7) ** 2)
    assert abs(x.grad - expected) < 1e-12


def test_value_reused_twice_accumulates():
    x = ad.Tensor(np.array(3.0))
    y = ad.add(ad.mul(x, x), x)  # x^2 + x, derivative 2x + 1 = 7
    y.backward()
    assert abs(x.grad - 7.0) < 1e-12


@pytest.mark.parametrize("op", [
    lambda a, b: ad.add(a, b),
    lambda a, b: ad.sub(a, b),
    lambda a, b: ad.mul(a, b),
    lambda a, b: ad.div(a, b),
])
def test_binary_elementwise_grads(op):
    a = RNG.normal(size=(3, 4))
    b = RNG.normal(size=(3, 4)) + 2.0  # keep divisor away from zero
    scalarize(op, a, b)


def test_broadcast_grads_unbroadcast_correctly():
    a = RNG.normal(size=(3, 4))
    b = RNG.normal(size=(4,))
    scalarize(lambda x, y: ad.add(x, y), a, b)
    scalarize(lambda x, y: ad.mul(x, y), a, b)


@pytest.mark.parametrize("op", [ad.tanh, ad.sigmoid, ad.softplus, ad.exp, ad.neg])
def test_unary_grads(op):
    scalarize(op, RNG.normal(size=(5, 3)))


def test_log_sqrt_grads_positive_domain():
    x = RNG.uniform(0.5, 2.0, size=(4, 4))
    scalarize(ad.log, x)
    scalarize(ad.sqrt, x)


def test_matmul_grads():
    scalarize(lambda a, b: ad.matmul(a, b),
              RNG.normal(size=(3, 5)), RNG.normal(size=(5, 2)))
    scalarize(lambda a, b: ad.matmul(a, b),
              RNG.normal(size=(4, 3)), RNG.normal(size=(3,)))


def test_clamp_grad_zero_outside_range():
    x = ad.Tensor(np.array([-2.0, 0.0, 2.0]))
    y = ad.tsum(ad.clamp(x, -1.0, 1.0))
    y.backward()
    np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])


def test_sum_mean_grads():
    scalarize(lambda x: ad.tsum(x, axis=0), RNG.normal(size=(3, 4)))
    scalarize(lambda x: ad.tmean(x, axis=1, keepdims=True), RNG.normal(size=(3, 4)))


def test_reshape_transpose_slice_grads():
    x = RNG.normal(size=(2, 3, 4))
    scalarize(lambda a: ad.reshape(a, (6, 4)), x)
    scalarize(lambda a: ad.transpose(a, (2, 0, 1)), x)
    scalarize(lambda a: ad.tslice(a, np.s_[1:, :, 2:]), x)


def test_concat_grads():
    scalarize(lambda a, b: ad.concat([a, b], axis=1),
              RNG.normal(size=(3, 2)), RNG.normal(size=(3, 4)))


def test_gather_rows_accumulates_repeated_ids():
    table = ad.Tensor(RNG.normal(size=(5, 3)))
    out = ad.gather_rows(table, np.array([1, 1, 4]))
    ad.tsum(out).backward()
    expected = np.zeros((5, 3))
    expected[1] = 2.0
    expected[4] = 1.0
    np.testing.assert_array_equal(table.grad, expected)


def test_softmax_rows_sum_to_one_and_grads():
    x = RNG.normal(size=(4, 6)) * 3
    out = ad.softmax(ad.Tensor(x), axis=-1)
    np.testing.assert_allclose(out.value.sum(axis=-1), 1.0, atol=1e-12)
    scalarize(lambda a: ad.softmax(a, axis=-1), x)


def test_softmax_shift_invariant():
    x = RNG.normal(size=(3, 5))
    a = ad.softmax(ad.Tensor(x)).value
    b = ad.softmax(ad.Tensor(x + 1000.0)).value
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_cross_entropy_mean_matches_manual():
    logits = RNG.normal(size=(6, 3))
    labels = np.array([0, 1, 2, 0, 2, 1])
    out = ad.cross_entropy_mean(ad.Tensor(logits), labels)
    shifted = logits - logits.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    expected = -logp[np.arange(6), labels].mean()
    assert abs(out.value - expected) < 1e-12


def test_cross_entropy_grad():
    logits = RNG.normal(size=(5, 3))
    labels = np.array([2, 0, 1, 1, 0])
    t = ad.Tensor(logits.copy())
    ad.cross_entropy_mean(t, labels).backward()
    eps = 1e-6
    numeric = np.zeros_like(logits)
    for idx in np.ndindex(logits.shape):
        p = logits.copy()
        p[idx] += eps
        up = ad.cross_entropy_mean(ad.Tensor(p), labels).value
        p[idx] -= 2 * eps
        down = ad.cross_entropy_mean(ad.Tensor(p), labels).value
        numeric[idx] = (up - down) / (2 * eps)
    np.testing.assert_allclose(t.grad, numeric, rtol=1e-6, atol=1e-9)


def test_frame_signal_values_and_grads():
    x = np.arange(10.0)
    out = ad.frame_signal(ad.Tensor(x), frame_len=4, hop=2)
    # frames start at 0, 2, 4, 6 (last full frame); trailing frames zero-pad
    np.testing.assert_array_equal(out.value[0], [0, 1, 2, 3])
    np.testing.assert_array_equal(out.value[2], [4, 5, 6, 7])
    scalarize(lambda a: ad.frame_signal(a, 4, 2), RNG.normal(size=12))


def test_overlap_add_is_frame_adjoint():
    # overlap_add must be the exact transpose of frame_signal as a linear map
    n, frame_len, hop = 16, 6, 3
    x = RNG.normal(size=n)
    frames = ad.frame_signal(ad.Tensor(x), frame_len, hop)
    g = RNG.normal(size=frames.value.shape)
    ola = ad.overlap_add(ad.Tensor(g), hop, n)
    lhs = float(np.sum(frames.value * g))
    rhs = float(np.sum(x * ola.value))
    assert abs(lhs - rhs) < 1e-10
    scalarize(lambda a: ad.overlap_add(a, hop, n), g)


def test_rfft_pair_matches_numpy():
    x = RNG.normal(size=16)
    out = ad.rfft_pair(ad.Tensor(x)).value
    ref = np.fft.rfft(x)
    np.testing.assert_allclose(out[..., 0], ref.real, atol=1e-12)
    np.testing.assert_allclose(out[..., 1], ref.imag, atol=1e-12)


def test_rfft_irfft_pair_grads():
    scalarize(lambda a: ad.rfft_pair(a), RNG.normal(size=8))
    pair = np.stack([RNG.normal(size=5), RNG.normal(size=5)], axis=-1)
    scalarize(lambda a: ad.irfft_pair(a, 8), pair)


def test_irfft_ignores_imag_of_dc_and_nyquist():
    # numpy's irfft discards those imaginary parts; the vjp must agree
    pair = np.zeros((5, 2))
    pair[0, 1] = 3.0
    pair[4, 1] = -2.0
    out = ad.irfft_pair(ad.Tensor(pair), 8)
    np.testing.assert_allclose(out.value, 0.0, atol=1e-15)
    t = ad.Tensor(pair.copy())
    ad.tsum(ad.mul(ad.irfft_pair(t, 8), RNG.normal(size=8))).backward()
    assert t.grad[0, 1] == 0.0 and t.grad[4, 1] == 0.0


def test_conv1d_grads():
    x = RNG.normal(size=(11, 2))
    w = RNG.normal(size=(3, 2, 4))
    b = RNG.normal(size=3)
    scalarize(lambda a, c, d: ad.conv1d(a, c, d, stride=2), x, w, b)


def test_conv_transpose1d_grads():
    x = RNG.normal(size=(6, 3))
    w = RNG.normal(size=(2, 3, 5))
    b = RNG.normal(size=2)
    scalarize(lambda a, c, d: ad.conv_transpose1d(a, c, d, upsample=3), x, w, b)


def test_ssm_scan_pair_grads():
    x = RNG.normal(size=(7, 3, 2, 2))
    alpha = RNG.uniform(0.2, 0.8, size=(3, 2))
    beta = RNG.uniform(0.5, 1.5, size=(3, 2))
    scalarize(lambda a, al, be: ad.ssm_scan_pair(a, al, be), x, alpha, beta,
              rtol=1e-5)
