"""Reverse-mode tape: per-op value oracles and central-difference gradient checks."""

import numpy as np
import pytest

from mistake_detect.autodiff import (
    PROB_CLAMP,
    Tensor,
    add,
    batchnorm_infer,
    batchnorm_train,
    conv1d,
    maxpool1d,
    mul,
    relu,
    reshape,
    sigmoid,
    upsample2,
    weighted_bce,
)
from mistake_detect.errors import NumericalError

EPS = 1e-5


def central_diff_grad(build, param: Tensor) -> np.ndarray:
    """Numeric gradient of the scalar build() with respect to param.data."""
    num = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    nflat = num.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + EPS
        hi = float(build().data)
        flat[i] = orig - EPS
        lo = float(build().data)
        flat[i] = orig
        nflat[i] = (hi - lo) / (2.0 * EPS)
    return num


def check_grads(build, params, tol=1e-6):
    """Backprop build() once and compare every parameter against finite
    differences. Returns the worst relative error seen."""
    for p in params:
        p.zero_grad()
    loss = build()
    loss.backward()
    worst = 0.0
    for p in params:
        assert p.grad is not None, "parameter received no gradient"
        num = central_diff_grad(build, p)
        err = float(np.max(np.abs(num - p.grad)) / max(1.0, np.max(np.abs(num))))
        worst = max(worst, err)
        assert err < tol, f"gradient error {err:.3g} for shape {p.data.shape}"
    return worst


def scalarize(rng, shape):
    """Random fixed targets turning an activation of this shape into a loss."""
    y = (rng.random(shape) < 0.5).astype(np.float64)
    return lambda t: weighted_bce(sigmoid(t), y, 0.7, 1.3)


class TestElementwise:
    def test_add_broadcast_grads(self):
        rng = np.random.default_rng(0)
        a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        b = Tensor(rng.normal(size=(4,)), requires_grad=True)
        loss = scalarize(rng, (3, 4))
        check_grads(lambda: loss(add(a, b)), [a, b])

    def test_mul_broadcast_grads(self):
        rng = np.random.default_rng(1)
        a = Tensor(rng.normal(size=(2, 3, 5)), requires_grad=True)
        b = Tensor(rng.normal(size=(3, 1)), requires_grad=True)
        loss = scalarize(rng, (2, 3, 5))
        check_grads(lambda: loss(mul(a, b)), [a, b])

    def test_relu_values_and_grads(self):
        x = Tensor(np.array([-2.0, 0.0, 3.0]), requires_grad=True)
        out = relu(x)
        assert out.data.tolist() == [0.0, 0.0, 3.0]
        # hold inputs away from the kink so finite differences are clean
        rng = np.random.default_rng(2)
        signs = rng.choice([-1.0, 1.0], size=(3, 7))
        y = Tensor(rng.uniform(0.2, 1.0, (3, 7)) * signs, requires_grad=True)
        loss = scalarize(rng, (3, 7))
        check_grads(lambda: loss(relu(y)), [y])

    def test_relu_flat_at_zero(self):
        x = Tensor(np.array([0.0]), requires_grad=True)
        weighted_bce(sigmoid(relu(x)), np.array([1.0]), 1.0, 1.0).backward()
        assert x.grad.tolist() == [0.0]

    def test_sigmoid_matches_formula(self):
        x = np.array([-3.0, -0.5, 0.0, 0.5, 3.0])
        out = sigmoid(Tensor(x))
        assert np.allclose(out.data, 1.0 / (1.0 + np.exp(-x)))

    def test_sigmoid_stable_at_extremes(self):
        with np.errstate(over="raise"):
            out = sigmoid(Tensor(np.array([-800.0, 800.0])))
        assert out.data[0] == 0.0
        assert out.data[1] == 1.0

    def test_sigmoid_grads(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.normal(size=(2, 6)), requires_grad=True)
        y = (rng.random((2, 6)) < 0.5).astype(np.float64)
        check_grads(lambda: weighted_bce(sigmoid(x), y, 0.9, 1.1), [x])


class TestShapeOps:
    def test_reshape_round_trip(self):
        rng = np.random.default_rng(4)
        x = Tensor(rng.normal(size=(2, 6)), requires_grad=True)
        out = reshape(x, (3, 4))
        assert out.shape == (3, 4)
        assert np.array_equal(out.data.reshape(2, 6), x.data)
        loss = scalarize(rng, (3, 4))
        check_grads(lambda: loss(reshape(x, (3, 4))), [x])

    def test_upsample2_repeats_frames(self):
        x = Tensor(np.arange(6.0).reshape(1, 2, 3))
        out = upsample2(x)
        assert out.shape == (1, 2, 6)
        assert out.data[0, 0].tolist() == [0.0, 0.0, 1.0, 1.0, 2.0, 2.0]

    def test_upsample2_grads(self):
        rng = np.random.default_rng(5)
        x = Tensor(rng.normal(size=(2, 3, 5)), requires_grad=True)
        loss = scalarize(rng, (2, 3, 10))
        check_grads(lambda: loss(upsample2(x)), [x])


def conv_oracle(x, w, b, dilation):
    b_sz, c_in, t = x.shape
    c_out, _, k = w.shape
    pad = dilation * (k - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    out = np.zeros((b_sz, c_out, t))
    for bi in range(b_sz):
        for o in range(c_out):
            for ti in range(t):
                acc = b[o]
                for i in range(c_in):
                    for tap in range(k):
                        acc += w[o, i, tap] * xp[bi, i, ti + tap * dilation]
                out[bi, o, ti] = acc
    return out


class TestConv:
    def test_matches_direct_sum(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(2, 3, 7))
        w = rng.normal(size=(4, 3, 3))
        b = rng.normal(size=(4,))
        for dilation in (1, 2):
            out = conv1d(Tensor(x), Tensor(w), Tensor(b), dilation=dilation)
            assert out.shape == (2, 4, 7)
            assert np.allclose(out.data, conv_oracle(x, w, b, dilation))

    def test_grads_dilation_1(self):
        rng = np.random.default_rng(7)
        x = Tensor(rng.normal(size=(2, 3, 8)) * 0.5, requires_grad=True)
        w = Tensor(rng.normal(size=(4, 3, 3)) * 0.5, requires_grad=True)
        b = Tensor(rng.normal(size=(4,)) * 0.5, requires_grad=True)
        loss = scalarize(rng, (2, 4, 8))
        check_grads(lambda: loss(conv1d(x, w, b)), [x, w, b])

    def test_grads_dilated(self):
        rng = np.random.default_rng(8)
        x = Tensor(rng.normal(size=(1, 2, 16)) * 0.5, requires_grad=True)
        w = Tensor(rng.normal(size=(3, 2, 3)) * 0.5, requires_grad=True)
        b = Tensor(rng.normal(size=(3,)) * 0.5, requires_grad=True)
        loss = scalarize(rng, (1, 3, 16))
        check_grads(lambda: loss(conv1d(x, w, b, dilation=4)), [x, w, b])

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            conv1d(Tensor(np.zeros((1, 2, 4))), Tensor(np.zeros((3, 2, 2))), Tensor(np.zeros(3)))

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError, match="incompatible"):
            conv1d(Tensor(np.zeros((1, 5, 4))), Tensor(np.zeros((3, 2, 3))), Tensor(np.zeros(3)))


def distinct_values(rng, shape):
    # well-separated entries keep the pooling argmax away from finite-diff ties
    n = int(np.prod(shape))
    return (rng.permutation(n).reshape(shape) / n) * 2.0 - 1.0


class TestPool:
    def test_strided_values(self):
        x = np.array([[[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]]])
        out = maxpool1d(Tensor(x), size=2, stride=2)
        assert out.data[0, 0].tolist() == [3.0, 4.0, 9.0]

    def test_same_pad_values(self):
        x = np.array([[[1.0, 5.0, 2.0, 0.0]]])
        out = maxpool1d(Tensor(x), size=3, stride=1, same_pad=True)
        assert out.shape == (1, 1, 4)
        assert out.data[0, 0].tolist() == [5.0, 5.0, 5.0, 2.0]

    def test_strided_grads(self):
        rng = np.random.default_rng(9)
        x = Tensor(distinct_values(rng, (2, 2, 12)), requires_grad=True)
        loss = scalarize(rng, (2, 2, 6))
        check_grads(lambda: loss(maxpool1d(x, size=2, stride=2)), [x])

    def test_same_pad_grads(self):
        rng = np.random.default_rng(10)
        x = Tensor(distinct_values(rng, (2, 3, 10)), requires_grad=True)
        loss = scalarize(rng, (2, 3, 10))
        check_grads(lambda: loss(maxpool1d(x, size=3, stride=1, same_pad=True)), [x])

    def test_uneven_length_rejected(self):
        with pytest.raises(ValueError, match="not divisible"):
            maxpool1d(Tensor(np.zeros((1, 1, 7))), size=2, stride=2)

    def test_same_pad_needs_stride_one(self):
        with pytest.raises(ValueError, match="stride 1"):
            maxpool1d(Tensor(np.zeros((1, 1, 8))), size=3, stride=2, same_pad=True)
        with pytest.raises(ValueError, match="odd size"):
            maxpool1d(Tensor(np.zeros((1, 1, 8))), size=2, stride=1, same_pad=True)


class TestBatchNorm:
    def test_train_normalizes_and_reports_stats(self):
        rng = np.random.default_rng(11)
        x = rng.normal(loc=3.0, scale=2.0, size=(4, 2, 50))
        gamma = Tensor(np.ones(2))
        beta = Tensor(np.zeros(2))
        out, mean, var = batchnorm_train(Tensor(x), gamma, beta)
        assert np.allclose(mean, x.mean(axis=(0, 2)))
        assert np.allclose(var, x.var(axis=(0, 2)))
        assert np.allclose(out.data.mean(axis=(0, 2)), 0.0, atol=1e-12)
        assert np.allclose(out.data.std(axis=(0, 2)), 1.0, atol=1e-3)

    def test_train_grads(self):
        rng = np.random.default_rng(12)
        x = Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True)
        gamma = Tensor(rng.uniform(0.5, 1.5, 3), requires_grad=True)
        beta = Tensor(rng.normal(size=3) * 0.3, requires_grad=True)
        loss = scalarize(rng, (2, 3, 4))
        check_grads(lambda: loss(batchnorm_train(x, gamma, beta)[0]), [x, gamma, beta])

    def test_infer_matches_formula(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(2, 3, 5))
        gamma = rng.uniform(0.5, 1.5, 3)
        beta = rng.normal(size=3)
        rm = rng.normal(size=3)
        rv = rng.uniform(0.5, 2.0, 3)
        out = batchnorm_infer(Tensor(x), Tensor(gamma), Tensor(beta), rm, rv)
        want = gamma[None, :, None] * (x - rm[None, :, None]) / np.sqrt(
            rv[None, :, None] + 1e-5
        ) + beta[None, :, None]
        assert np.allclose(out.data, want)

    def test_infer_grads(self):
        rng = np.random.default_rng(14)
        x = Tensor(rng.normal(size=(2, 2, 6)), requires_grad=True)
        gamma = Tensor(rng.uniform(0.5, 1.5, 2), requires_grad=True)
        beta = Tensor(rng.normal(size=2) * 0.3, requires_grad=True)
        rm = rng.normal(size=2)
        rv = rng.uniform(0.5, 2.0, 2)
        loss = scalarize(rng, (2, 2, 6))
        check_grads(
            lambda: loss(batchnorm_infer(x, gamma, beta, rm, rv)), [x, gamma, beta]
        )


class TestLoss:
    def test_value_matches_manual_sum(self):
        p = np.array([0.9, 0.2, 0.6])
        y = np.array([1.0, 0.0, 1.0])
        w0, w1 = 0.5, 2.0
        loss = weighted_bce(Tensor(p), y, w0, w1)
        want = -(w1 * np.log(0.9) + w0 * np.log(0.8) + w1 * np.log(0.6)) / 3.0
        assert float(loss.data) == pytest.approx(want)

    def test_mask_drops_frames_from_sum_and_denominator(self):
        p = np.array([0.9, 0.01, 0.6, 0.99])
        y = np.array([1.0, 1.0, 1.0, 0.0])
        mask = np.array([1.0, 0.0, 1.0, 0.0])
        loss = weighted_bce(Tensor(p), y, 1.0, 1.0, mask=mask)
        want = -(np.log(0.9) + np.log(0.6)) / 2.0
        assert float(loss.data) == pytest.approx(want)

    def test_masked_frames_get_zero_grad(self):
        p = Tensor(np.array([0.5, 0.5, 0.5]), requires_grad=True)
        mask = np.array([1.0, 0.0, 1.0])
        weighted_bce(p, np.array([1.0, 1.0, 0.0]), 1.0, 1.0, mask=mask).backward()
        assert p.grad[1] == 0.0
        assert p.grad[0] != 0.0

    def test_clamped_probabilities_get_zero_grad(self):
        p = Tensor(np.array([0.0, 0.5, 1.0]), requires_grad=True)
        loss = weighted_bce(p, np.array([1.0, 1.0, 1.0]), 1.0, 1.0)
        assert np.isfinite(float(loss.data))
        loss.backward()
        assert p.grad[0] == 0.0
        assert p.grad[2] == 0.0
        assert p.grad[1] != 0.0

    def test_clamp_bounds_loss(self):
        p = Tensor(np.array([0.0]))
        loss = weighted_bce(p, np.array([1.0]), 1.0, 1.0)
        assert float(loss.data) == pytest.approx(-np.log(PROB_CLAMP))

    def test_grads_with_mask(self):
        rng = np.random.default_rng(15)
        p = Tensor(rng.uniform(0.05, 0.95, (2, 7)), requires_grad=True)
        y = (rng.random((2, 7)) < 0.5).astype(np.float64)
        mask = (rng.random((2, 7)) < 0.8).astype(np.float64)
        mask.reshape(-1)[0] = 1.0
        check_grads(lambda: weighted_bce(p, y, 0.6, 1.7, mask=mask), [p])

    def test_shape_mismatches(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            weighted_bce(Tensor(np.zeros(3)), np.zeros(4), 1.0, 1.0)
        with pytest.raises(ValueError, match="mask shape"):
            weighted_bce(Tensor(np.full(3, 0.5)), np.zeros(3), 1.0, 1.0, mask=np.ones(2))

    def test_all_masked_rejected(self):
        with pytest.raises(ValueError, match="masked out"):
            weighted_bce(Tensor(np.full(3, 0.5)), np.zeros(3), 1.0, 1.0, mask=np.zeros(3))

    def test_non_finite_loss_raises(self):
        with pytest.raises(NumericalError, match="non-finite"):
            weighted_bce(Tensor(np.array([0.5])), np.array([1.0]), 1.0, np.inf)


class TestGraph:
    def test_diamond_accumulates_both_paths(self):
        x = Tensor(np.array(3.0), requires_grad=True)
        y = mul(x, x)
        s = add(y, y)  # 2 * x**2
        s.backward()
        assert float(s.data) == 18.0
        assert float(x.grad) == pytest.approx(12.0)

    def test_backward_needs_scalar(self):
        x = Tensor(np.zeros(3), requires_grad=True)
        with pytest.raises(ValueError, match="scalar"):
            add(x, x).backward()

    def test_constant_leaves_get_no_grad(self):
        w = Tensor(np.array(2.0), requires_grad=True)
        x = Tensor(np.array(5.0))
        mul(w, x).backward()
        assert float(w.grad) == 5.0
        assert x.grad is None

    def test_zero_grad_makes_backward_repeatable(self):
        rng = np.random.default_rng(16)
        x = Tensor(rng.normal(size=(2, 4)), requires_grad=True)
        y = (rng.random((2, 4)) < 0.5).astype(np.float64)

        weighted_bce(sigmoid(x), y, 1.0, 1.0).backward()
        first = x.grad.copy()
        x.zero_grad()
        weighted_bce(sigmoid(x), y, 1.0, 1.0).backward()
        assert np.array_equal(x.grad, first)

    def test_long_chain(self):
        x = Tensor(np.array(1.0), requires_grad=True)
        out = x
        for _ in range(40):
            out = add(out, Tensor(np.array(0.5)))
        out.backward()
        assert float(out.data) == pytest.approx(21.0)
        assert float(x.grad) == 1.0
