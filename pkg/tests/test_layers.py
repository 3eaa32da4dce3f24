import numpy as np
import pytest

from graphcompose.errors import UsageError
from graphcompose.graph import build_operator
from graphcompose.layers import (
    dropout_forward,
    dropout_vjp,
    linear_forward,
    linear_vjp,
    relu_forward,
    relu_vjp,
    smoothing_forward,
    smoothing_vjp,
    softmax_rows_forward,
    softmax_rows_vjp,
)

from .conftest import dense, np_softmax, ring_topology


def finite_diff(fn, x, upstream, eps=1e-6):
    """Central-difference gradient of sum(fn(x) * upstream) with respect to x."""
    grad = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += eps
        xm[idx] -= eps
        grad[idx] = ((fn(xp) * upstream).sum() - (fn(xm) * upstream).sum()) / (2 * eps)
    return grad


class TestSmoothing:
    def test_forward_matches_dense(self):
        g = ring_topology(8, extra_edges=3, seed=1)
        op = build_operator(g, "symmetric")
        rng = np.random.default_rng(0)
        x = rng.normal(size=(8, 4))
        np.testing.assert_allclose(
            smoothing_forward(op, x), dense(op.matrix) @ x, atol=1e-13
        )

    def test_relu_activation(self):
        g = ring_topology(6, seed=2)
        op = build_operator(g, "symmetric")
        x = np.random.default_rng(1).normal(size=(6, 3))
        out = smoothing_forward(op, x, activation="relu")
        np.testing.assert_allclose(out, np.maximum(dense(op.matrix) @ x, 0.0), atol=1e-13)

    def test_unknown_activation(self):
        g = ring_topology(4, seed=0)
        op = build_operator(g, "symmetric")
        with pytest.raises(UsageError):
            smoothing_forward(op, np.zeros((4, 2)), activation="tanh")

    def test_vjp_is_transpose_product(self):
        g = ring_topology(7, extra_edges=2, seed=3)
        op = build_operator(g, "general", alpha=0.2, beta=0.9)
        rng = np.random.default_rng(2)
        x = rng.normal(size=(7, 5))
        up = rng.normal(size=(7, 5))
        analytic = smoothing_vjp(op, up)
        numeric = finite_diff(lambda z: smoothing_forward(op, z), x, up)
        np.testing.assert_allclose(analytic, numeric, atol=1e-8)


class TestLinear:
    def test_forward(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(4, 3))
        w = rng.normal(size=(3, 2))
        np.testing.assert_array_equal(linear_forward(x, w), x @ w)

    def test_shape_mismatch(self):
        with pytest.raises(UsageError):
            linear_forward(np.zeros((2, 3)), np.zeros((4, 1)))

    def test_vjp_against_finite_differences(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(5, 3))
        w = rng.normal(size=(3, 2))
        up = rng.normal(size=(5, 2))
        d_x, d_w = linear_vjp(x, w, up)
        np.testing.assert_allclose(d_x, finite_diff(lambda z: z @ w, x, up), atol=1e-8)
        np.testing.assert_allclose(d_w, finite_diff(lambda z: x @ z, w, up), atol=1e-8)


class TestRelu:
    def test_forward(self):
        x = np.array([[-1.0, 0.0, 2.5]])
        np.testing.assert_array_equal(relu_forward(x), [[0.0, 0.0, 2.5]])

    def test_vjp_gates_on_positive_input(self):
        x = np.array([[-1.0, 0.0, 2.5]])
        up = np.array([[10.0, 10.0, 10.0]])
        np.testing.assert_array_equal(relu_vjp(x, up), [[0.0, 0.0, 10.0]])

    def test_vjp_against_finite_differences_away_from_kink(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(6, 4))
        x[np.abs(x) < 1e-3] = 0.5
        up = rng.normal(size=(6, 4))
        np.testing.assert_allclose(
            relu_vjp(x, up), finite_diff(relu_forward, x, up), atol=1e-8
        )


class TestSoftmaxRows:
    def test_matches_reference(self):
        rng = np.random.default_rng(6)
        z = rng.normal(size=(5, 4)) * 3
        np.testing.assert_allclose(softmax_rows_forward(z), np_softmax(z), atol=1e-14)

    def test_rows_sum_to_one(self):
        z = np.random.default_rng(7).normal(size=(9, 6))
        p = softmax_rows_forward(z)
        np.testing.assert_allclose(p.sum(axis=1), np.ones(9), atol=1e-14)
        assert (p > 0).all()

    def test_shift_invariance_handles_large_logits(self):
        z = np.array([[1000.0, 1001.0], [-1000.0, -999.0]])
        p = softmax_rows_forward(z)
        assert np.isfinite(p).all()
        np.testing.assert_allclose(p[0], p[1], atol=1e-12)

    def test_vjp_full_jacobian(self):
        rng = np.random.default_rng(8)
        z = rng.normal(size=(4, 5))
        up = rng.normal(size=(4, 5))
        p = softmax_rows_forward(z)
        np.testing.assert_allclose(
            softmax_rows_vjp(p, up), finite_diff(softmax_rows_forward, z, up), atol=1e-7
        )

    def test_vjp_kills_constant_upstream(self):
        # Rows of the Jacobian are orthogonal to constants: probabilities are
        # invariant to per-row logit shifts.
        p = softmax_rows_forward(np.random.default_rng(9).normal(size=(3, 4)))
        out = softmax_rows_vjp(p, np.ones((3, 4)))
        np.testing.assert_allclose(out, np.zeros((3, 4)), atol=1e-14)


class TestDropout:
    def test_inference_is_identity(self):
        x = np.random.default_rng(10).normal(size=(4, 4))
        out, mask = dropout_forward(x, 0.5, None, training=False)
        np.testing.assert_array_equal(out, x)
        assert mask is None

    def test_zero_rate_is_identity_even_in_training(self):
        x = np.ones((2, 2))
        out, mask = dropout_forward(x, 0.0, np.random.default_rng(0), training=True)
        np.testing.assert_array_equal(out, x)
        assert mask is None

    def test_training_scales_survivors(self):
        rng = np.random.default_rng(11)
        x = np.ones((200, 50))
        out, mask = dropout_forward(x, 0.4, rng, training=True)
        assert mask is not None
        kept = out[mask]
        np.testing.assert_allclose(kept, np.full(kept.shape, 1.0 / 0.6), atol=1e-12)
        np.testing.assert_array_equal(out[~mask], 0.0)
        # Fraction of survivors concentrates near 1 - rate.
        assert abs(mask.mean() - 0.6) < 0.02

    def test_requires_rng_in_training(self):
        with pytest.raises(UsageError):
            dropout_forward(np.ones((2, 2)), 0.5, None, training=True)

    def test_rejects_rate_one(self):
        with pytest.raises(UsageError):
            dropout_forward(np.ones((2, 2)), 1.0, np.random.default_rng(0), training=True)

    def test_vjp_reuses_mask(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(6, 3))
        out, mask = dropout_forward(x, 0.3, rng, training=True)
        up = rng.normal(size=(6, 3))
        expected = up * mask / 0.7
        np.testing.assert_allclose(dropout_vjp(mask, 0.3, up), expected, atol=1e-14)

    def test_vjp_identity_without_mask(self):
        up = np.ones((2, 2))
        np.testing.assert_array_equal(dropout_vjp(None, 0.5, up), up)
