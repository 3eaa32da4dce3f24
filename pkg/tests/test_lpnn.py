import numpy as np
import pytest

from graphcompose.errors import UsageError
from graphcompose.graph import build_operator
from graphcompose.layers import softmax_rows_forward
from graphcompose.lpnn import (
    G_HIDDEN_DIMS,
    LpnnWeights,
    build_g_network,
    lpnn_loss,
    predict_from_f,
    predict_from_g,
    train_lpnn,
)
from graphcompose.training import TrainConfig
from graphcompose.evaluation import accuracy

from .conftest import dense, planted_dataset, ring_topology
from .test_training import stratified_split

W0 = LpnnWeights(0.0, 0.0, 0.0, 0.0, 0.0)


def problem(n=7, m=3, seed=0):
    rng = np.random.default_rng(seed)
    g = ring_topology(n, extra_edges=2, seed=seed)
    op = build_operator(g, "symmetric")
    f = rng.normal(size=(n, m))
    g_out = softmax_rows_forward(rng.normal(size=(n, m)))
    labels = rng.integers(m, size=n)
    labeled = [0, 2, 4]
    return op, f, g_out, labels, labeled


class TestLpnnWeights:
    def test_negative_rejected(self):
        with pytest.raises(UsageError, match="lambda_u"):
            LpnnWeights(1.0, 1.0, 1.0, 1.0, -0.5)

    def test_as_dict_keys(self):
        d = LpnnWeights(1, 2, 3, 4, 5).as_dict()
        assert d == {"mu_g": 1, "mu_l": 2, "mu_u": 3, "lambda_l": 4, "lambda_u": 5}


class TestLpnnLoss:
    def test_zero_weights_zero_everything(self):
        op, f, g_out, labels, labeled = problem()
        loss, d_f, d_g = lpnn_loss(f, g_out, op, labels, labeled, W0)
        assert loss == 0.0
        np.testing.assert_array_equal(d_f, np.zeros_like(f))
        np.testing.assert_array_equal(d_g, np.zeros_like(g_out))

    def test_requires_symmetric_operator(self):
        op, f, g_out, labels, labeled = problem()
        row_op = build_operator(ring_topology(7, extra_edges=2, seed=0), "row")
        with pytest.raises(UsageError):
            lpnn_loss(f, g_out, row_op, labels, labeled, W0)

    def test_shape_mismatch(self):
        op, f, g_out, labels, labeled = problem()
        with pytest.raises(UsageError):
            lpnn_loss(f, g_out[:, :2], op, labels, labeled, W0)

    def test_smoothness_term_dense_oracle(self):
        op, f, g_out, labels, labeled = problem(seed=1)
        w = LpnnWeights(0.7, 0, 0, 0, 0)
        loss, d_f, d_g = lpnn_loss(f, g_out, op, labels, labeled, w)
        s = dense(op.matrix)
        expected = 0.7 * ((f * f).sum() - (f * (s @ f)).sum())
        assert loss == pytest.approx(expected, rel=1e-12)
        np.testing.assert_allclose(d_f, 0.7 * (2 * f - s @ f - s.T @ f), atol=1e-12)
        np.testing.assert_array_equal(d_g, np.zeros_like(g_out))

    def test_labeled_fit_with_zero_field(self):
        op, _, g_out, labels, labeled = problem(seed=2)
        f = np.zeros((7, 3))
        w = LpnnWeights(0, 2.0, 0, 0, 0)
        loss, d_f, _ = lpnn_loss(f, g_out, op, labels, labeled, w)
        # Each labeled row misses its one-hot target by exactly 1 in one slot.
        assert loss == pytest.approx(2.0 * len(labeled))
        for i in labeled:
            assert d_f[i, labels[i]] == pytest.approx(-4.0)
        assert np.all(d_f[[1, 3, 5, 6]] == 0.0)

    def test_unlabeled_shrinkage(self):
        op, f, g_out, labels, labeled = problem(seed=3)
        w = LpnnWeights(0, 0, 0.5, 0, 0)
        loss, d_f, _ = lpnn_loss(f, g_out, op, labels, labeled, w)
        unlabeled = [i for i in range(7) if i not in labeled]
        assert loss == pytest.approx(0.5 * (f[unlabeled] ** 2).sum(), rel=1e-12)
        np.testing.assert_allclose(d_f[unlabeled], f[unlabeled], atol=1e-12)
        assert np.all(d_f[labeled] == 0.0)

    def test_labeled_kl_is_log_loss_on_g(self):
        op, f, g_out, labels, labeled = problem(seed=4)
        w = LpnnWeights(0, 0, 0, 1.5, 0)
        loss, d_f, d_g = lpnn_loss(f, g_out, op, labels, labeled, w)
        expected = -1.5 * sum(np.log(g_out[i, labels[i]]) for i in labeled)
        assert loss == pytest.approx(expected, rel=1e-12)
        assert np.all(d_f == 0.0)
        for i in labeled:
            assert d_g[i, labels[i]] == pytest.approx(-1.5 / g_out[i, labels[i]])

    def test_unlabeled_kl_zero_when_distributions_match(self):
        op, f, _, labels, labeled = problem(seed=5)
        g_out = softmax_rows_forward(f)
        w = LpnnWeights(0, 0, 0, 0, 1.0)
        loss, _, _ = lpnn_loss(f, g_out, op, labels, labeled, w)
        assert loss == pytest.approx(0.0, abs=1e-12)

    def test_unlabeled_kl_nonnegative(self):
        op, f, g_out, labels, labeled = problem(seed=6)
        w = LpnnWeights(0, 0, 0, 0, 1.0)
        loss, _, _ = lpnn_loss(f, g_out, op, labels, labeled, w)
        assert loss >= 0.0

    def test_gradients_match_finite_differences(self):
        op, f, g_out, labels, labeled = problem(seed=7)
        w = LpnnWeights(0.9, 0.8, 0.3, 1.1, 0.7)
        _, d_f, d_g = lpnn_loss(f, g_out, op, labels, labeled, w)
        eps = 1e-6

        def loss_at(fv, gv):
            return lpnn_loss(fv, gv, op, labels, labeled, w)[0]

        worst = 0.0
        for arr, grad, which in ((f, d_f, "f"), (g_out, d_g, "g")):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                up = arr.copy()
                up[idx] += eps
                down = arr.copy()
                down[idx] -= eps
                if which == "f":
                    numeric = (loss_at(up, g_out) - loss_at(down, g_out)) / (2 * eps)
                else:
                    numeric = (loss_at(f, up) - loss_at(f, down)) / (2 * eps)
                denom = max(abs(grad[idx]), abs(numeric), 1e-6)
                worst = max(worst, abs(grad[idx] - numeric) / denom)
        assert worst < 1e-5


class TestGNetwork:
    def test_shape(self):
        net = build_g_network(30, 4)
        assert net.param_shapes == ((30, 128), (128, 64), (64, 4))
        assert net.describe() == ("linear", "relu", "linear", "relu", "linear", "softmax")
        assert G_HIDDEN_DIMS == (128, 64)

    def test_dropout_variant(self):
        net = build_g_network(30, 4, dropout=0.5)
        assert net.describe().count("dropout") == 3


class TestTrainLpnn:
    @pytest.fixture(scope="class")
    @staticmethod
    def trained(small_dataset):
        split = stratified_split(small_dataset)
        config = TrainConfig(dropout=0.0, max_epochs=60, patience=60, seed=1)
        weights = LpnnWeights(1.0, 1.0, 1.0, 1.0, 1.0)
        model, history = train_lpnn(small_dataset, split, config, weights)
        return small_dataset, split, model, history

    def test_learns_above_chance(self, trained):
        dataset, split, model, history = trained
        preds = predict_from_g(model, dataset.features)
        acc = accuracy(preds, dataset.labels, np.asarray(split.test))
        assert acc > 0.45

    def test_history_tracks_g_accuracy(self, trained):
        dataset, split, model, history = trained
        preds = predict_from_g(model, dataset.features)
        val_acc = accuracy(preds, dataset.labels, np.asarray(split.val))
        assert val_acc == pytest.approx(history.best_val_accuracy, abs=1e-12)

    def test_field_predictions_are_distributions(self, trained):
        dataset, _, model, _ = trained
        p = predict_from_f(model)
        assert p.shape == (dataset.num_nodes, dataset.num_classes)
        np.testing.assert_allclose(p.sum(axis=1), np.ones(dataset.num_nodes), atol=1e-9)

    def test_deterministic(self, small_dataset):
        split = stratified_split(small_dataset)
        config = TrainConfig(dropout=0.0, max_epochs=8, patience=8, seed=9)
        weights = LpnnWeights(0.5, 1.0, 0.2, 1.0, 0.3)
        m1, h1 = train_lpnn(small_dataset, split, config, weights)
        m2, h2 = train_lpnn(small_dataset, split, config, weights)
        assert h1 == h2
        np.testing.assert_array_equal(m1.f, m2.f)
        for a, b in zip(m1.g_params, m2.g_params):
            np.testing.assert_array_equal(a, b)

    def test_empty_train_rejected(self, small_dataset):
        from graphcompose.data import DataSplit

        split = stratified_split(small_dataset)
        bad = DataSplit(1, 0, (), split.val, split.test)
        with pytest.raises(UsageError):
            train_lpnn(small_dataset, bad, TrainConfig(), LpnnWeights(1, 1, 1, 1, 1))
