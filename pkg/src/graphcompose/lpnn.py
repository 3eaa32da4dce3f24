"""Joint label-field / feature-network baseline.

Optimizes a free per-node label field f together with a feed-forward
classifier g under five weighted penalties: graph smoothness of f (a trace
through I - S), squared fit of f to one-hot labels, squared shrinkage of f on
unlabeled nodes, KL from labels to g on labeled nodes, and KL from the
row-softmax of f to g on unlabeled nodes. f rows are unconstrained reals, so
the unlabeled KL uses softmax(f) to obtain a valid distribution; predictions
come from g by default and from f's argmax as a logged alternative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, UsageError
from .evaluation import accuracy
from .graph import PropagationOperator, build_operator
from .layers import softmax_rows_forward, softmax_rows_vjp
from .linalg import spmm, spmm_transposed
from .networks import (
    LinearClassifier,
    Mlp,
    NetworkSpec,
    Softmax,
    backward,
    compile_network,
    forward,
    init_params,
)
from .training import PROB_FLOOR, AdamState, TrainConfig, TrainHistory, adam_step

__all__ = [
    "LpnnWeights",
    "LpnnModel",
    "lpnn_loss",
    "build_g_network",
    "train_lpnn",
    "predict_from_g",
    "predict_from_f",
]

G_HIDDEN_DIMS = (128, 64)


@dataclass(frozen=True)
class LpnnWeights:
    mu_g: float
    mu_l: float
    mu_u: float
    lambda_l: float
    lambda_u: float

    def __post_init__(self) -> None:
        for name, value in self.as_dict().items():
            if value < 0:
                raise UsageError(f"lpnn weight {name} must be >= 0, got {value}")

    def as_dict(self) -> dict[str, float]:
        return {
            "mu_g": self.mu_g,
            "mu_l": self.mu_l,
            "mu_u": self.mu_u,
            "lambda_l": self.lambda_l,
            "lambda_u": self.lambda_u,
        }


def _clamped_log(p: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(p, PROB_FLOOR))


def lpnn_loss(f, g_out, op: PropagationOperator, labels, labeled_set, weights: LpnnWeights):
    """Evaluate the joint loss and its analytic gradients.

    Returns (loss, d_f, d_g_out) where d_g_out is the gradient with respect to
    g's softmax output (the caller chains it through g's layers).
    """
    if op.kind != "symmetric":
        raise UsageError(f"lpnn smoothness term expects a symmetric operator, got {op.kind!r}")
    f = np.asarray(f, dtype=np.float64)
    g_out = np.asarray(g_out, dtype=np.float64)
    labels = np.asarray(labels)
    n, m = f.shape
    if g_out.shape != (n, m):
        raise UsageError(f"f shape {f.shape} and g output shape {g_out.shape} disagree")
    labeled = np.zeros(n, dtype=bool)
    labeled[np.asarray(labeled_set, dtype=np.int64)] = True
    unlabeled = ~labeled

    d_f = np.zeros_like(f)
    d_g = np.zeros_like(g_out)
    loss = 0.0

    # Smoothness: Tr(f^T (I - S) f) = ||f||^2 - <f, S f>.
    if weights.mu_g:
        sf = spmm(op.matrix, f)
        trace = float((f * f).sum() - (f * sf).sum())
        scale = max(1.0, float((f * f).sum()))
        if trace < -1e-8 * scale:
            raise NumericError(f"smoothness trace term went negative: {trace}")
        loss += weights.mu_g * trace
        d_f += weights.mu_g * (2.0 * f - sf - spmm_transposed(op.matrix, f))

    one_hot = np.zeros((n, m), dtype=np.float64)
    one_hot[np.arange(n), labels] = 1.0

    if weights.mu_l and labeled.any():
        diff = f[labeled] - one_hot[labeled]
        loss += weights.mu_l * float((diff * diff).sum())
        d_f[labeled] += 2.0 * weights.mu_l * diff

    if weights.mu_u and unlabeled.any():
        fu = f[unlabeled]
        loss += weights.mu_u * float((fu * fu).sum())
        d_f[unlabeled] += 2.0 * weights.mu_u * fu

    # Labeled KL against one-hot targets reduces to -log g at the true class.
    if weights.lambda_l and labeled.any():
        g_true = np.maximum(g_out[labeled, labels[labeled]], PROB_FLOOR)
        loss += weights.lambda_l * float(-np.log(g_true).sum())
        rows = np.flatnonzero(labeled)
        d_g[rows, labels[rows]] += -weights.lambda_l / g_true

    if weights.lambda_u and unlabeled.any():
        p = softmax_rows_forward(f[unlabeled])
        log_ratio = _clamped_log(p) - _clamped_log(g_out[unlabeled])
        loss += weights.lambda_u * float((p * log_ratio).sum())
        d_g[unlabeled] += -weights.lambda_u * p / np.maximum(g_out[unlabeled], PROB_FLOOR)
        # d/df of KL(softmax(f) || g) through the full softmax Jacobian.
        d_f[unlabeled] += weights.lambda_u * softmax_rows_vjp(p, log_ratio + 1.0)

    return float(loss), d_f, d_g


def build_g_network(input_dim: int, num_classes: int, dropout: float = 0.0):
    """The feature network g: two hidden layers (128, 64) and a softmax."""
    spec = NetworkSpec("lpnn-g", (Mlp(G_HIDDEN_DIMS), LinearClassifier(), Softmax()))
    return compile_network(spec, {}, input_dim, num_classes, dropout=dropout)


@dataclass(eq=False)
class LpnnModel:
    f: np.ndarray
    g_net: object
    g_params: list
    operator: PropagationOperator
    weights: LpnnWeights


def predict_from_g(model: LpnnModel, features) -> np.ndarray:
    out, _ = forward(model.g_net, model.g_params, features, "infer")
    return out


def predict_from_f(model: LpnnModel) -> np.ndarray:
    """The label field read as row distributions (argmax matches raw f)."""
    return softmax_rows_forward(model.f)


def train_lpnn(dataset, split, config: TrainConfig, weights: LpnnWeights):
    """Joint Adam optimization of f and g with the usual epoch budget and
    early stopping. Validation and the returned best snapshot follow g's
    accuracy, since g serves predictions by default."""
    x = np.asarray(dataset.features, dtype=np.float64)
    labels = np.asarray(dataset.labels)
    n = x.shape[0]
    train_idx = np.asarray(split.train, dtype=np.int64)
    val_idx = np.asarray(split.val, dtype=np.int64)
    if train_idx.size == 0 or val_idx.size == 0:
        raise UsageError("train_lpnn needs nonempty train and val sets")

    op = build_operator(dataset.topology, "symmetric")
    g_net = build_g_network(x.shape[1], dataset.num_classes, dropout=config.dropout)

    seed_root = np.random.SeedSequence(config.seed)
    init_stream, dropout_stream = seed_root.spawn(2)
    g_params = init_params(g_net, np.random.default_rng(init_stream))
    dropout_rng = np.random.default_rng(dropout_stream)
    f = np.zeros((n, dataset.num_classes), dtype=np.float64)

    adam_f = AdamState.for_params([f])
    adam_g = AdamState.for_params(g_params)

    losses: list[float] = []
    accs: list[float] = []
    best_acc = -np.inf
    best_epoch = 0
    best_f = f.copy()
    best_g = [p.copy() for p in g_params]
    stale = 0
    stopped = config.max_epochs
    for epoch in range(1, config.max_epochs + 1):
        g_out, states = forward(g_net, g_params, x, "train", dropout_rng)
        loss, d_f, d_g_out = lpnn_loss(f, g_out, op, labels, train_idx, weights)
        if not np.isfinite(loss):
            raise NumericError(
                f"non-finite lpnn loss at epoch {epoch} (learning_rate={config.learning_rate})"
            )
        g_grads = backward(g_net, states, d_g_out)
        # Weight decay shrinks only g's linear weights, never the label field.
        f = adam_step([f], [d_f], adam_f, config.learning_rate, 0.0)[0]
        g_params = adam_step(g_params, g_grads, adam_g, config.learning_rate, config.weight_decay)

        val_out, _ = forward(g_net, g_params, x, "infer")
        val_acc = accuracy(val_out, labels, val_idx)
        losses.append(loss)
        accs.append(val_acc)
        if val_acc > best_acc:
            best_acc = val_acc
            best_epoch = epoch
            best_f = f.copy()
            best_g = [p.copy() for p in g_params]
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                stopped = epoch
                break

    history = TrainHistory(
        train_loss=tuple(losses),
        val_accuracy=tuple(accs),
        best_epoch=best_epoch,
        best_val_accuracy=float(best_acc),
        stopped_epoch=stopped,
    )
    model = LpnnModel(f=best_f, g_net=g_net, g_params=best_g, operator=op, weights=weights)
    return model, history
