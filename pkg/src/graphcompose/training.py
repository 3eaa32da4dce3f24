"""Masked cross-entropy loss, Adam, the training loop, and gradient checking.

The loss is the mean (not the sum) of per-node cross-entropy over labeled
nodes, which keeps the learning rate comparable across the five training-set
sizes. Log arguments are clamped at 1e-12 so exact zeros produced by label
propagation cannot blow up the loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, UsageError
from .evaluation import accuracy
from .networks import CompiledNetwork, backward, forward, init_params, with_dtype

__all__ = [
    "PROB_FLOOR",
    "TrainConfig",
    "AdamState",
    "TrainHistory",
    "GradCheckReport",
    "masked_cross_entropy",
    "adam_step",
    "train",
    "gradient_check",
]

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    dropout: float = 0.5
    weight_decay: float = 5e-4
    max_epochs: int = 500
    patience: int = 25
    seed: int = 0
    precision: str = "float64"

    def __post_init__(self) -> None:
        # The search space draws these from (0, 1); zero is still accepted so a
        # frozen run (learning_rate=0) stays expressible.
        if self.learning_rate < 0:
            raise UsageError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not (0.0 <= self.dropout < 1.0):
            raise UsageError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.weight_decay < 0:
            raise UsageError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.max_epochs < 1 or self.patience < 1:
            raise UsageError("max_epochs and patience must be >= 1")
        if self.precision not in ("float32", "float64"):
            raise UsageError(f"precision must be float32 or float64, got {self.precision!r}")


def masked_cross_entropy(p_bar, labels, labeled_set):
    """Mean negative log probability of the true class over labeled nodes.

    Returns (loss, d_p) where d_p holds -(1/|L|)/p at each labeled true-class
    entry (accumulated, so repeated indices are legal) and zero elsewhere.
    """
    p_bar = np.asarray(p_bar)
    labels = np.asarray(labels)
    idx = np.asarray(labeled_set, dtype=np.int64).ravel()
    if idx.size == 0:
        raise UsageError("masked cross-entropy needs a nonempty labeled set")
    true = labels[idx]
    p = np.maximum(p_bar[idx, true], PROB_FLOOR)
    loss = float(-np.log(p).mean())
    d_p = np.zeros_like(p_bar)
    np.add.at(d_p, (idx, true), -1.0 / (idx.size * p))
    return loss, d_p


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(params, grads, state: AdamState, lr: float, weight_decay: float = 0.0):
    """One bias-corrected Adam update; weight decay enters as an added
    gradient term decay * w. Returns new parameter arrays."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise UsageError("adam_step: params, grads, and state sizes disagree")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if weight_decay:
            g = g + weight_decay * p
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        out.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


@dataclass(frozen=True)
class TrainHistory:
    train_loss: tuple[float, ...]
    val_accuracy: tuple[float, ...]
    best_epoch: int
    best_val_accuracy: float
    stopped_epoch: int

    def to_text(self) -> str:
        lines = ["epoch\ttrain_loss\tval_accuracy"]
        for e, (loss, acc) in enumerate(zip(self.train_loss, self.val_accuracy), start=1):
            lines.append(f"{e}\t{loss:.10g}\t{acc:.10g}")
        lines.append(f"# best_epoch {self.best_epoch} best_val {self.best_val_accuracy:.10g}")
        return "\n".join(lines) + "\n"


def _resolve_inputs(net: CompiledNetwork, dataset):
    if net.x_bar is not None:
        return None
    return dataset.features


def train(net: CompiledNetwork, dataset, split, config: TrainConfig):
    """Full-batch training with early stopping on validation accuracy.

    Each epoch takes one optimizer step and then evaluates in inference mode;
    training stops after `patience` consecutive epochs without a strict
    improvement, and the parameters from the best epoch are returned.
    """
    dtype = np.float32 if config.precision == "float32" else np.float64
    work_net = with_dtype(net, dtype) if dtype == np.float32 else net
    x = _resolve_inputs(work_net, dataset)
    if x is not None and np.asarray(x).dtype != dtype:
        x = np.asarray(x).astype(dtype)
    labels = np.asarray(dataset.labels)
    train_idx = np.asarray(split.train, dtype=np.int64)
    val_idx = np.asarray(split.val, dtype=np.int64)
    if train_idx.size == 0 or val_idx.size == 0:
        raise UsageError("train needs nonempty train and val sets")

    seed_root = np.random.SeedSequence(config.seed)
    init_stream, dropout_stream = seed_root.spawn(2)
    params = init_params(work_net, np.random.default_rng(init_stream), dtype)
    dropout_rng = np.random.default_rng(dropout_stream)
    adam = AdamState.for_params(params)

    losses: list[float] = []
    accs: list[float] = []
    best_acc = -np.inf
    best_epoch = 0
    best_params = [p.copy() for p in params]
    stale = 0
    stopped = config.max_epochs
    for epoch in range(1, config.max_epochs + 1):
        out, states = forward(work_net, params, x, "train", dropout_rng)
        loss, d_p = masked_cross_entropy(out, labels, train_idx)
        if not np.isfinite(loss):
            raise NumericError(
                f"non-finite training loss at epoch {epoch} "
                f"(learning_rate={config.learning_rate})"
            )
        grads = backward(work_net, states, d_p)
        params = adam_step(params, grads, adam, config.learning_rate, config.weight_decay)
        val_out, _ = forward(work_net, params, x, "infer")
        val_acc = accuracy(val_out, labels, val_idx)
        losses.append(loss)
        accs.append(val_acc)
        if val_acc > best_acc:
            best_acc = val_acc
            best_epoch = epoch
            best_params = [p.copy() for p in params]
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
    return best_params, history


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    per_param: tuple[float, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def gradient_check(
    net: CompiledNetwork,
    dataset,
    labeled_set=None,
    *,
    tolerance: float = 1e-5,
    step: float = 1e-5,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic parameter gradients of the full pipeline (forward plus
    masked cross-entropy) against central finite differences.

    Requires a dropout-free, float64 network on a small instance.
    """
    if any(entry.kind == "dropout" for entry in net.layers):
        raise UsageError("gradient check requires a network compiled with dropout=0")
    x = _resolve_inputs(net, dataset)
    labels = np.asarray(dataset.labels)
    idx = (
        np.arange(labels.shape[0], dtype=np.int64)
        if labeled_set is None
        else np.asarray(labeled_set, dtype=np.int64)
    )
    params = init_params(net, np.random.default_rng(np.random.SeedSequence(seed)), np.float64)

    out, states = forward(net, params, x, "train")
    _, d_p = masked_cross_entropy(out, labels, idx)
    analytic = backward(net, states, d_p)

    def loss_at(ps) -> float:
        probe, _ = forward(net, ps, x, "infer")
        return masked_cross_entropy(probe, labels, idx)[0]

    per_param: list[float] = []
    for pi in range(len(params)):
        worst = 0.0
        flat = params[pi].ravel()
        for j in range(flat.size):
            original = flat[j]
            flat[j] = original + step
            up = loss_at(params)
            flat[j] = original - step
            down = loss_at(params)
            flat[j] = original
            numeric = (up - down) / (2.0 * step)
            a = analytic[pi].ravel()[j]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
            worst = max(worst, rel)
        per_param.append(worst)
    max_rel = max(per_param) if per_param else 0.0
    return GradCheckReport(max_rel_error=max_rel, per_param=tuple(per_param), tolerance=tolerance)
