"""Differentiable layer primitives.

Each primitive is a pure forward function paired with a vector-Jacobian
product (vjp). The softmax vjp applies the full Jacobian rather than assuming
a fused cross-entropy, because smoothing layers may follow the softmax.
"""

from __future__ import annotations

import numpy as np

from .errors import UsageError
from .graph import PropagationOperator
from .linalg import spmm, spmm_transposed

__all__ = [
    "smoothing_forward",
    "smoothing_vjp",
    "linear_forward",
    "linear_vjp",
    "relu_forward",
    "relu_vjp",
    "softmax_rows_forward",
    "softmax_rows_vjp",
    "dropout_forward",
    "dropout_vjp",
]

_ACTIVATIONS = ("identity", "relu")


def smoothing_forward(op: PropagationOperator, x, activation: str = "identity") -> np.ndarray:
    if activation not in _ACTIVATIONS:
        raise UsageError(f"unknown activation {activation!r}")
    out = spmm(op.matrix, x)
    if activation == "relu":
        out = relu_forward(out)
    return out


def smoothing_vjp(op: PropagationOperator, upstream) -> np.ndarray:
    """Gradient through S @ X is S.T @ upstream. Callers apply any activation
    gradient before this."""
    return spmm_transposed(op.matrix, upstream)


def linear_forward(x, w) -> np.ndarray:
    x = np.asarray(x)
    w = np.asarray(w)
    if x.shape[1] != w.shape[0]:
        raise UsageError(f"linear shape mismatch: input {x.shape} @ weight {w.shape}")
    return x @ w


def linear_vjp(x, w, upstream) -> tuple[np.ndarray, np.ndarray]:
    """Returns (d_input, d_weight) for the cached forward input."""
    upstream = np.asarray(upstream)
    return upstream @ np.asarray(w).T, np.asarray(x).T @ upstream


def relu_forward(x) -> np.ndarray:
    return np.maximum(np.asarray(x), 0.0)


def relu_vjp(x, upstream) -> np.ndarray:
    """Subgradient at exactly zero input is taken as zero."""
    return np.asarray(upstream) * (np.asarray(x) > 0.0)


def softmax_rows_forward(z) -> np.ndarray:
    z = np.asarray(z)
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_vjp(p, upstream) -> np.ndarray:
    """Full per-row softmax Jacobian product: p * (u - (u . p))."""
    p = np.asarray(p)
    upstream = np.asarray(upstream)
    dot = (upstream * p).sum(axis=1, keepdims=True)
    return p * (upstream - dot)


def dropout_forward(x, rate: float, rng, training: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverted dropout: survivors are scaled by 1/(1-rate) so inference needs
    no rescaling. Inference mode is the identity and returns no mask."""
    x = np.asarray(x)
    if not (0.0 <= rate < 1.0):
        raise UsageError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise UsageError("training-mode dropout requires an explicit rng stream")
    mask = rng.random(x.shape) >= rate
    return x * mask / (1.0 - rate), mask


def dropout_vjp(mask, rate: float, upstream) -> np.ndarray:
    if mask is None:
        return np.asarray(upstream)
    return np.asarray(upstream) * mask / (1.0 - rate)
