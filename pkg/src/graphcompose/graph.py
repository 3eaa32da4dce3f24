"""Graph topology and normalized propagation operators.

The augmented adjacency (self-loops added to the undirected adjacency) is
normalized in one of three ways: symmetric D^-1/2 A D^-1/2 for feature
smoothing, row D^-1 A which is row-stochastic and therefore safe to apply to
probability rows, or general D^-alpha A D^-beta with tunable exponents.
An alternative self/neighbor mix alpha*I + beta*A can replace the plain
augmentation before normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, UsageError
from .linalg import SparseMatrix

__all__ = [
    "GraphTopology",
    "PropagationOperator",
    "augment",
    "mix_self_neighbor",
    "normalize",
    "build_operator",
]


@dataclass(frozen=True)
class GraphTopology:
    """Undirected graph as canonical edges: (u, v) with u < v, strictly sorted,
    no self-loops. Self-loops enter later through augmentation."""

    num_nodes: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.num_nodes < 1:
            raise DataError(f"graph needs at least one node, got {self.num_nodes}")
        prev = None
        for u, v in self.edges:
            if u == v:
                raise DataError(f"self-loop edge ({u}, {v}) is not allowed")
            if not (0 <= u < v < self.num_nodes):
                raise DataError(
                    f"edge ({u}, {v}) out of range for {self.num_nodes} nodes "
                    "or not in canonical (u < v) order"
                )
            if prev is not None and (u, v) <= prev:
                raise DataError(f"edges must be strictly sorted, got {prev} then ({u}, {v})")
            prev = (u, v)

    @classmethod
    def from_edge_list(cls, num_nodes: int, pairs) -> "GraphTopology":
        """Canonicalize raw pairs: symmetrize, deduplicate, reject self-loops."""
        seen = set()
        for u, v in pairs:
            u, v = int(u), int(v)
            if u == v:
                raise DataError(f"self-loop edge ({u}, {v}) is not allowed")
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise DataError(f"edge ({u}, {v}) references a node id >= {num_nodes}")
            seen.add((min(u, v), max(u, v)))
        return cls(num_nodes=num_nodes, edges=tuple(sorted(seen)))

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class PropagationOperator:
    """A normalized square operator plus a record of how it was produced.

    kind is "symmetric", "row", or "general"; alpha/beta are the exponents for
    the general kind; mix records an (alpha_self, beta_neighbor) pair when the
    pre-normalization matrix was alpha*I + beta*A rather than I + A.
    """

    matrix: SparseMatrix
    kind: str
    alpha: float | None = None
    beta: float | None = None
    mix: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.matrix.rows != self.matrix.cols:
            raise DataError(f"propagation operator must be square, got {self.matrix.shape}")
        if self.kind not in ("symmetric", "row", "general"):
            raise UsageError(f"unknown normalization kind {self.kind!r}")

    @property
    def num_nodes(self) -> int:
        return self.matrix.rows


def _edge_arrays(g: GraphTopology) -> tuple[np.ndarray, np.ndarray]:
    if not g.edges:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    e = np.asarray(g.edges, dtype=np.int64)
    return e[:, 0], e[:, 1]


def augment(g: GraphTopology) -> SparseMatrix:
    """Self-loop augmented adjacency: identity plus the symmetrized adjacency."""
    n = g.num_nodes
    u, v = _edge_arrays(g)
    diag = np.arange(n, dtype=np.int64)
    rows = np.concatenate([u, v, diag])
    cols = np.concatenate([v, u, diag])
    vals = np.ones(rows.shape[0], dtype=np.float64)
    return SparseMatrix.from_coo(n, n, rows, cols, vals)


def mix_self_neighbor(g: GraphTopology, alpha: float, beta: float) -> SparseMatrix:
    """alpha*I + beta*A. Entries with a zero coefficient are not stored, so a
    zero alpha plus an isolated node yields an empty row that the normalization
    step rejects by name."""
    if not (0.0 <= alpha <= 1.0) or not (0.0 <= beta <= 1.0):
        raise UsageError(f"mix coefficients must lie in [0, 1], got ({alpha}, {beta})")
    n = g.num_nodes
    u, v = _edge_arrays(g)
    parts_r, parts_c, parts_v = [], [], []
    if beta != 0.0:
        parts_r += [u, v]
        parts_c += [v, u]
        parts_v += [np.full(u.shape[0], beta), np.full(u.shape[0], beta)]
    if alpha != 0.0:
        diag = np.arange(n, dtype=np.int64)
        parts_r.append(diag)
        parts_c.append(diag)
        parts_v.append(np.full(n, alpha))
    if not parts_r:
        return SparseMatrix.from_coo(n, n, [], [], [])
    return SparseMatrix.from_coo(
        n,
        n,
        np.concatenate(parts_r),
        np.concatenate(parts_c),
        np.concatenate(parts_v),
    )


def _row_sums(m: SparseMatrix) -> np.ndarray:
    return np.asarray(m._csr.sum(axis=1)).ravel()


def normalize(
    a_tilde: SparseMatrix,
    kind: str,
    alpha: float | None = None,
    beta: float | None = None,
    *,
    mix: tuple[float, float] | None = None,
) -> PropagationOperator:
    """Normalize a nonnegative square matrix by its row-sum degrees.

    symmetric: D^-1/2 A D^-1/2 (input must be symmetric);
    row: D^-1 A, every row sums to 1;
    general: D^-alpha A D^-beta, with (0, 0) returning the input unchanged.
    """
    if a_tilde.rows != a_tilde.cols:
        raise DataError(f"normalization needs a square matrix, got {a_tilde.shape}")
    if np.any(a_tilde.values < 0):
        raise DataError("normalization needs a nonnegative matrix")
    if kind == "general":
        if alpha is None or beta is None:
            raise UsageError("general normalization requires alpha and beta exponents")
    elif kind in ("symmetric", "row"):
        if alpha is not None or beta is not None:
            raise UsageError(f"{kind} normalization takes no exponents")
    else:
        raise UsageError(f"unknown normalization kind {kind!r}")

    degrees = _row_sums(a_tilde)
    zero_rows = np.flatnonzero(degrees == 0.0)
    if zero_rows.size:
        raise DataError(
            f"cannot normalize: node {int(zero_rows[0])} has an all-zero row "
            "(isolated node with no self weight)"
        )

    if kind == "symmetric":
        csr = a_tilde._csr
        asym = abs(csr - csr.T)
        if asym.nnz and asym.max() > 1e-12:
            raise DataError("symmetric normalization needs a symmetric matrix")
        left = degrees ** -0.5
        right = left
    elif kind == "row":
        left = 1.0 / degrees
        right = np.ones_like(degrees)
    else:
        left = degrees ** -float(alpha)
        right = degrees ** -float(beta)

    row_of = np.repeat(np.arange(a_tilde.rows), np.diff(a_tilde.row_offsets))
    scaled = a_tilde.values * left[row_of] * right[a_tilde.col_indices]
    matrix = a_tilde.with_values(scaled)
    return PropagationOperator(matrix=matrix, kind=kind, alpha=alpha, beta=beta, mix=mix)


def build_operator(
    g: GraphTopology,
    kind: str = "symmetric",
    *,
    mix: tuple[float, float] | None = None,
    alpha: float | None = None,
    beta: float | None = None,
) -> PropagationOperator:
    """Augment (or mix) the topology and normalize it in one step."""
    a_tilde = augment(g) if mix is None else mix_self_neighbor(g, *mix)
    return normalize(a_tilde, kind, alpha, beta, mix=mix)
