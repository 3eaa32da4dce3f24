"""Shared fixtures: small graphs, planted-community datasets, dense oracles."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from graphcompose.data import Dataset
from graphcompose.graph import GraphTopology
from graphcompose.linalg import SparseMatrix


def dense(m: SparseMatrix) -> np.ndarray:
    """Expand a sparse matrix to a dense array (reference-path helper)."""
    out = np.zeros(m.shape, dtype=np.float64)
    rows = np.repeat(np.arange(m.rows), np.diff(m.row_offsets))
    out[rows, m.col_indices] = m.values
    return out


def np_softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def np_relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def ring_topology(num_nodes: int, extra_edges: int = 0, seed: int = 0) -> GraphTopology:
    """A cycle plus optional random chords; never has isolated nodes."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, num_nodes, extra_edges]))
    edges = [(i, (i + 1) % num_nodes) for i in range(num_nodes)]
    while extra_edges > 0:
        u, v = (int(x) for x in rng.integers(num_nodes, size=2))
        if u == v or (min(u, v), max(u, v)) in {(min(a, b), max(a, b)) for a, b in edges}:
            continue
        edges.append((u, v))
        extra_edges -= 1
    return GraphTopology.from_edge_list(num_nodes, edges)


def planted_dataset(
    num_nodes: int,
    num_classes: int,
    num_features: int,
    seed: int = 0,
    *,
    edges_per_node: int = 4,
    intra: float = 0.85,
    noise: float = 0.8,
    name: str = "planted",
) -> Dataset:
    """Community-structured graph with class-informative features, in memory."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 17]))
    labels = np.arange(num_nodes) % num_classes
    rng.shuffle(labels)
    centroids = rng.normal(scale=2.0, size=(num_classes, num_features))
    features = centroids[labels] + rng.normal(scale=noise, size=(num_nodes, num_features))

    by_class = [np.flatnonzero(labels == c) for c in range(num_classes)]
    edges = set()
    target = num_nodes * edges_per_node // 2
    attempts = 0
    while len(edges) < target and attempts < 60 * target:
        attempts += 1
        if rng.random() < intra:
            members = by_class[int(rng.integers(num_classes))]
            if members.size < 2:
                continue
            u, v = (int(x) for x in rng.choice(members, size=2, replace=False))
        else:
            u, v = (int(x) for x in rng.integers(num_nodes, size=2))
        if u != v:
            edges.add((min(u, v), max(u, v)))
    # Chain any isolated nodes in so every normalization stays valid.
    degree = np.zeros(num_nodes, dtype=np.int64)
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    for i in np.flatnonzero(degree == 0):
        j = int((i + 1) % num_nodes)
        edges.add((min(int(i), j), max(int(i), j)))

    return Dataset(
        name=name,
        topology=GraphTopology.from_edge_list(num_nodes, sorted(edges)),
        features=features,
        labels=labels,
        num_classes=num_classes,
    )


def write_dataset_dir(root: Path, dataset: Dataset) -> Path:
    """Serialize an in-memory dataset into the text layout load_dataset reads."""
    root.mkdir(parents=True, exist_ok=True)
    n, d = dataset.features.shape
    (root / "manifest.txt").write_text(
        f"nodes {n}\nfeatures {d}\nclasses {dataset.num_classes}\n"
    )
    (root / "graph.txt").write_text(
        "".join(f"{u} {v}\n" for u, v in dataset.topology.edges)
    )
    rows, cols = np.nonzero(dataset.features)
    (root / "features.txt").write_text(
        "".join(f"{r} {c} {dataset.features[r, c]:.8g}\n" for r, c in zip(rows, cols))
    )
    (root / "labels.txt").write_text(
        "".join(f"{i} {int(c)}\n" for i, c in enumerate(dataset.labels))
    )
    return root


def write_standard_split(root: Path, dataset: Dataset, seed: int = 3) -> None:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 5]))
    train: list[int] = []
    for c in range(dataset.num_classes):
        members = np.flatnonzero(dataset.labels == c)
        train.extend(int(i) for i in rng.permutation(members)[:20])
    rest = rng.permutation(np.array(sorted(set(range(dataset.num_nodes)) - set(train))))
    val = sorted(int(i) for i in rest[:500])
    test = sorted(int(i) for i in rest[500:1500])
    lines = ["train:"] + [str(i) for i in sorted(train)]
    lines += ["val:"] + [str(i) for i in val]
    lines += ["test:"] + [str(i) for i in test]
    (root / "standard_split.txt").write_text("\n".join(lines) + "\n")


@pytest.fixture(scope="session")
def path3() -> GraphTopology:
    """The 3-node path 0-1-2."""
    return GraphTopology.from_edge_list(3, [(0, 1), (1, 2)])


@pytest.fixture(scope="session")
def small_dataset() -> Dataset:
    """60 nodes, 3 classes; big enough to train, small enough to be instant."""
    return planted_dataset(60, 3, 8, seed=5)


@pytest.fixture(scope="session")
def cli_dataset_dir(tmp_path_factory) -> Path:
    """An on-disk dataset large enough for the full split protocol."""
    dataset = planted_dataset(1600, 2, 12, seed=11, name="clids")
    root = tmp_path_factory.mktemp("clids") / "clids"
    write_dataset_dir(root, dataset)
    write_standard_split(root, dataset)
    return root
