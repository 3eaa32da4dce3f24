"""Dataset ingestion and the split-generation protocol.

A dataset directory holds four whitespace-delimited text files (manifest.txt,
graph.txt, features.txt, labels.txt) and optionally standard_split.txt.
Splits fix one validation set of 500 and one test set of 1000 nodes per
dataset; the remaining pool T yields five nested training sizes per split:
size 1 is 20 nodes per class, sizes 2-5 interpolate up to all of T.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .graph import GraphTopology
from .linalg import row_unit_normalize

__all__ = [
    "Dataset",
    "DataSplit",
    "VAL_SIZE",
    "TEST_SIZE",
    "NUM_SIZES",
    "NUM_SPLITS",
    "load_dataset",
    "generate_splits",
    "train_size_targets",
    "load_standard_split",
    "save_splits",
    "load_split",
    "split_to_text",
]

VAL_SIZE = 500
TEST_SIZE = 1000
NUM_SIZES = 5
NUM_SPLITS = 10
_PER_CLASS = 20

# Published per-dataset training counts, keyed by (20 * classes, |T|). The
# interpolated interior sizes in circulation do not follow one rounding rule,
# so known endpoint pairs snap to the published counts and everything else
# uses round-half-up interpolation.
_PUBLISHED_SIZES: dict[tuple[int, int], tuple[int, ...]] = {
    (140, 1208): (140, 407, 674, 941, 1208),
    (120, 1827): (120, 547, 974, 1401, 1827),
    (60, 18217): (60, 4600, 9139, 13678, 18217),
    (60, 1525): (60, 426, 792, 1158, 1525),
    (80, 2557): (80, 699, 1318, 1937, 2557),
}


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    topology: GraphTopology
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    source_dir: str | None = None

    def __post_init__(self) -> None:
        if self.features.shape[0] != self.topology.num_nodes:
            raise DataError(
                f"feature rows {self.features.shape[0]} != nodes {self.topology.num_nodes}"
            )
        if self.labels.shape != (self.topology.num_nodes,):
            raise DataError("labels must cover every node exactly once")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DataError(f"label outside [0, {self.num_classes})")

    @property
    def num_nodes(self) -> int:
        return self.topology.num_nodes

    @property
    def num_edges(self) -> int:
        return self.topology.num_edges

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class DataSplit:
    """Disjoint train/val/test node-id sets. size_index 1..5 for generated
    splits, 0 for a dataset's fixed benchmark split."""

    size_index: int
    split_index: int
    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]

    def __post_init__(self) -> None:
        train, val, test = set(self.train), set(self.val), set(self.test)
        if len(train) != len(self.train) or len(val) != len(self.val) or len(test) != len(self.test):
            raise DataError("split sections must not contain repeated node ids")
        if train & val or train & test or val & test:
            raise DataError("train/val/test sets must be pairwise disjoint")


def _parse_lines(path: Path, expected_fields: int):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != expected_fields:
            raise DataError(
                f"{path}:{lineno}: expected {expected_fields} fields, got {len(fields)}"
            )
        yield lineno, fields


def _parse_int(path: Path, lineno: int, token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError as exc:
        raise DataError(f"{path}:{lineno}: {what} {token!r} is not an integer") from exc


def load_dataset(path) -> Dataset:
    """Load and validate a dataset directory; feature rows come out
    unit-normalized (zero rows stay zero)."""
    root = Path(path)
    if not root.is_dir():
        raise DataError(f"dataset directory {root} does not exist")

    manifest_path = root / "manifest.txt"
    manifest: dict[str, int] = {}
    for lineno, (key, value) in _parse_lines(manifest_path, 2):
        if key not in ("nodes", "features", "classes"):
            raise DataError(f"{manifest_path}:{lineno}: unknown manifest key {key!r}")
        manifest[key] = _parse_int(manifest_path, lineno, value, "manifest value")
    missing = {"nodes", "features", "classes"} - set(manifest)
    if missing:
        raise DataError(f"{manifest_path}: missing keys {sorted(missing)}")
    n, m, num_classes = manifest["nodes"], manifest["features"], manifest["classes"]
    if n < 1 or m < 1 or num_classes < 1:
        raise DataError(f"{manifest_path}: counts must be positive")

    labels = np.full(n, -1, dtype=np.int64)
    labels_path = root / "labels.txt"
    for lineno, (node_s, class_s) in _parse_lines(labels_path, 2):
        node = _parse_int(labels_path, lineno, node_s, "node id")
        cls = _parse_int(labels_path, lineno, class_s, "class id")
        if not (0 <= node < n):
            raise DataError(f"{labels_path}:{lineno}: node id {node} outside [0, {n})")
        if not (0 <= cls < num_classes):
            raise DataError(
                f"{labels_path}:{lineno}: class id {cls} outside [0, {num_classes})"
            )
        if labels[node] != -1:
            raise DataError(f"{labels_path}:{lineno}: node {node} labeled twice")
        labels[node] = cls
    unlabeled = np.flatnonzero(labels == -1)
    if unlabeled.size:
        raise DataError(
            f"{labels_path}: node count mismatch with manifest: "
            f"{unlabeled.size} of {n} nodes have no label (first: {int(unlabeled[0])})"
        )

    features = np.zeros((n, m), dtype=np.float64)
    features_path = root / "features.txt"
    for lineno, (node_s, feat_s, value_s) in _parse_lines(features_path, 3):
        node = _parse_int(features_path, lineno, node_s, "node id")
        feat = _parse_int(features_path, lineno, feat_s, "feature id")
        if not (0 <= node < n):
            raise DataError(f"{features_path}:{lineno}: node id {node} outside [0, {n})")
        if not (0 <= feat < m):
            raise DataError(f"{features_path}:{lineno}: feature id {feat} outside [0, {m})")
        try:
            features[node, feat] = float(value_s)
        except ValueError as exc:
            raise DataError(f"{features_path}:{lineno}: bad feature value {value_s!r}") from exc

    graph_path = root / "graph.txt"
    pairs = []
    for lineno, (u_s, v_s) in _parse_lines(graph_path, 2):
        u = _parse_int(graph_path, lineno, u_s, "node id")
        v = _parse_int(graph_path, lineno, v_s, "node id")
        pairs.append((u, v))
    try:
        topology = GraphTopology.from_edge_list(n, pairs)
    except DataError as exc:
        raise DataError(f"{graph_path}: {exc}") from exc

    return Dataset(
        name=root.name,
        topology=topology,
        features=row_unit_normalize(features),
        labels=labels,
        num_classes=num_classes,
        source_dir=str(root),
    )


def train_size_targets(num_classes: int, pool_size: int) -> tuple[int, ...]:
    """The five training-set sizes between 20 per class and the whole pool."""
    lo = _PER_CLASS * num_classes
    if (lo, pool_size) in _PUBLISHED_SIZES:
        return _PUBLISHED_SIZES[(lo, pool_size)]
    span = pool_size - lo
    return tuple(lo + int(np.floor(k * span / 4.0 + 0.5)) for k in range(5))


def generate_splits(dataset: Dataset, base_seed: int) -> dict[tuple[int, int], DataSplit]:
    """All 5 sizes x 10 splits, keyed (size_index, split_index).

    Validation and test sets are drawn once per dataset from base_seed and
    shared by every split; training sets are nested per split so each size is
    a superset of the previous one. Fully deterministic in (base_seed,
    split_index) and portable across platforms.
    """
    n = dataset.num_nodes
    needed = _PER_CLASS * dataset.num_classes + VAL_SIZE + TEST_SIZE
    if n < needed:
        raise DataError(
            f"dataset {dataset.name!r} has {n} nodes but the split protocol needs "
            f"at least {needed}"
        )
    fixed_rng = np.random.default_rng(np.random.SeedSequence([base_seed, 0]))
    order = fixed_rng.permutation(n)
    val = np.sort(order[:VAL_SIZE])
    test = np.sort(order[VAL_SIZE : VAL_SIZE + TEST_SIZE])
    pool = np.sort(order[VAL_SIZE + TEST_SIZE :])
    pool_labels = dataset.labels[pool]

    targets = train_size_targets(dataset.num_classes, pool.size)
    splits: dict[tuple[int, int], DataSplit] = {}
    val_t = tuple(int(i) for i in val)
    test_t = tuple(int(i) for i in test)
    for split_index in range(NUM_SPLITS):
        rng = np.random.default_rng(np.random.SeedSequence([base_seed, 1 + split_index]))
        chosen: list[int] = []
        for cls in range(dataset.num_classes):
            members = pool[pool_labels == cls]
            if members.size < _PER_CLASS:
                raise DataError(
                    f"class {cls} has only {members.size} nodes outside val/test; "
                    f"{_PER_CLASS} per class are required"
                )
            picked = rng.permutation(members)[:_PER_CLASS]
            chosen.extend(int(i) for i in picked)
        current = set(chosen)
        remainder = rng.permutation(np.array(sorted(set(pool.tolist()) - current), dtype=np.int64))
        consumed = 0
        for size_index, target in enumerate(targets, start=1):
            need = target - len(current)
            if need < 0:
                raise DataError(
                    f"size targets are not nondecreasing for {dataset.name!r}: {targets}"
                )
            extra = remainder[consumed : consumed + need]
            consumed += need
            current.update(int(i) for i in extra)
            splits[(size_index, split_index)] = DataSplit(
                size_index=size_index,
                split_index=split_index,
                train=tuple(sorted(current)),
                val=val_t,
                test=test_t,
            )
    return splits


def split_to_text(split: DataSplit) -> str:
    lines = ["train:"]
    lines += [str(i) for i in split.train]
    lines.append("val:")
    lines += [str(i) for i in split.val]
    lines.append("test:")
    lines += [str(i) for i in split.test]
    return "\n".join(lines) + "\n"


def _parse_split_text(path: Path, size_index: int, split_index: int) -> DataSplit:
    sections: dict[str, list[int]] = {"train": [], "val": [], "test": []}
    active: list[int] | None = None
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in ("train:", "val:", "test:"):
            active = sections[line[:-1]]
            continue
        if active is None:
            raise DataError(f"{path}:{lineno}: node id before any section header")
        for token in line.split():
            active.append(_parse_int(path, lineno, token, "node id"))
    if not sections["train"] or not sections["val"] or not sections["test"]:
        raise DataError(f"{path}: every split section must be nonempty")
    return DataSplit(
        size_index=size_index,
        split_index=split_index,
        train=tuple(sections["train"]),
        val=tuple(sections["val"]),
        test=tuple(sections["test"]),
    )


def save_splits(splits, out_dir) -> list[Path]:
    """Write each split as <out_dir>/<size>/<split>/split.txt. Idempotent for
    identical inputs; returns the written paths."""
    out = Path(out_dir)
    written = []
    for (size_index, split_index), split in sorted(splits.items()):
        d = out / str(size_index) / str(split_index)
        d.mkdir(parents=True, exist_ok=True)
        target = d / "split.txt"
        tmp = d / "split.txt.tmp"
        tmp.write_text(split_to_text(split), encoding="utf-8")
        os.replace(tmp, target)
        written.append(target)
    return written


def load_split(splits_dir, size_index: int, split_index: int) -> DataSplit:
    path = Path(splits_dir) / str(size_index) / str(split_index) / "split.txt"
    if not path.is_file():
        raise DataError(
            f"split file {path} not found; generate splits first (splits command)"
        )
    return _parse_split_text(path, size_index, split_index)


def load_standard_split(dataset: Dataset) -> DataSplit:
    """The fixed benchmark split shipped next to the dataset files."""
    if dataset.source_dir is None:
        raise DataError(f"dataset {dataset.name!r} was not loaded from a directory")
    path = Path(dataset.source_dir) / "standard_split.txt"
    if not path.is_file():
        raise DataError(f"standard split unavailable for dataset {dataset.name!r}")
    split = _parse_split_text(path, 0, 0)
    n = dataset.num_nodes
    for section in (split.train, split.val, split.test):
        for i in section:
            if not (0 <= i < n):
                raise DataError(f"{path}: node id {i} outside [0, {n})")
    return split
