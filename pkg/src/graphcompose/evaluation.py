"""Accuracy, split aggregation, and average-rank comparison across datasets."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DataError, UsageError

__all__ = [
    "RunResult",
    "RankTable",
    "accuracy",
    "aggregate",
    "format_cell",
    "parse_cell",
    "average_rank",
    "render_report",
]


def accuracy(p_bar, labels, node_set) -> float:
    """Fraction of nodes whose argmax class matches the label. Argmax ties
    resolve to the lowest class index."""
    idx = np.asarray(node_set, dtype=np.int64).ravel()
    if idx.size == 0:
        raise UsageError("accuracy needs a nonempty node set")
    preds = np.argmax(np.asarray(p_bar)[idx], axis=1)
    return float(np.mean(preds == np.asarray(labels)[idx]))


def aggregate(values) -> tuple[float, float]:
    """Mean and sample standard deviation (N-1 denominator) over split results."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise UsageError(
            f"aggregate needs at least 2 results for a sample std, got {values.size}"
        )
    return float(values.mean()), float(values.std(ddof=1))


def format_cell(mean: float, std: float | None = None) -> str:
    """Accuracies as percentages with one decimal, e.g. '82.2 (1.1)'."""
    if std is None:
        return f"{100.0 * mean:.1f}"
    return f"{100.0 * mean:.1f} ({100.0 * std:.1f})"


_CELL_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(?:\(\s*(\d+(?:\.\d+)?)\s*\))?\s*$")


def parse_cell(text: str) -> tuple[float, float | None]:
    m = _CELL_RE.match(text)
    if not m:
        raise UsageError(f"cannot parse result cell {text!r}")
    mean = float(m.group(1)) / 100.0
    std = None if m.group(2) is None else float(m.group(2)) / 100.0
    return mean, std


@dataclass(frozen=True)
class RunResult:
    method: str
    dataset: str
    size_index: int
    split_index: int
    test_accuracy: float
    best_val_accuracy: float
    config: dict

    def __post_init__(self) -> None:
        if not (0.0 <= self.test_accuracy <= 1.0):
            raise DataError(f"test accuracy {self.test_accuracy} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "dataset": self.dataset,
            "size_index": self.size_index,
            "split_index": self.split_index,
            "test_accuracy": self.test_accuracy,
            "best_val_accuracy": self.best_val_accuracy,
            "config": dict(self.config),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunResult":
        try:
            return cls(
                method=str(doc["method"]),
                dataset=str(doc["dataset"]),
                size_index=int(doc["size_index"]),
                split_index=int(doc["split_index"]),
                test_accuracy=float(doc["test_accuracy"]),
                best_val_accuracy=float(doc["best_val_accuracy"]),
                config=dict(doc.get("config", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed run result record: {exc}") from exc


@dataclass(frozen=True, eq=False)
class RankTable:
    methods: tuple[str, ...]
    datasets: tuple[str, ...]
    means: np.ndarray  # methods x datasets
    ranks: np.ndarray  # methods x datasets, fractional ties
    average_rank: np.ndarray  # per method


def _fractional_ranks(column: np.ndarray) -> np.ndarray:
    """Rank 1 for the highest value; exact ties share the average of the ranks
    they occupy."""
    ranks = np.empty(column.shape[0], dtype=np.float64)
    for i, v in enumerate(column):
        higher = int(np.sum(column > v))
        tied = int(np.sum(column == v))
        ranks[i] = higher + (tied + 1) / 2.0
    return ranks


def average_rank(mean_table) -> RankTable:
    """mean_table maps method -> dataset -> mean accuracy. Every method must
    cover every dataset; the missing (method, dataset) pair is named otherwise."""
    methods = tuple(mean_table)
    if not methods:
        raise UsageError("average_rank needs at least one method")
    datasets = tuple(mean_table[methods[0]])
    means = np.empty((len(methods), len(datasets)), dtype=np.float64)
    for i, m in enumerate(methods):
        for j, d in enumerate(datasets):
            if d not in mean_table[m]:
                raise DataError(f"rank table is missing a result for ({m}, {d})")
            means[i, j] = mean_table[m][d]
    for m in methods:
        extra = set(mean_table[m]) - set(datasets)
        if extra:
            raise DataError(
                f"method {m!r} has results for unexpected datasets {sorted(extra)}"
            )
    ranks = np.column_stack([_fractional_ranks(means[:, j]) for j in range(len(datasets))])
    return RankTable(
        methods=methods,
        datasets=datasets,
        means=means,
        ranks=ranks,
        average_rank=ranks.mean(axis=1),
    )


def render_report(stats, table: RankTable) -> str:
    """Text table with one 'mean (std)' cell per (method, dataset) and the
    average rank in the final column. stats maps method -> dataset ->
    (mean, std or None)."""
    header = ["method"] + list(table.datasets) + ["R"]
    rows = [header]
    for i, m in enumerate(table.methods):
        row = [m]
        for d in table.datasets:
            mean, std = stats[m][d]
            row.append(format_cell(mean, std))
        row.append(f"{table.average_rank[i]:.1f}")
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = []
    for r in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"
