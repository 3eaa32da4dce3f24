"""Command-line surface: split generation, training runs, random-search
sweeps, comparison reports, propagation-model grids, gradient checks, and
cost estimates.

Every command is replayable: the seed plus the flags plus the input files
fully determine the outputs. Sweep selection looks at validation accuracy
only; the per-trial log carries no test numbers at all, so the absence of
leakage can be checked from the artifacts alone.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import (
    NUM_SIZES,
    NUM_SPLITS,
    Dataset,
    generate_splits,
    load_dataset,
    load_split,
    load_standard_split,
    save_splits,
)
from .errors import DataError, GraphComposeError, NumericError, UsageError
from .evaluation import RunResult, accuracy, aggregate, average_rank, render_report
from .graph import GraphTopology, build_operator
from .lpnn import LpnnWeights, predict_from_f, predict_from_g, train_lpnn
from .networks import (
    PRESET_NAMES,
    NetworkSpec,
    _representative_dim,
    compile_network,
    estimate_cost,
    forward,
    preset,
    spec_from_dict,
)
from .training import TrainConfig, gradient_check, train

__all__ = ["Domain", "SweepSpace", "SweepTrial", "run_sweep", "sample_config", "main"]


# ---------------------------------------------------------------------------
# Random-search space


@dataclass(frozen=True)
class Domain:
    """A scalar sampling interval, linear or log-spaced."""

    low: float
    high: float
    log: bool = False

    def __post_init__(self) -> None:
        if not self.low < self.high:
            raise UsageError(f"domain needs low < high, got [{self.low}, {self.high}]")
        if self.log and self.low <= 0:
            raise UsageError("log-spaced domain needs low > 0")

    def sample(self, rng) -> float:
        if self.log:
            return float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))
        return float(rng.uniform(self.low, self.high))

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


@dataclass(frozen=True)
class SweepSpace:
    """Hyperparameter domains for random search.

    The declared space draws learning rate, dropout, and weight decay from
    (0, 1) and the hidden width from a fixed choice set; the joint-field
    baseline adds its five loss weights, also from (0, 1). The default
    narrows the learning rate to a log-spaced (1e-4, 1e-1) band because a
    plain (0, 1) draw wastes most of a small budget on divergent rates;
    paper_space() restores the plain draw.
    """

    learning_rate: Domain = Domain(1e-4, 1e-1, log=True)
    dropout: Domain = Domain(0.0, 1.0)
    weight_decay: Domain = Domain(0.0, 1.0)
    hidden_dims: tuple[int, ...] = (8, 16, 32, 64, 128)
    loss_weights: Domain = Domain(0.0, 1.0)

    @classmethod
    def paper_space(cls) -> "SweepSpace":
        return cls(learning_rate=Domain(0.0, 1.0))


_LOSS_WEIGHT_KEYS = ("mu_g", "mu_l", "mu_u", "lambda_l", "lambda_u")


def sample_config(space: SweepSpace, rng, *, with_hidden: bool, with_loss_weights: bool) -> dict:
    cfg = {
        "learning_rate": space.learning_rate.sample(rng),
        "dropout": space.dropout.sample(rng),
        "weight_decay": space.weight_decay.sample(rng),
    }
    if with_hidden:
        cfg["hidden_dim"] = int(space.hidden_dims[rng.integers(len(space.hidden_dims))])
    if with_loss_weights:
        for key in _LOSS_WEIGHT_KEYS:
            cfg[key] = space.loss_weights.sample(rng)
    return cfg


@dataclass(frozen=True)
class SweepTrial:
    index: int
    config: dict
    seed: int
    status: str  # "ok" or "failed"
    val_accuracy: float
    message: str = ""


def trial_seed(sweep_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([sweep_seed, 1 + index]).generate_state(1)[0])


def run_sweep(
    run_one,
    space: SweepSpace,
    budget: int,
    seed: int,
    jobs: int = 1,
    *,
    with_hidden: bool = True,
    with_loss_weights: bool = False,
):
    """Sample `budget` configs, score each by validation accuracy, and pick
    the best (ties go to the first sampled).

    All configs and per-trial seeds are drawn up front from the sweep seed,
    and results are merged in config-index order, so the parallelism degree
    never changes the outcome. run_one(config, seed) returns a validation
    accuracy and may raise NumericError for a diverged run.
    """
    if budget < 1:
        raise UsageError(f"sweep budget must be >= 1, got {budget}")
    if jobs < 1:
        raise UsageError(f"jobs must be >= 1, got {jobs}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    configs = [
        sample_config(space, rng, with_hidden=with_hidden, with_loss_weights=with_loss_weights)
        for _ in range(budget)
    ]

    def attempt(index: int) -> SweepTrial:
        config = configs[index]
        run_seed = trial_seed(seed, index)
        try:
            val = run_one(config, run_seed)
        except NumericError as exc:
            return SweepTrial(index, config, run_seed, "failed", float("nan"), str(exc))
        return SweepTrial(index, config, run_seed, "ok", float(val))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trials = list(pool.map(attempt, range(budget)))
    else:
        trials = [attempt(i) for i in range(budget)]

    best: SweepTrial | None = None
    for trial in trials:
        if trial.status == "ok" and (best is None or trial.val_accuracy > best.val_accuracy):
            best = trial
    if best is None:
        raise NumericError(
            f"all {budget} sweep configurations failed; last error: {trials[-1].message}"
        )
    return best, trials


def trials_to_text(trials) -> str:
    lines = ["index\tstatus\tval_accuracy\tconfig"]
    for t in trials:
        lines.append(
            f"{t.index}\t{t.status}\t{t.val_accuracy:.10g}\t"
            f"{json.dumps(t.config, sort_keys=True)}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Shared command plumbing


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through UsageError so
    # usage problems exit 1 and data problems keep exit 2.
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(message)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


@dataclass(frozen=True)
class _Method:
    label: str
    is_lpnn: bool = False
    file_spec: NetworkSpec | None = None
    preset_name: str | None = None
    depth: int | None = None
    lp_layers: int | None = None
    hidden: int | None = None
    fp_operator: str = "symmetric"

    @property
    def samples_hidden(self) -> bool:
        return self.preset_name is not None

    def spec_for(self, hidden_dim: int | None = None) -> NetworkSpec:
        if self.file_spec is not None:
            return self.file_spec
        if self.preset_name is None:
            raise UsageError("the joint-field baseline has no composed network form")
        hidden = hidden_dim if hidden_dim is not None else (self.hidden or 16)
        return preset(
            self.preset_name,
            hidden_dim=hidden,
            depth=self.depth,
            lp_layers=self.lp_layers,
            fp_operator=self.fp_operator,
        )


def _resolve_method(args) -> _Method:
    name = args.method
    shape_flags = [
        flag
        for flag, value in (("--l", args.l), ("--ll", args.ll), ("--hidden", args.hidden))
        if value is not None
    ]
    if name == "lpnn":
        if shape_flags:
            raise UsageError(f"{', '.join(shape_flags)} do not apply to method 'lpnn'")
        return _Method(label="lpnn", is_lpnn=True)
    fp_operator = "row" if args.operator == "row" else "symmetric"
    if name in PRESET_NAMES:
        return _Method(
            label=name,
            preset_name=name,
            depth=args.l,
            lp_layers=args.ll,
            hidden=args.hidden,
            fp_operator=fp_operator,
        )
    path = Path(name)
    if path.is_file():
        if shape_flags:
            raise UsageError(
                f"{', '.join(shape_flags)} apply only to named presets, not spec files"
            )
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read network spec {path}: {exc}") from exc
        spec = spec_from_dict(doc)
        return _Method(label=spec.name, file_spec=spec, fp_operator=fp_operator)
    raise UsageError(
        f"unknown method {name!r}: expected one of {', '.join(PRESET_NAMES)}, "
        "lpnn, or a path to a network spec file"
    )


def _operator_set(topology: GraphTopology, args):
    """Build the named operator set a network compiles against.

    Returns (operators, allow_non_stochastic_lp). --alpha/--beta select the
    self-vs-neighbor mixing weights unless --operator is 'general', where they
    become the degree-normalization exponents.
    """
    alpha, beta = args.alpha, args.beta
    if args.operator == "general":
        if alpha is None or beta is None:
            raise UsageError("--operator general requires --alpha and --beta exponents")
        op = build_operator(topology, "general", alpha=alpha, beta=beta)
        return {"symmetric": op, "row": op}, True
    mix = None
    if (alpha is None) != (beta is None):
        raise UsageError("--alpha and --beta must be given together")
    if args.operator == "mix" and alpha is None:
        raise UsageError("--operator mix requires --alpha and --beta weights")
    if alpha is not None:
        mix = (alpha, beta)
    operators = {
        "symmetric": build_operator(topology, "symmetric", mix=mix),
        "row": build_operator(topology, "row", mix=mix),
    }
    return operators, False


def _check_lpnn_plain_operator(args) -> None:
    if args.operator != "symmetric" or args.alpha is not None or args.beta is not None:
        raise UsageError(
            "method 'lpnn' builds its own symmetric operator; "
            "--operator/--alpha/--beta do not apply"
        )


def _resolve_split(args, dataset: Dataset):
    if args.standard_split:
        if args.size is not None or args.split is not None:
            raise UsageError("--standard-split conflicts with --size/--split")
        return load_standard_split(dataset)
    if args.size is None or args.split is None:
        raise UsageError("choose a split: --standard-split, or both --size and --split")
    if not 1 <= args.size <= NUM_SIZES:
        raise UsageError(f"--size must lie in [1, {NUM_SIZES}], got {args.size}")
    if not 0 <= args.split < NUM_SPLITS:
        raise UsageError(f"--split must lie in [0, {NUM_SPLITS - 1}], got {args.split}")
    splits_dir = args.splits_dir or str(Path(args.dataset_dir) / "splits")
    return load_split(splits_dir, args.size, args.split)


def _config_from_args(args, seed: int | None = None) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        dropout=args.dropout,
        weight_decay=args.weight_decay,
        max_epochs=args.epochs,
        patience=args.patience,
        seed=args.seed if seed is None else seed,
        precision=args.precision,
    )


def _config_doc(config: TrainConfig) -> dict:
    return {
        "learning_rate": config.learning_rate,
        "dropout": config.dropout,
        "weight_decay": config.weight_decay,
        "max_epochs": config.max_epochs,
        "patience": config.patience,
        "seed": config.seed,
        "precision": config.precision,
    }


def _train_composed(dataset: Dataset, split, spec, operators, allow_lp, config):
    net = compile_network(
        spec,
        operators,
        dataset.num_features,
        dataset.num_classes,
        features=dataset.features,
        dropout=config.dropout,
        num_edges=dataset.num_edges,
        allow_non_stochastic_lp=allow_lp,
    )
    params, history = train(net, dataset, split, config)
    return net, params, history


def _test_accuracy(net, params, dataset: Dataset, split) -> float:
    out, _ = forward(net, params, None, "infer")
    return accuracy(out, dataset.labels, split.test)


def _run_dir(out_root: str, dataset: Dataset, label: str, split, suffix: str = "") -> Path:
    name = f"{dataset.name}_{label}_s{split.size_index}_p{split.split_index}{suffix}"
    return Path(out_root) / name


def _persist_result(run_dir: Path, result: RunResult, history) -> None:
    _write_atomic(run_dir / "result.json", json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    _write_atomic(run_dir / "history.txt", history.to_text())


# ---------------------------------------------------------------------------
# Commands


def cmd_splits(args) -> int:
    dataset = load_dataset(args.dataset_dir)
    splits = generate_splits(dataset, args.seed)
    out_dir = Path(args.out) if args.out else Path(args.dataset_dir) / "splits"
    paths = save_splits(splits, out_dir)
    sizes = tuple(len(splits[(k, 0)].train) for k in range(1, NUM_SIZES + 1))
    print(f"wrote {len(paths)} split files under {out_dir}")
    print("train sizes: " + ", ".join(str(s) for s in sizes))
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(args.dataset_dir)
    method = _resolve_method(args)
    split = _resolve_split(args, dataset)
    config = _config_from_args(args)

    if method.is_lpnn:
        _check_lpnn_plain_operator(args)
        weights = LpnnWeights(args.mu_g, args.mu_l, args.mu_u, args.lambda_l, args.lambda_u)
        model, history = train_lpnn(dataset, split, config, weights)
        test = accuracy(predict_from_g(model, dataset.features), dataset.labels, split.test)
        field_test = accuracy(predict_from_f(model), dataset.labels, split.test)
        cfg_doc = {**_config_doc(config), **weights.as_dict()}
    else:
        operators, allow_lp = _operator_set(dataset.topology, args)
        spec = method.spec_for()
        net, params, history = _train_composed(dataset, split, spec, operators, allow_lp, config)
        test = _test_accuracy(net, params, dataset, split)
        field_test = None
        cfg_doc = {**_config_doc(config), "operator": args.operator}
        if method.samples_hidden:
            cfg_doc["hidden_dim"] = method.hidden or 16
        if args.alpha is not None:
            cfg_doc["alpha"], cfg_doc["beta"] = args.alpha, args.beta

    result = RunResult(
        method=method.label,
        dataset=dataset.name,
        size_index=split.size_index,
        split_index=split.split_index,
        test_accuracy=test,
        best_val_accuracy=history.best_val_accuracy,
        config=cfg_doc,
    )
    run_dir = _run_dir(args.out, dataset, method.label, split)
    _persist_result(run_dir, result, history)
    print(
        f"{method.label} on {dataset.name} (size {split.size_index}, split {split.split_index}): "
        f"test accuracy {100 * test:.1f}, best val {100 * history.best_val_accuracy:.1f} "
        f"at epoch {history.best_epoch}"
    )
    if field_test is not None:
        print(f"label-field test accuracy {100 * field_test:.1f}")
    print(f"results in {run_dir}")
    return 0


def cmd_sweep(args) -> int:
    dataset = load_dataset(args.dataset_dir)
    method = _resolve_method(args)
    split = _resolve_split(args, dataset)
    space = SweepSpace.paper_space() if args.paper_space else SweepSpace()

    if method.is_lpnn:
        _check_lpnn_plain_operator(args)
        operators, allow_lp = None, False
    else:
        operators, allow_lp = _operator_set(dataset.topology, args)

    def run_one(cfg: dict, run_seed: int) -> float:
        config = TrainConfig(
            learning_rate=cfg["learning_rate"],
            dropout=cfg["dropout"],
            weight_decay=cfg["weight_decay"],
            max_epochs=args.epochs,
            patience=args.patience,
            seed=run_seed,
            precision=args.precision,
        )
        if method.is_lpnn:
            weights = LpnnWeights(*(cfg[k] for k in _LOSS_WEIGHT_KEYS))
            _, history = train_lpnn(dataset, split, config, weights)
        else:
            spec = method.spec_for(cfg.get("hidden_dim"))
            _, _, history = _train_composed(dataset, split, spec, operators, allow_lp, config)
        return history.best_val_accuracy

    best, trials = run_sweep(
        run_one,
        space,
        args.budget,
        args.seed,
        args.jobs,
        with_hidden=method.samples_hidden,
        with_loss_weights=method.is_lpnn,
    )

    # Retrain the winner (same per-trial seed, so the run is identical) and
    # only now look at test accuracy.
    config = TrainConfig(
        learning_rate=best.config["learning_rate"],
        dropout=best.config["dropout"],
        weight_decay=best.config["weight_decay"],
        max_epochs=args.epochs,
        patience=args.patience,
        seed=best.seed,
        precision=args.precision,
    )
    if method.is_lpnn:
        weights = LpnnWeights(*(best.config[k] for k in _LOSS_WEIGHT_KEYS))
        model, history = train_lpnn(dataset, split, config, weights)
        test = accuracy(predict_from_g(model, dataset.features), dataset.labels, split.test)
    else:
        spec = method.spec_for(best.config.get("hidden_dim"))
        net, params, history = _train_composed(dataset, split, spec, operators, allow_lp, config)
        test = _test_accuracy(net, params, dataset, split)

    cfg_doc = {
        **best.config,
        "seed": best.seed,
        "trial_index": best.index,
        "budget": args.budget,
        "sweep_seed": args.seed,
        "max_epochs": args.epochs,
        "patience": args.patience,
        "precision": args.precision,
    }
    result = RunResult(
        method=method.label,
        dataset=dataset.name,
        size_index=split.size_index,
        split_index=split.split_index,
        test_accuracy=test,
        best_val_accuracy=best.val_accuracy,
        config=cfg_doc,
    )
    run_dir = _run_dir(args.out, dataset, method.label, split, suffix=f"_sweep{args.seed}")
    _persist_result(run_dir, result, history)
    _write_atomic(run_dir / "trials.txt", trials_to_text(trials))
    failed = sum(1 for t in trials if t.status != "ok")
    print(
        f"swept {args.budget} configs ({failed} failed): best trial {best.index} "
        f"reached val {100 * best.val_accuracy:.1f}; its test accuracy is {100 * test:.1f}"
    )
    print(f"results in {run_dir}")
    return 0


_METHOD_ORDER = {name: i for i, name in enumerate(PRESET_NAMES + ("lpnn",))}


def cmd_compare(args) -> int:
    root = Path(args.results_dir)
    if not root.is_dir():
        raise DataError(f"results directory {root} does not exist")
    results = []
    for path in sorted(root.rglob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise DataError(f"{path}: not a valid result file: {exc}") from exc
        results.append(RunResult.from_dict(doc))
    if args.size is not None:
        results = [r for r in results if r.size_index == args.size]
    if not results:
        raise DataError(f"no run results found under {root}")

    by_cell: dict[tuple[str, str], list[float]] = defaultdict(list)
    for r in results:
        by_cell[(r.method, r.dataset)].append(r.test_accuracy)
    methods = sorted(
        {m for m, _ in by_cell}, key=lambda m: (_METHOD_ORDER.get(m, len(_METHOD_ORDER)), m)
    )
    datasets = sorted({d for _, d in by_cell})
    if len(methods) < 2:
        raise UsageError("compare needs results for at least 2 methods")
    missing = [(m, d) for m in methods for d in datasets if (m, d) not in by_cell]
    if missing:
        cells = ", ".join(f"({m}, {d})" for m, d in missing)
        raise DataError(f"comparison table is incomplete; missing cells: {cells}")

    stats: dict[str, dict] = {}
    means: dict[str, dict] = {}
    for m in methods:
        stats[m] = {}
        means[m] = {}
        for d in datasets:
            values = by_cell[(m, d)]
            if len(values) >= 2:
                mean, std = aggregate(values)
            else:
                mean, std = values[0], None
            stats[m][d] = (mean, std)
            means[m][d] = mean
    report = render_report(stats, average_rank(means))
    print(report, end="")
    if args.out:
        _write_atomic(Path(args.out), report)
    return 0


# The published grid for both propagation families.
DEFAULT_PROP_GRID: tuple[tuple[float, float], ...] = (
    (0.0, 1.0),
    (0.1, 0.9),
    (0.25, 0.75),
    (0.33, 0.67),
    (0.5, 0.5),
    (0.67, 0.33),
    (0.75, 0.25),
    (0.9, 0.1),
    (1.0, 0.0),
    (1.0, 1.0),
)


def _parse_grid(text: str) -> tuple[tuple[float, float], ...]:
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise UsageError(f"grid point {chunk!r} is not of the form alpha,beta")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise UsageError(f"grid point {chunk!r} is not numeric") from exc
    if not points:
        raise UsageError("empty propagation-model grid")
    return tuple(points)


def cmd_propmodel_sweep(args) -> int:
    dataset = load_dataset(args.dataset_dir)
    method = _resolve_method(args)
    if method.is_lpnn:
        raise UsageError("propmodel-sweep applies to composed networks, not 'lpnn'")
    split = _resolve_split(args, dataset)
    if args.alpha is not None or args.beta is not None:
        raise UsageError("propmodel-sweep takes its alpha/beta pairs from --grid")
    grid = _parse_grid(args.grid) if args.grid else DEFAULT_PROP_GRID
    config = _config_from_args(args)

    rows = []
    last_error: DataError | None = None
    for alpha, beta in grid:
        try:
            if args.model == "mix":
                operators = {
                    "symmetric": build_operator(dataset.topology, "symmetric", mix=(alpha, beta)),
                    "row": build_operator(dataset.topology, "row", mix=(alpha, beta)),
                }
                allow_lp = False
            else:
                op = build_operator(dataset.topology, "general", alpha=alpha, beta=beta)
                operators = {"symmetric": op, "row": op}
                allow_lp = True
        except DataError as exc:
            # A degenerate point (e.g. pure-neighbor mixing on a graph with an
            # isolated node) invalidates its row, not the rest of the grid.
            last_error = exc
            rows.append((alpha, beta, None, None))
            print(f"alpha={alpha:g} beta={beta:g}: invalid ({exc})")
            continue
        spec = method.spec_for()
        net, params, history = _train_composed(dataset, split, spec, operators, allow_lp, config)
        test = _test_accuracy(net, params, dataset, split)
        rows.append((alpha, beta, history.best_val_accuracy, test))
        print(
            f"alpha={alpha:g} beta={beta:g}: val {100 * history.best_val_accuracy:.1f}, "
            f"test {100 * test:.1f}"
        )
    if last_error is not None and all(val is None for _, _, val, _ in rows):
        raise last_error

    lines = ["alpha\tbeta\tval\ttest"]
    for alpha, beta, val, test in rows:
        if val is None:
            lines.append(f"{alpha:g}\t{beta:g}\t-\t-")
        else:
            lines.append(f"{alpha:g}\t{beta:g}\t{100 * val:.1f}\t{100 * test:.1f}")
    table = "\n".join(lines) + "\n"
    if args.out:
        _write_atomic(Path(args.out), table)
        print(f"table written to {args.out}")
    return 0


def _toy_dataset(num_nodes: int, input_dim: int, num_classes: int, seed: int) -> Dataset:
    """A small random-but-deterministic dataset for gradient checks."""
    if num_nodes < 3:
        raise UsageError(f"gradient-check graph needs >= 3 nodes, got {num_nodes}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 99]))
    edges = [(i, (i + 1) % num_nodes) for i in range(num_nodes)]
    for _ in range(num_nodes):
        u, v = rng.integers(num_nodes, size=2)
        if u != v:
            edges.append((int(u), int(v)))
    return Dataset(
        name="gradient-check",
        topology=GraphTopology.from_edge_list(num_nodes, edges),
        features=rng.normal(size=(num_nodes, input_dim)),
        labels=rng.integers(num_classes, size=num_nodes),
        num_classes=num_classes,
    )


def cmd_gradcheck(args) -> int:
    if args.dataset_dir:
        dataset = load_dataset(args.dataset_dir)
    else:
        dataset = _toy_dataset(args.nodes, args.input_dim, args.classes, args.seed)
    method = _resolve_method(args)
    if method.is_lpnn:
        raise UsageError("gradcheck covers the composed chains; 'lpnn' is not supported here")
    operators, allow_lp = _operator_set(dataset.topology, args)
    spec = method.spec_for()
    net = compile_network(
        spec,
        operators,
        dataset.num_features,
        dataset.num_classes,
        features=dataset.features,
        dropout=0.0,
        allow_non_stochastic_lp=allow_lp,
    )
    report = gradient_check(net, dataset, tolerance=args.tolerance, seed=args.seed)
    for i, err in enumerate(report.per_param):
        print(f"parameter {i}: max relative error {err:.3e}")
    print(f"overall max relative error {report.max_rel_error:.3e} (tolerance {report.tolerance:g})")
    if not report.passed:
        raise NumericError(
            f"gradient check failed: {report.max_rel_error:.3e} >= {report.tolerance:g}"
        )
    print("gradient check PASS")
    return 0


def cmd_cost(args) -> int:
    method = _resolve_method(args)
    if method.is_lpnn:
        raise UsageError("cost terms are defined for the composed networks, not 'lpnn'")
    if args.dataset_dir:
        dataset = load_dataset(args.dataset_dir)
        n, edges = dataset.num_nodes, dataset.num_edges
        input_dim, classes = dataset.num_features, dataset.num_classes
    else:
        sizes = (args.nodes, args.edges, args.input_dim, args.classes)
        if any(v is None for v in sizes):
            raise UsageError(
                "cost needs --dataset-dir or all of --nodes, --edges, --input-dim, --classes"
            )
        n, edges, input_dim, classes = sizes
    spec = method.spec_for()
    dim = _representative_dim(spec, input_dim)
    cost = estimate_cost(spec, n, edges, dim, classes)
    print(f"{method.label}: nodes={n} edges={edges} dim={dim} classes={classes}")
    for name in ("feature_prop", "hidden", "classifier", "label_prop"):
        print(f"{name:<13}{getattr(cost, name)}")
    print(f"{'total':<13}{cost.total}")
    return 0


# ---------------------------------------------------------------------------
# Argument wiring


def _add_dataset_dir(p, required=True):
    p.add_argument("--dataset-dir", required=required, default=None, help="dataset directory")


def _add_split_flags(p):
    p.add_argument(
        "--standard-split",
        action="store_true",
        help="use the fixed benchmark split shipped with the dataset",
    )
    p.add_argument("--size", type=int, default=None, help="training-set size index (1-5)")
    p.add_argument("--split", type=int, default=None, help="split index (0-9)")
    p.add_argument(
        "--splits-dir",
        default=None,
        help="directory holding generated splits (default <dataset-dir>/splits)",
    )


def _add_method_flags(p, *, default=None):
    p.add_argument(
        "--method",
        required=default is None,
        default=default,
        help=f"one of {', '.join(PRESET_NAMES)}, lpnn, or a network spec file",
    )
    p.add_argument("--l", type=int, default=None, help="propagation/feed-forward depth budget")
    p.add_argument("--ll", type=int, default=None, help="label propagation layer count")
    p.add_argument("--hidden", type=int, default=None, help="hidden width for preset methods")


def _add_operator_flags(p):
    p.add_argument(
        "--operator",
        choices=("symmetric", "row", "general", "mix"),
        default="symmetric",
        help="feature-side normalization, or 'general'/'mix' propagation models",
    )
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)


def _add_train_flags(p):
    p.add_argument("--lr", type=float, default=0.01, help="learning rate")
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--epochs", type=int, default=500, help="epoch budget")
    p.add_argument("--patience", type=int, default=25, help="early-stopping patience")
    p.add_argument("--precision", choices=("float32", "float64"), default="float64")
    p.add_argument("--seed", type=int, default=0)


def _add_lpnn_flags(p):
    p.add_argument("--mu-g", type=float, default=1.0, help="smoothness weight")
    p.add_argument("--mu-l", type=float, default=1.0, help="labeled fit weight")
    p.add_argument("--mu-u", type=float, default=1.0, help="unlabeled shrinkage weight")
    p.add_argument("--lambda-l", type=float, default=1.0, help="labeled KL weight")
    p.add_argument("--lambda-u", type=float, default=1.0, help="unlabeled KL weight")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="graphcompose",
        description="Compose, train, and compare graph networks built from "
        "smoothing and feed-forward blocks.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("splits", help="generate and store the 5x10 evaluation splits")
    _add_dataset_dir(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory (default <dataset-dir>/splits)")

    p = sub.add_parser("train", help="train one method on one split")
    _add_dataset_dir(p)
    _add_split_flags(p)
    _add_method_flags(p)
    _add_operator_flags(p)
    _add_train_flags(p)
    _add_lpnn_flags(p)
    p.add_argument("--out", default="runs", help="directory for results")

    p = sub.add_parser("sweep", help="random hyperparameter search on one split")
    _add_dataset_dir(p)
    _add_split_flags(p)
    _add_method_flags(p)
    _add_operator_flags(p)
    p.add_argument("--budget", type=int, default=200, help="number of sampled configs")
    p.add_argument("--jobs", type=int, default=1, help="concurrent training runs")
    p.add_argument(
        "--paper-space",
        action="store_true",
        help="sample the learning rate plain-uniform from (0,1) instead of the "
        "log-spaced (1e-4, 1e-1) default",
    )
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--patience", type=int, default=25)
    p.add_argument("--precision", choices=("float32", "float64"), default="float64")
    p.add_argument("--seed", type=int, default=0, help="sweep seed")
    p.add_argument("--out", default="runs", help="directory for results")

    p = sub.add_parser("compare", help="aggregate stored results into a rank report")
    p.add_argument("--results-dir", required=True)
    p.add_argument("--size", type=int, default=None, help="restrict to one size index")
    p.add_argument("--out", default=None, help="also write the report to this file")

    p = sub.add_parser(
        "propmodel-sweep", help="train one method across a grid of propagation models"
    )
    _add_dataset_dir(p)
    _add_split_flags(p)
    _add_method_flags(p)
    p.add_argument(
        "--model",
        choices=("mix", "exponents"),
        required=True,
        help="mix: alpha*I + beta*A self/neighbor weights; exponents: "
        "degree powers alpha/beta in the normalization",
    )
    p.add_argument(
        "--grid",
        default=None,
        help="semicolon-separated alpha,beta pairs (default: the published 10-point grid)",
    )
    # Propagation flags stay so _resolve_method/_operator_set share code, but
    # the pairs come from --grid.
    p.set_defaults(operator="symmetric", alpha=None, beta=None)
    _add_train_flags(p)
    p.add_argument("--out", default=None, help="write the val/test table to this file")

    p = sub.add_parser("gradcheck", help="finite-difference check of the backward pass")
    _add_dataset_dir(p, required=False)
    _add_method_flags(p, default="gcn")
    _add_operator_flags(p)
    p.add_argument("--nodes", type=int, default=12, help="toy graph size when no dataset given")
    p.add_argument("--input-dim", type=int, default=5)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("cost", help="print the per-term operation counts of a method")
    _add_dataset_dir(p, required=False)
    _add_method_flags(p)
    p.set_defaults(operator="symmetric", alpha=None, beta=None)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--edges", type=int, default=None)
    p.add_argument("--input-dim", type=int, default=None)
    p.add_argument("--classes", type=int, default=None)

    return parser


_COMMANDS = {
    "splits": cmd_splits,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "propmodel-sweep": cmd_propmodel_sweep,
    "gradcheck": cmd_gradcheck,
    "cost": cmd_cost,
}


def run(argv) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        raise UsageError("a command is required")
    return _COMMANDS[args.command](args)


def main(argv=None) -> int:
    try:
        return run(sys.argv[1:] if argv is None else list(argv))
    except GraphComposeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return code if isinstance(code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
