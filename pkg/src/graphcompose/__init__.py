"""Composable graph networks: smoothing and feed-forward building blocks,
semi-supervised training, and the evaluation protocol around them."""

from .data import (
    DataSplit,
    Dataset,
    generate_splits,
    load_dataset,
    load_split,
    load_standard_split,
    save_splits,
)
from .errors import DataError, GraphComposeError, NumericError, UsageError
from .evaluation import RunResult, accuracy, aggregate, average_rank, render_report
from .graph import GraphTopology, PropagationOperator, build_operator
from .linalg import SparseMatrix, spmm, spmm_transposed
from .lpnn import LpnnWeights, predict_from_f, predict_from_g, train_lpnn
from .networks import (
    CostEstimate,
    Fp,
    GcnBlock,
    LinearClassifier,
    Lp,
    Mlp,
    NetworkSpec,
    PRESET_NAMES,
    Softmax,
    compile_network,
    estimate_cost,
    forward,
    backward,
    init_params,
    preset,
    spec_from_dict,
    spec_to_dict,
)
from .training import TrainConfig, TrainHistory, gradient_check, masked_cross_entropy, train

__version__ = "0.1.0"

__all__ = [
    "DataSplit",
    "Dataset",
    "generate_splits",
    "load_dataset",
    "load_split",
    "load_standard_split",
    "save_splits",
    "DataError",
    "GraphComposeError",
    "NumericError",
    "UsageError",
    "RunResult",
    "accuracy",
    "aggregate",
    "average_rank",
    "render_report",
    "GraphTopology",
    "PropagationOperator",
    "build_operator",
    "SparseMatrix",
    "spmm",
    "spmm_transposed",
    "LpnnWeights",
    "predict_from_f",
    "predict_from_g",
    "train_lpnn",
    "CostEstimate",
    "Fp",
    "GcnBlock",
    "LinearClassifier",
    "Lp",
    "Mlp",
    "NetworkSpec",
    "PRESET_NAMES",
    "Softmax",
    "compile_network",
    "estimate_cost",
    "forward",
    "backward",
    "init_params",
    "preset",
    "spec_from_dict",
    "spec_to_dict",
    "TrainConfig",
    "TrainHistory",
    "gradient_check",
    "masked_cross_entropy",
    "train",
    "__version__",
]
