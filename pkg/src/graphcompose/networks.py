"""Declarative network specs, their compiler, and the chain executor.

A NetworkSpec is an ordered list of stages: feature propagation (FP), MLP,
linear classifier, GCN block, softmax, and label propagation (LP). Compilation
validates the composition rules, folds any leading smoothing prefix into a
precomputed input matrix when features are supplied, and produces a flat layer
chain executed by forward/backward.

Composition rules enforced here: exactly one softmax; LP stages only after the
softmax, and only with a row-normalized operator (so probability rows stay
probability rows); FP stages only before any parameterized stage.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .graph import PropagationOperator
from .layers import (
    dropout_forward,
    dropout_vjp,
    linear_forward,
    linear_vjp,
    relu_forward,
    relu_vjp,
    softmax_rows_forward,
    softmax_rows_vjp,
)
from .linalg import spmm, spmm_transposed

__all__ = [
    "Fp",
    "Mlp",
    "LinearClassifier",
    "GcnBlock",
    "Softmax",
    "Lp",
    "NetworkSpec",
    "CompiledNetwork",
    "CostEstimate",
    "ForwardStates",
    "PRESET_NAMES",
    "preset",
    "spec_to_dict",
    "spec_from_dict",
    "validate_spec",
    "compile_network",
    "precompute_fp",
    "init_params",
    "forward",
    "backward",
    "estimate_cost",
    "with_dtype",
]


# ---------------------------------------------------------------------------
# Stages


@dataclass(frozen=True)
class Fp:
    """Feature propagation: `layers` parameter-free smoothings of the input."""

    layers: int = 2
    operator: str = "symmetric"

    def __post_init__(self) -> None:
        if self.layers < 0:
            raise UsageError(f"fp layers must be >= 0, got {self.layers}")


@dataclass(frozen=True)
class Mlp:
    """Hidden feed-forward layers only; the output layer is LinearClassifier."""

    hidden_dims: tuple[int, ...] = (16,)
    activation: str = "relu"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if any(d < 1 for d in self.hidden_dims):
            raise UsageError(f"mlp hidden dims must be positive, got {self.hidden_dims}")
        if self.activation not in ("relu", "identity"):
            raise UsageError(f"unknown mlp activation {self.activation!r}")


@dataclass(frozen=True)
class LinearClassifier:
    """Single linear map onto the class dimension."""


@dataclass(frozen=True)
class GcnBlock:
    """`layers` graph-convolution layers: each smooths (while smoothings last)
    then applies a linear map, with relu between layers. hidden_dims sizes the
    first layers-1 outputs; the final layer maps onto the class dimension."""

    layers: int = 2
    hidden_dims: tuple[int, ...] = (16,)
    operator: str = "symmetric"
    smoothings: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if self.layers < 1:
            raise UsageError(f"gcn block needs at least one layer, got {self.layers}")
        if len(self.hidden_dims) != self.layers - 1:
            raise UsageError(
                f"gcn block with {self.layers} layers needs {self.layers - 1} hidden dims, "
                f"got {len(self.hidden_dims)}"
            )
        if any(d < 1 for d in self.hidden_dims):
            raise UsageError(f"gcn hidden dims must be positive, got {self.hidden_dims}")
        s = self.layers if self.smoothings is None else self.smoothings
        if not (0 <= s <= self.layers):
            raise UsageError(
                f"gcn block smoothings must lie in [0, {self.layers}], got {self.smoothings}"
            )

    @property
    def effective_smoothings(self) -> int:
        return self.layers if self.smoothings is None else self.smoothings


@dataclass(frozen=True)
class Softmax:
    """Row-wise softmax producing the class probability matrix."""


@dataclass(frozen=True)
class Lp:
    """Label propagation: `layers` parameter-free smoothings of probabilities."""

    layers: int = 1
    operator: str = "row"

    def __post_init__(self) -> None:
        if self.layers < 0:
            raise UsageError(f"lp layers must be >= 0, got {self.layers}")


Stage = Fp | Mlp | LinearClassifier | GcnBlock | Softmax | Lp
_PARAMETERIZED = (Mlp, LinearClassifier, GcnBlock)


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    stages: tuple[Stage, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))


def validate_spec(spec: NetworkSpec) -> None:
    """Structural rules that need no operator set."""
    softmax_positions = [i for i, s in enumerate(spec.stages) if isinstance(s, Softmax)]
    if len(softmax_positions) != 1:
        raise UsageError(
            f"network {spec.name!r} must contain exactly one softmax stage, "
            f"found {len(softmax_positions)}"
        )
    sm = softmax_positions[0]
    for i, stage in enumerate(spec.stages):
        if isinstance(stage, Lp) and i < sm:
            raise UsageError(f"network {spec.name!r}: lp stages must come after the softmax")
        if i > sm and not isinstance(stage, Lp):
            raise UsageError(f"network {spec.name!r}: only lp stages may follow the softmax")
    first_param = next(
        (i for i, s in enumerate(spec.stages) if isinstance(s, _PARAMETERIZED)), sm
    )
    for i, stage in enumerate(spec.stages):
        if isinstance(stage, Fp) and i > first_param:
            raise UsageError(
                f"network {spec.name!r}: fp stages must come before any parameterized stage"
            )


# ---------------------------------------------------------------------------
# Presets


PRESET_NAMES = ("gcn", "sgcn", "fp-mlp", "sgcn-lp", "gcn-lp", "linear-lp", "mlp-lp")


def preset(
    name: str,
    *,
    hidden_dim: int = 16,
    depth: int | None = None,
    lp_layers: int | None = None,
    fp_operator: str = "symmetric",
    lp_operator: str = "row",
) -> NetworkSpec:
    """Build one of the named network shapes.

    depth is the total propagation/feed-forward budget L (default 2). For the
    split variants (sgcn-lp, gcn-lp) the budget is divided between the feature
    side and lp_layers on the label side, so lp_layers=0 reduces them to their
    propagation-free ancestors exactly.
    """
    if name not in PRESET_NAMES:
        raise UsageError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    length = 2 if depth is None else depth
    if length < 1:
        raise UsageError(f"network depth must be >= 1, got {length}")
    hid = (hidden_dim,) * (length - 1)

    def with_lp(stages: list[Stage], ll: int) -> tuple[Stage, ...]:
        if ll > 0:
            stages.append(Lp(layers=ll, operator=lp_operator))
        return tuple(stages)

    if name == "gcn":
        return NetworkSpec(name, (GcnBlock(length, hid, fp_operator, smoothings=length), Softmax()))
    if name == "sgcn":
        return NetworkSpec(name, (Fp(length, fp_operator), LinearClassifier(), Softmax()))
    if name == "fp-mlp":
        return NetworkSpec(
            name, (Fp(length, fp_operator), Mlp(hid), LinearClassifier(), Softmax())
        )
    if name == "sgcn-lp":
        ll = 1 if lp_layers is None else lp_layers
        fp = max(length - ll, 0)
        stages: list[Stage] = []
        if fp > 0:
            stages.append(Fp(fp, fp_operator))
        stages += [LinearClassifier(), Softmax()]
        return NetworkSpec(name, with_lp(stages, ll))
    if name == "gcn-lp":
        ll = 1 if lp_layers is None else lp_layers
        s = max(length - ll, 0)
        stages = [GcnBlock(length, hid, fp_operator, smoothings=s), Softmax()]
        return NetworkSpec(name, with_lp(stages, ll))
    if name == "linear-lp":
        ll = length if lp_layers is None else lp_layers
        return NetworkSpec(name, with_lp([LinearClassifier(), Softmax()], ll))
    # mlp-lp
    ll = length if lp_layers is None else lp_layers
    return NetworkSpec(name, with_lp([Mlp(hid), LinearClassifier(), Softmax()], ll))


# ---------------------------------------------------------------------------
# Spec serialization


def spec_to_dict(spec: NetworkSpec) -> dict:
    stages = []
    for stage in spec.stages:
        if isinstance(stage, Fp):
            stages.append({"kind": "fp", "layers": stage.layers, "operator": stage.operator})
        elif isinstance(stage, Mlp):
            stages.append(
                {
                    "kind": "mlp",
                    "hidden_dims": list(stage.hidden_dims),
                    "activation": stage.activation,
                }
            )
        elif isinstance(stage, LinearClassifier):
            stages.append({"kind": "linear_classifier"})
        elif isinstance(stage, GcnBlock):
            stages.append(
                {
                    "kind": "gcn_block",
                    "layers": stage.layers,
                    "hidden_dims": list(stage.hidden_dims),
                    "operator": stage.operator,
                    "smoothings": stage.smoothings,
                }
            )
        elif isinstance(stage, Softmax):
            stages.append({"kind": "softmax"})
        elif isinstance(stage, Lp):
            stages.append({"kind": "lp", "layers": stage.layers, "operator": stage.operator})
    return {"name": spec.name, "stages": stages}


def spec_from_dict(doc: dict) -> NetworkSpec:
    if not isinstance(doc, dict) or "name" not in doc or "stages" not in doc:
        raise UsageError("network spec document needs 'name' and 'stages' fields")
    stages: list[Stage] = []
    for entry in doc["stages"]:
        kind = entry.get("kind")
        if kind == "fp":
            stages.append(Fp(entry.get("layers", 2), entry.get("operator", "symmetric")))
        elif kind == "mlp":
            stages.append(
                Mlp(tuple(entry.get("hidden_dims", [16])), entry.get("activation", "relu"))
            )
        elif kind == "linear_classifier":
            stages.append(LinearClassifier())
        elif kind == "gcn_block":
            stages.append(
                GcnBlock(
                    entry.get("layers", 2),
                    tuple(entry.get("hidden_dims", [16])),
                    entry.get("operator", "symmetric"),
                    entry.get("smoothings"),
                )
            )
        elif kind == "softmax":
            stages.append(Softmax())
        elif kind == "lp":
            stages.append(Lp(entry.get("layers", 1), entry.get("operator", "row")))
        else:
            raise UsageError(f"unknown stage kind {kind!r} in network spec document")
    return NetworkSpec(str(doc["name"]), tuple(stages))


# ---------------------------------------------------------------------------
# Compiled form


@dataclass(frozen=True, eq=False)
class _SmoothEntry:
    op: PropagationOperator
    role: str  # "fp" inside the feature path, "lp" after the softmax

    @property
    def kind(self) -> str:
        return "lp" if self.role == "lp" else "smooth"


@dataclass(frozen=True)
class _LinearEntry:
    index: int
    in_dim: int
    out_dim: int
    kind: str = field(default="linear", init=False)


@dataclass(frozen=True)
class _ReluEntry:
    kind: str = field(default="relu", init=False)


@dataclass(frozen=True)
class _SoftmaxEntry:
    kind: str = field(default="softmax", init=False)


@dataclass(frozen=True)
class _DropoutEntry:
    rate: float
    kind: str = field(default="dropout", init=False)


@dataclass(frozen=True, eq=False)
class CostEstimate:
    """Operation counts mirroring the four cost terms of the composed models:
    in-training feature smoothing, hidden feed-forward work, the softmax
    classifier map, and label propagation."""

    feature_prop: int = 0
    hidden: int = 0
    classifier: int = 0
    label_prop: int = 0

    def nonzero_terms(self) -> dict[str, int]:
        return {
            name: value
            for name, value in (
                ("feature_prop", self.feature_prop),
                ("hidden", self.hidden),
                ("classifier", self.classifier),
                ("label_prop", self.label_prop),
            )
            if value
        }

    @property
    def total(self) -> int:
        return self.feature_prop + self.hidden + self.classifier + self.label_prop


@dataclass(frozen=True, eq=False)
class CompiledNetwork:
    spec: NetworkSpec
    layers: tuple
    param_shapes: tuple[tuple[int, int], ...]
    input_dim: int
    num_classes: int
    num_nodes: int | None
    x_bar: np.ndarray | None
    folded: tuple[PropagationOperator, ...]
    cost: CostEstimate | None

    @property
    def num_params(self) -> int:
        return sum(r * c for r, c in self.param_shapes)

    def describe(self) -> tuple[str, ...]:
        return tuple(entry.kind for entry in self.layers)


@dataclass
class ForwardStates:
    """Per-layer caches from a train-mode forward, consumed by backward."""

    params: list
    caches: list


def precompute_fp(op: PropagationOperator, x, layers: int) -> np.ndarray:
    """Apply `layers` successive smoothings; zero layers returns x unchanged."""
    if layers < 0:
        raise UsageError(f"fp layer count must be >= 0, got {layers}")
    out = np.asarray(x)
    for _ in range(layers):
        out = spmm(op.matrix, out)
    return out


def _resolve(operators, name: str, spec_name: str) -> PropagationOperator:
    if name not in operators:
        raise UsageError(
            f"network {spec_name!r} references operator {name!r}; "
            f"available: {sorted(operators)}"
        )
    return operators[name]


def compile_network(
    spec: NetworkSpec,
    operators,
    input_dim: int,
    num_classes: int,
    *,
    features=None,
    dropout: float = 0.0,
    num_edges: int | None = None,
    allow_non_stochastic_lp: bool = False,
) -> CompiledNetwork:
    """Validate a spec against an operator set and produce the executable chain.

    operators maps the names used by stages (usually "symmetric" and "row") to
    built PropagationOperator instances. When features are given, the leading
    smoothing prefix is folded into a precomputed input matrix.
    """
    validate_spec(spec)
    if input_dim < 1 or num_classes < 1:
        raise UsageError(f"need positive input_dim and num_classes, got {input_dim}, {num_classes}")
    if not (0.0 <= dropout < 1.0):
        raise UsageError(f"dropout must lie in [0, 1), got {dropout}")

    # Flatten stages into an ordered op list.
    flat: list = []
    dim = input_dim
    num_nodes: int | None = None

    def note_op(op: PropagationOperator) -> None:
        nonlocal num_nodes
        if num_nodes is None:
            num_nodes = op.num_nodes
        elif num_nodes != op.num_nodes:
            raise UsageError(
                f"operators disagree on node count: {num_nodes} vs {op.num_nodes}"
            )

    for pos, stage in enumerate(spec.stages):
        if isinstance(stage, Fp):
            op = _resolve(operators, stage.operator, spec.name)
            note_op(op)
            flat += [_SmoothEntry(op, "fp")] * stage.layers
        elif isinstance(stage, Mlp):
            for h in stage.hidden_dims:
                flat.append(_LinearEntry(-1, dim, h))
                dim = h
                if stage.activation == "relu":
                    flat.append(_ReluEntry())
        elif isinstance(stage, LinearClassifier):
            flat.append(_LinearEntry(-1, dim, num_classes))
            dim = num_classes
        elif isinstance(stage, GcnBlock):
            op = _resolve(operators, stage.operator, spec.name)
            note_op(op)
            dims = stage.hidden_dims + (num_classes,)
            for k in range(stage.layers):
                if k < stage.effective_smoothings:
                    flat.append(_SmoothEntry(op, "fp"))
                flat.append(_LinearEntry(-1, dim, dims[k]))
                dim = dims[k]
                if k < stage.layers - 1:
                    flat.append(_ReluEntry())
        elif isinstance(stage, Softmax):
            if dim != num_classes:
                raise UsageError(
                    f"network {spec.name!r}: stage {pos} (softmax) expects dimension "
                    f"{num_classes} but the preceding stage ends at {dim}"
                )
            flat.append(_SoftmaxEntry())
        elif isinstance(stage, Lp):
            op = _resolve(operators, stage.operator, spec.name)
            note_op(op)
            if op.kind != "row" and not allow_non_stochastic_lp:
                raise UsageError(
                    f"network {spec.name!r}: label propagation requires a row-normalized "
                    f"operator, got kind {op.kind!r}"
                )
            flat += [_SmoothEntry(op, "lp")] * stage.layers

    # Insert dropout in front of every linear layer and assign parameter slots.
    chain: list = []
    shapes: list[tuple[int, int]] = []
    for entry in flat:
        if isinstance(entry, _LinearEntry):
            if dropout > 0.0:
                chain.append(_DropoutEntry(dropout))
            entry = dataclasses.replace(entry, index=len(shapes))
            shapes.append((entry.in_dim, entry.out_dim))
        chain.append(entry)

    # Fold the leading smoothing run into a precomputed input when possible.
    x_bar = None
    folded: tuple[PropagationOperator, ...] = ()
    if features is not None:
        features = np.asarray(features)
        if features.ndim != 2 or features.shape[1] != input_dim:
            raise UsageError(
                f"features shape {features.shape} does not match input_dim {input_dim}"
            )
        if num_nodes is not None and features.shape[0] != num_nodes:
            raise UsageError(
                f"features have {features.shape[0]} rows but operators have "
                f"{num_nodes} nodes"
            )
        num_nodes = features.shape[0]
        prefix = 0
        while prefix < len(chain) and isinstance(chain[prefix], _SmoothEntry):
            prefix += 1
        folded = tuple(entry.op for entry in chain[:prefix])
        x_bar = features
        for op in folded:
            x_bar = spmm(op.matrix, x_bar)
        chain = chain[prefix:]

    cost = None
    if num_edges is not None:
        d = _representative_dim(spec, input_dim)
        n_for_cost = num_nodes if num_nodes is not None else 1
        cost = estimate_cost(spec, n_for_cost, num_edges, d, num_classes)

    return CompiledNetwork(
        spec=spec,
        layers=tuple(chain),
        param_shapes=tuple(shapes),
        input_dim=input_dim,
        num_classes=num_classes,
        num_nodes=num_nodes,
        x_bar=x_bar,
        folded=folded,
        cost=cost,
    )


def _representative_dim(spec: NetworkSpec, input_dim: int) -> int:
    hiddens = []
    for stage in spec.stages:
        if isinstance(stage, (Mlp, GcnBlock)):
            hiddens += list(stage.hidden_dims)
    return hiddens[0] if hiddens else input_dim


def init_params(net: CompiledNetwork, rng, dtype=np.float64) -> list[np.ndarray]:
    """Glorot-uniform weights, drawn in chain order from the given stream."""
    params = []
    for fan_in, fan_out in net.param_shapes:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype))
    return params


def forward(net: CompiledNetwork, params, x=None, mode: str = "infer", rng=None):
    """Run the chain. Returns (output, states); states is None in infer mode.

    When the network carries a precomputed input, x is ignored.
    """
    if mode not in ("train", "infer"):
        raise UsageError(f"forward mode must be 'train' or 'infer', got {mode!r}")
    if len(params) != len(net.param_shapes):
        raise UsageError(
            f"expected {len(net.param_shapes)} parameter matrices, got {len(params)}"
        )
    h = net.x_bar if net.x_bar is not None else x
    if h is None:
        raise UsageError("network was compiled without features; forward needs x")
    h = np.asarray(h)
    if h.shape[1] != net.input_dim and net.x_bar is None:
        raise UsageError(f"input has {h.shape[1]} columns, expected {net.input_dim}")
    training = mode == "train"
    caches: list = []
    for entry in net.layers:
        if isinstance(entry, _DropoutEntry):
            h, cache = dropout_forward(h, entry.rate, rng, training)
        elif isinstance(entry, _LinearEntry):
            cache = h
            h = linear_forward(h, params[entry.index])
        elif isinstance(entry, _ReluEntry):
            cache = h
            h = relu_forward(h)
        elif isinstance(entry, _SmoothEntry):
            cache = None
            h = spmm(entry.op.matrix, h)
        else:
            h = softmax_rows_forward(h)
            cache = h
        if training:
            caches.append(cache)
    if training:
        return h, ForwardStates(params=list(params), caches=caches)
    return h, None


def backward(net: CompiledNetwork, states: ForwardStates | None, d_output):
    """Gradients for every linear parameter, via the chain's vjps in reverse.
    Label propagation backpropagates through the transposed operator, which is
    how neighboring class distributions enter each labeled node's gradient."""
    if states is None:
        raise UsageError("backward needs the states returned by a train-mode forward")
    grads = [np.zeros(s, dtype=p.dtype) for s, p in zip(net.param_shapes, states.params)]
    u = np.asarray(d_output)
    for entry, cache in zip(reversed(net.layers), reversed(states.caches)):
        if isinstance(entry, _DropoutEntry):
            u = dropout_vjp(cache, entry.rate, u)
        elif isinstance(entry, _LinearEntry):
            u, dw = linear_vjp(cache, states.params[entry.index], u)
            grads[entry.index] += dw
        elif isinstance(entry, _ReluEntry):
            u = relu_vjp(cache, u)
        elif isinstance(entry, _SmoothEntry):
            u = spmm_transposed(entry.op.matrix, u)
        else:
            u = softmax_rows_vjp(cache, u)
    return grads


def estimate_cost(spec: NetworkSpec, n: int, num_edges: int, d: int, num_classes: int) -> CostEstimate:
    """Per-term operation counts for the composed shape.

    Convention: L is the total feed-forward layer count; the in-training
    feature smoothing term L*N_E*d appears only for GCN blocks (propagation
    folded into a precomputed input is a one-time cost, not charged here); the
    hidden term L*n*d^2 appears only when hidden layers exist; the classifier
    term n*d*M is always present; label propagation charges L_l*N_E*M.
    """
    if n < 1 or d < 1 or num_classes < 1 or num_edges < 0:
        raise UsageError(
            f"cost estimate needs positive sizes, got n={n}, edges={num_edges}, "
            f"d={d}, classes={num_classes}"
        )
    validate_spec(spec)
    linear_count = 0
    lp_depth = 0
    has_block = False
    for stage in spec.stages:
        if isinstance(stage, Mlp):
            linear_count += len(stage.hidden_dims)
        elif isinstance(stage, LinearClassifier):
            linear_count += 1
        elif isinstance(stage, GcnBlock):
            linear_count += stage.layers
            has_block = True
        elif isinstance(stage, Lp):
            lp_depth += stage.layers
    return CostEstimate(
        feature_prop=linear_count * num_edges * d if has_block else 0,
        hidden=linear_count * n * d * d if linear_count >= 2 else 0,
        classifier=n * d * num_classes,
        label_prop=lp_depth * num_edges * num_classes,
    )


def with_dtype(net: CompiledNetwork, dtype) -> CompiledNetwork:
    """Recast the network's numeric payload (operators and precomputed input)."""
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise UsageError(f"unsupported dtype {dtype}")
    recast: dict[int, PropagationOperator] = {}

    def cast_op(op: PropagationOperator) -> PropagationOperator:
        if id(op) not in recast:
            matrix = op.matrix.with_values(op.matrix.values.astype(dtype))
            recast[id(op)] = dataclasses.replace(op, matrix=matrix)
        return recast[id(op)]

    layers = tuple(
        dataclasses.replace(e, op=cast_op(e.op)) if isinstance(e, _SmoothEntry) else e
        for e in net.layers
    )
    return dataclasses.replace(
        net,
        layers=layers,
        folded=tuple(cast_op(op) for op in net.folded),
        x_bar=None if net.x_bar is None else net.x_bar.astype(dtype),
    )
