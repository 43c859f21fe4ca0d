"""Sequence fusion models: a bidirectional recurrent encoder and a feed-forward one.

Both map a T x input_dim shot-feature matrix to T x projection_dim fused
features through the shared autodiff ops, so one finite-difference test covers
every gradient path. Weight matrices initialize uniform(-1/sqrt(fan_in),
+1/sqrt(fan_in)), biases zero except the recurrent forget gate at +1.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

GATES = 4  # input, forget, candidate, output; stacked in that order
BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@dataclass(frozen=True)
class ModelSpec:
    architecture: str  # "bilstm" | "dnn"
    input_dim: int
    hidden_dim: int = 128
    layers: int = 3
    dnn_dims: tuple[int, ...] = (4000, 3000, 1000)
    projection_dim: int = 128
    dropout_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.architecture not in ("bilstm", "dnn"):
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if min(self.input_dim, self.hidden_dim, self.layers, self.projection_dim, *self.dnn_dims) < 1:
            raise ValueError("dimensions must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    def to_json(self) -> dict:
        return {
            "architecture": self.architecture,
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "layers": self.layers,
            "dnn_dims": list(self.dnn_dims),
            "projection_dim": self.projection_dim,
            "dropout_rate": self.dropout_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ModelSpec":
        data = dict(data)
        data["dnn_dims"] = tuple(data.get("dnn_dims", (4000, 3000, 1000)))
        return cls(**data)


@dataclass
class ModelParameters:
    spec: ModelSpec
    tensors: dict[str, np.ndarray]
    running: dict[str, np.ndarray] = field(default_factory=dict)
    mode: str = "train"

    def clone(self) -> "ModelParameters":
        return ModelParameters(
            self.spec,
            {k: v.copy() for k, v in self.tensors.items()},
            {k: v.copy() for k, v in self.running.items()},
            self.mode,
        )

    def parameter_count(self) -> int:
        return sum(t.size for t in self.tensors.values())


def bilstm_parameter_count(spec: ModelSpec) -> int:
    """Closed-form trainable element count for the recurrent architecture."""
    h, total = spec.hidden_dim, 0
    for layer in range(spec.layers):
        in_dim = spec.input_dim if layer == 0 else 2 * h
        total += 2 * (GATES * h * in_dim + GATES * h * h + GATES * h)
    total += spec.projection_dim * 2 * h + spec.projection_dim
    return total


def _uniform(rng, rows, cols, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(rows, cols))


def build_model(spec: ModelSpec) -> ModelParameters:
    rng = np.random.default_rng(spec.seed)
    tensors: dict[str, np.ndarray] = {}
    running: dict[str, np.ndarray] = {}
    if spec.architecture == "bilstm":
        h = spec.hidden_dim
        for layer in range(spec.layers):
            in_dim = spec.input_dim if layer == 0 else 2 * h
            for direction in ("fwd", "bwd"):
                prefix = f"lstm{layer}.{direction}"
                tensors[f"{prefix}.w_ih"] = _uniform(rng, GATES * h, in_dim, in_dim)
                tensors[f"{prefix}.w_hh"] = _uniform(rng, GATES * h, h, h)
                bias = np.zeros(GATES * h)
                bias[h : 2 * h] = 1.0  # forget gate starts open
                tensors[f"{prefix}.b"] = bias
        tensors["head.w"] = _uniform(rng, spec.projection_dim, 2 * h, 2 * h)
        tensors["head.b"] = np.zeros(spec.projection_dim)
    else:
        in_dim = spec.input_dim
        for i, width in enumerate(spec.dnn_dims):
            tensors[f"block{i}.w"] = _uniform(rng, width, in_dim, in_dim)
            tensors[f"block{i}.b"] = np.zeros(width)
            tensors[f"block{i}.gamma"] = np.ones(width)
            tensors[f"block{i}.beta"] = np.zeros(width)
            running[f"block{i}.mean"] = np.zeros(width)
            running[f"block{i}.var"] = np.ones(width)
            in_dim = width
        tensors["head.w"] = _uniform(rng, spec.projection_dim, in_dim, in_dim)
        tensors["head.b"] = np.zeros(spec.projection_dim)
    return ModelParameters(spec, tensors, running)


def _linear(x: ad.Var, w: ad.Var, b: ad.Var) -> ad.Var:
    return ad.add(ad.matmul(x, ad.transpose(w)), b)


def _lstm_direction(x: ad.Var, w_ih: ad.Var, w_hh: ad.Var, b: ad.Var, hidden: int, reverse: bool) -> ad.Var:
    steps = x.value.shape[0]
    pre = ad.add(ad.matmul(x, ad.transpose(w_ih)), b)  # T x 4H, input part hoisted out of the loop
    w_hh_t = ad.transpose(w_hh)
    h = ad.const(np.zeros((1, hidden)))
    c = ad.const(np.zeros((1, hidden)))
    outputs: list[ad.Var | None] = [None] * steps
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    for t in order:
        gates = ad.add(ad.narrow(pre, 0, t, 1), ad.matmul(h, w_hh_t))
        i_gate = ad.sigmoid(ad.narrow(gates, 1, 0, hidden))
        f_gate = ad.sigmoid(ad.narrow(gates, 1, hidden, hidden))
        g_cand = ad.tanh(ad.narrow(gates, 1, 2 * hidden, hidden))
        o_gate = ad.sigmoid(ad.narrow(gates, 1, 3 * hidden, hidden))
        c = ad.add(ad.mul(f_gate, c), ad.mul(i_gate, g_cand))
        h = ad.mul(o_gate, ad.tanh(c))
        outputs[t] = h
    return ad.concat(outputs, axis=0)


def _batchnorm(
    z: ad.Var, gamma: ad.Var, beta: ad.Var, running_mean: np.ndarray, running_var: np.ndarray,
    train: bool, update_stats: bool,
) -> ad.Var:
    if train:
        mu = ad.mean(z, axis=0, keepdims=True)
        centered = ad.sub(z, mu)
        var = ad.mean(ad.square(centered), axis=0, keepdims=True)
        if update_stats:
            running_mean += BN_MOMENTUM * (mu.value.ravel() - running_mean)
            running_var += BN_MOMENTUM * (var.value.ravel() - running_var)
        xhat = ad.mul(centered, ad.inv_safe(ad.sqrt(ad.add(var, ad.const(BN_EPS)))))
    else:
        centered = ad.sub(z, ad.const(running_mean))
        xhat = ad.mul(centered, ad.const(1.0 / np.sqrt(running_var + BN_EPS)))
    return ad.add(ad.mul(gamma, xhat), beta)


def forward_graph(
    model: ModelParameters,
    x: ad.Var,
    mode: str | None = None,
    rng: np.random.Generator | None = None,
    params: dict[str, ad.Var] | None = None,
    update_stats: bool = False,
) -> ad.Var:
    """Differentiable forward pass; `params` lets the trainer share wrapped leaves."""
    spec = model.spec
    mode = mode or model.mode
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    train = mode == "train"
    if x.value.ndim != 2 or x.value.shape[1] != spec.input_dim:
        raise ValueError(f"expected T x {spec.input_dim} input, got shape {x.value.shape}")
    if params is None:
        params = {name: ad.param(value) for name, value in model.tensors.items()}
    rate = spec.dropout_rate if train else 0.0
    if rate > 0.0 and rng is None:
        raise ValueError("train-mode forward with dropout needs an rng")

    if spec.architecture == "bilstm":
        h = spec.hidden_dim
        seq = x
        for layer in range(spec.layers):
            fwd = _lstm_direction(
                seq, params[f"lstm{layer}.fwd.w_ih"], params[f"lstm{layer}.fwd.w_hh"], params[f"lstm{layer}.fwd.b"], h, False
            )
            bwd = _lstm_direction(
                seq, params[f"lstm{layer}.bwd.w_ih"], params[f"lstm{layer}.bwd.w_hh"], params[f"lstm{layer}.bwd.b"], h, True
            )
            seq = ad.concat([fwd, bwd], axis=1)
            if layer < spec.layers - 1 and rate > 0.0:
                seq = ad.dropout(seq, rate, rng)
        return _linear(seq, params["head.w"], params["head.b"])

    out = x
    for i in range(len(spec.dnn_dims)):
        z = _linear(out, params[f"block{i}.w"], params[f"block{i}.b"])
        z = _batchnorm(
            z, params[f"block{i}.gamma"], params[f"block{i}.beta"],
            model.running[f"block{i}.mean"], model.running[f"block{i}.var"],
            train, update_stats,
        )
        out = ad.relu(z)
        if rate > 0.0:
            out = ad.dropout(out, rate, rng)
    return _linear(out, params["head.w"], params["head.b"])


def forward(model: ModelParameters, sequence, mode: str | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-shot fused features, one row per input row.

    Accepts a FeatureSequence or a raw T x input_dim array. Eval mode is a pure
    function of the inputs; train mode applies dropout from `rng` and (for the
    feed-forward model) batch statistics.
    """
    matrix = getattr(sequence, "features", sequence)
    resolved = mode or model.mode
    return forward_graph(
        model, ad.const(np.asarray(matrix, dtype=np.float64)), mode=resolved, rng=rng,
        update_stats=(resolved == "train"),
    ).value
