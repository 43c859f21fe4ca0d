"""Training loop over chapter-labeled feature sequences.

The objective per sequence is the adjacency-masked Frobenius loss between the
cosine distance matrix of the fused features and the binary target built from
the chapter labels; a batch contributes the mean over its sequences. The
recurrent model runs one graph per sequence; the feed-forward model runs the
whole batch's shots through a single graph so batch-norm statistics pool over
the batch. Nothing is padded, so nothing needs masking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .chaptering import distance_graph, loss_graph, sweep_threshold, target_matrix
from .features import FeatureSequence
from .models import ModelParameters, ModelSpec, build_model, forward_graph
from .optim import adam_step, cosine_lr, init_optimizer
from .stores import read_checkpoint, write_checkpoint


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 1
    base_lr: float = 2e-2
    seed: int = 0
    grad_check: bool = False

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.base_lr <= 0:
            raise ValueError("epochs must be >= 0, batch_size >= 1, base_lr > 0")


def _sequence_loss_graph(model, params, seq: FeatureSequence, mode, rng) -> ad.Var:
    if seq.labels is None:
        raise ValueError(f"{seq.video_id}: training sequences need chapter labels")
    fused = forward_graph(model, ad.const(seq.features), mode=mode, rng=rng, params=params, update_stats=(mode == "train"))
    return loss_graph(distance_graph(fused), target_matrix(seq.labels), seq.labels)


def _batch_loss_graph(model, params, batch: list[FeatureSequence], mode, rng) -> ad.Var:
    if model.spec.architecture == "dnn":
        # One graph over all shots of the batch: batch-norm statistics pool
        # across sequences, matching per-shot processing with a shared batch.
        stacked = ad.const(np.concatenate([s.features for s in batch], axis=0))
        fused = forward_graph(model, stacked, mode=mode, rng=rng, params=params, update_stats=(mode == "train"))
        losses = []
        offset = 0
        for seq in batch:
            if seq.labels is None:
                raise ValueError(f"{seq.video_id}: training sequences need chapter labels")
            rows = ad.narrow(fused, 0, offset, len(seq.shots))
            losses.append(loss_graph(distance_graph(rows), target_matrix(seq.labels), seq.labels))
            offset += len(seq.shots)
    else:
        losses = [_sequence_loss_graph(model, params, seq, mode, rng) for seq in batch]
    total = losses[0]
    for loss in losses[1:]:
        total = ad.add(total, loss)
    return ad.mul(total, ad.const(1.0 / len(batch)))


def loss_and_gradients(
    model: ModelParameters, batch: list[FeatureSequence], rng: np.random.Generator | None = None, mode: str = "train"
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean batch loss and its gradients w.r.t. every trainable tensor."""
    if not batch:
        raise ValueError("empty batch")
    params = {name: ad.param(value) for name, value in model.tensors.items()}
    loss = _batch_loss_graph(model, params, batch, mode, rng)
    ad.backward(loss)
    grads = {
        name: (var.grad if var.grad is not None else np.zeros_like(var.value))
        for name, var in params.items()
    }
    return float(loss.value), grads


def evaluate_loss(model: ModelParameters, sequences: list[FeatureSequence]) -> float:
    """Mean per-sequence loss in eval mode (running stats, no dropout)."""
    total = 0.0
    for seq in sequences:
        params = {name: ad.param(value) for name, value in model.tensors.items()}
        total += float(_sequence_loss_graph(model, params, seq, "eval", None).value)
    return total / len(sequences)


def check_gradients(
    model: ModelParameters,
    batch: list[FeatureSequence],
    samples_per_tensor: int = 3,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error is |a - n| / max(|a|, |n|, 1e-4): the floor turns the bound
    into an absolute one for near-zero components, where an h=1e-5 central
    difference only resolves ~1e-11. Dropout is disabled (it would change the
    function between the two difference evaluations).

    Check at generic parameter values: a freshly built feed-forward model with
    its zero biases can emit an exactly-zero fused row (fully dead relu row),
    which is the cosine distance's zero-norm convention point where the loss
    has no gradient and finite differences see a jump.
    """
    probe = model.clone()
    probe.spec = ModelSpec.from_json({**probe.spec.to_json(), "dropout_rate": 0.0})
    _, grads = loss_and_gradients(probe, batch, mode="train")

    def loss_at() -> float:
        params = {name: ad.param(value) for name, value in probe.tensors.items()}
        return float(_batch_loss_graph(probe, params, batch, "train", None).value)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, tensor in probe.tensors.items():
        flat = tensor.reshape(-1)
        count = min(samples_per_tensor, flat.size)
        for idx in rng.choice(flat.size, size=count, replace=False):
            original = flat[idx]
            flat[idx] = original + step
            hi = loss_at()
            flat[idx] = original - step
            lo = loss_at()
            flat[idx] = original
            numeric = (hi - lo) / (2.0 * step)
            analytic = grads[name].reshape(-1)[idx]
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-4)
            worst = max(worst, err)
    return worst


def train(
    spec: ModelSpec,
    train_sequences: list[FeatureSequence],
    val_sequences: list[FeatureSequence],
    cfg: TrainConfig,
) -> tuple[ModelParameters, list[dict]]:
    """Adam + cosine schedule over shuffled batches; returns best-val-loss parameters.

    History records per-epoch mean train loss, val loss, and val F1 at IoU 0.5
    (threshold swept on the validation set each epoch). Deterministic per seed.
    """
    if not train_sequences:
        raise ValueError("empty training set")
    model = build_model(spec)
    if cfg.epochs == 0:
        return model, []
    rng = np.random.default_rng(cfg.seed)
    optimizer = init_optimizer(model.tensors, lr=cfg.base_lr)
    n_batches = (len(train_sequences) + cfg.batch_size - 1) // cfg.batch_size
    total_steps = cfg.epochs * n_batches

    if cfg.grad_check:
        err = check_gradients(model, train_sequences[: cfg.batch_size])
        if err > 1e-5:
            raise RuntimeError(f"gradient check failed: max relative error {err:.3e}")

    best = model.clone()
    best_val = float("inf")
    history = []
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_sequences))
        epoch_losses = []
        for b in range(n_batches):
            batch = [train_sequences[i] for i in order[b * cfg.batch_size : (b + 1) * cfg.batch_size]]
            loss, grads = loss_and_gradients(model, batch, rng=rng, mode="train")
            optimizer.lr = cosine_lr(step, total_steps, cfg.base_lr)
            adam_step(model.tensors, grads, optimizer)
            step += 1
            epoch_losses.append(loss)
        entry = {"epoch": epoch, "train_loss": float(np.mean(epoch_losses))}
        if val_sequences:
            entry["val_loss"] = evaluate_loss(model, val_sequences)
            entry["val_f1_iou50"] = _val_f1(model, val_sequences)
            if entry["val_loss"] < best_val:
                best_val = entry["val_loss"]
                best = model.clone()
        else:
            best = model.clone()
        history.append(entry)
    best.mode = "eval"
    return best, history


def _val_f1(model: ModelParameters, val_sequences: list[FeatureSequence]) -> float:
    from .metrics import aggregate, evaluate
    from .chaptering import distance_matrix, segment_by_threshold
    from .models import forward
    from .timeline import chapters_from_labels

    tau = sweep_threshold(model, val_sequences)
    reports = []
    for seq in val_sequences:
        pred = segment_by_threshold(distance_matrix(forward(model, seq, mode="eval")), tau, seq.shots)
        reports.append(evaluate(pred, chapters_from_labels(seq.shots, seq.labels)))
    return aggregate(reports).iou_f1(0.5)


def save_model(path, model: ModelParameters, extra: dict | None = None) -> None:
    """Checkpoint: spec + extras as JSON metadata, parameters and running stats as tensors."""
    meta = {"spec": model.spec.to_json(), "extra": extra or {}}
    tensors = dict(model.tensors)
    for name, value in model.running.items():
        tensors[f"running.{name}"] = value
    write_checkpoint(path, meta, tensors)


def load_model(path) -> tuple[ModelParameters, dict]:
    meta, tensors = read_checkpoint(path)
    spec = ModelSpec.from_json(meta["spec"])
    running = {name[len("running."):]: value for name, value in tensors.items() if name.startswith("running.")}
    trainable = {name: value for name, value in tensors.items() if not name.startswith("running.")}
    return ModelParameters(spec, trainable, running, mode="eval"), meta.get("extra", {})
