"""Adam with bias correction, plus the cosine learning-rate schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizerState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optimizer(tensors: dict[str, np.ndarray], lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> OptimizerState:
    return OptimizerState(
        m={k: np.zeros_like(v) for k, v in tensors.items()},
        v={k: np.zeros_like(v) for k, v in tensors.items()},
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(
    tensors: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: OptimizerState
) -> tuple[dict[str, np.ndarray], OptimizerState]:
    """One bias-corrected update, in place; parameters with no gradient are left alone."""
    state.step += 1
    mc = 1.0 - state.beta1**state.step
    vc = 1.0 - state.beta2**state.step
    for name, grad in grads.items():
        if grad.shape != tensors[name].shape:
            raise ValueError(f"{name}: gradient shape {grad.shape} != parameter shape {tensors[name].shape}")
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * grad
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * grad * grad
        m_hat = state.m[name] / mc
        v_hat = state.v[name] / vc
        tensors[name] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return tensors, state


def cosine_lr(step: int, total_steps: int, base_lr: float) -> float:
    """base_lr * (1 + cos(pi * step / total_steps)) / 2, from base_lr down to 0."""
    if total_steps <= 0:
        raise ValueError(f"total_steps must be positive, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return base_lr * (1.0 + math.cos(math.pi * step / total_steps)) / 2.0
