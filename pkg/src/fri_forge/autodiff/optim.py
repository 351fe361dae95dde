"""AdamW with decoupled weight decay, and the cosine-annealing schedule."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ConfigError, NumericError
from ..models import FloatArray
from .node import Parameter, zero_grads

__all__ = ["AdamW", "adamw_step", "cosine_lr"]

log = logging.getLogger(__name__)


def cosine_lr(step: int, total_steps: int, lr_max: float, lr_min: float = 0.0) -> float:
    """lr_min + (lr_max - lr_min)(1 + cos(pi step / total)) / 2."""
    if total_steps <= 0:
        return lr_max
    if not 0 <= step <= total_steps:
        raise ConfigError(f"step {step} outside [0, {total_steps}]")
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * step / total_steps))


def adamw_step(
    params: Sequence[Parameter],
    grads: Sequence[FloatArray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 1e-2,
    step: int = 1,
) -> None:
    """
    One in-place AdamW update; `step` is the 1-based count used for bias correction.

    Every gradient is checked for finiteness before any parameter moves, so a bad
    step leaves the whole parameter set untouched.
    """
    if len(params) != len(grads):
        raise ConfigError(f"{len(params)} parameters but {len(grads)} gradients")
    for p, g in zip(params, grads, strict=True):
        if g.shape != p.value.shape:
            raise ConfigError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {p.name or '?'}")
    if step < 1:
        raise ConfigError(f"AdamW step count starts at 1, got {step}")

    c1 = 1.0 - beta1**step
    c2 = 1.0 - beta2**step
    for p, g in zip(params, grads, strict=True):
        p.m = beta1 * p.m + (1.0 - beta1) * g
        p.v = beta2 * p.v + (1.0 - beta2) * g * g
        m_hat = p.m / c1
        v_hat = p.v / c2
        if weight_decay:
            p.value = p.value - lr * weight_decay * p.value
        p.value = p.value - lr * m_hat / (np.sqrt(v_hat) + eps)


@dataclass
class AdamW:
    """Optimizer state for one parameter group (own learning rate, own step count)."""

    params: list[Parameter]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-2
    steps: int = field(default=0)

    def zero_grad(self) -> None:
        zero_grads(self.params)

    def step(self, lr: float | None = None) -> None:
        rate = self.lr if lr is None else lr
        adamw_step(
            self.params,
            [p.grad for p in self.params],
            rate,
            self.beta1,
            self.beta2,
            self.eps,
            self.weight_decay,
            self.steps + 1,
        )
        self.steps += 1
        log.debug("AdamW step %d lr=%.3g", self.steps, rate)

    def hyperparameters(self) -> dict[str, Any]:
        return {
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "weight_decay": self.weight_decay,
            "steps": self.steps,
        }
