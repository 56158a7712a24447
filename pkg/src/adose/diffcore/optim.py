"""Adam with decoupled weight decay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError
from .tensor import Tensor


@dataclass
class AdamState:
    """Per-parameter first/second moments plus the shared hyperparameters."""

    lr: float = 0.001
    weight_decay: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[Tensor], lr: float = 0.001, weight_decay: float = 0.0005,
                   beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            lr=lr,
            weight_decay=weight_decay,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
        )


def adam_step(state: AdamState, params: list[Tensor], grads: list[np.ndarray]) -> None:
    """One in-place update; weight decay is applied outside the moment path."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValueError("parameter, gradient, and moment counts must align")
    for p, g in zip(params, grads):
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.data.shape}")
        if not np.isfinite(g).all():
            raise DivergenceError(
                f"non-finite gradient (max |g| = {np.abs(g[np.isfinite(g)]).max(initial=0.0):.3g}); "
                "step aborted"
            )
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        update = (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        if state.weight_decay:
            update = update + state.weight_decay * p.data
        p.data = (p.data - state.lr * update).astype(p.data.dtype)
