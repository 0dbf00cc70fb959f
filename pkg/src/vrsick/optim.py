"""Adam optimizer with bias correction, plus optional global-norm clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, zeros_like_tensors


@dataclass
class AdamState:
    """Per-tensor first/second moments and the shared step counter."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def init_adam(model: ModelParams, lr: float = 0.001, **kwargs) -> AdamState:
    return AdamState(lr=lr, m=zeros_like_tensors(model), v=zeros_like_tensors(model), **kwargs)


def adam_step(params: ModelParams, grads: dict, state: AdamState) -> None:
    """One Adam update, in place.

    Standard recurrence with bias correction:

        m <- b1*m + (1-b1)*g        m_hat = m / (1 - b1^t)
        v <- b2*v + (1-b2)*g^2      v_hat = v / (1 - b2^t)
        theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)

    Each tensor is updated independently; extra keys in *grads* (e.g. the
    input gradient) are ignored.
    """
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for key, theta in params.tensors.items():
        g = grads[key]
        m = state.m[key]
        v = state.v[key]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        theta -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def global_norm(grads: dict, keys) -> float:
    return float(np.sqrt(sum(float(np.sum(grads[k] ** 2)) for k in keys)))


def clip_by_global_norm(grads: dict, max_norm: float, keys) -> float:
    """Scale all listed gradient tensors so their joint L2 norm is <= max_norm.

    Returns the pre-clip norm. No-op when already within bounds.
    """
    norm = global_norm(grads, keys)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for k in keys:
            grads[k] *= scale
    return norm
