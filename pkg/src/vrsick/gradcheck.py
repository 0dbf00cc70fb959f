"""Finite-difference verification of analytic gradients.

Central differences ``(f(x+h) - f(x-h)) / 2h`` against the backward pass,
on the deterministic dropout-free graph. Relative error uses
``|a - n| / max(|a|, |n|, 1e-8)`` so near-zero coordinates do not blow up
the ratio.
"""

from __future__ import annotations

import numpy as np

from .model import ModelParams, cross_entropy, model_backward, model_forward


def finite_diff_max_rel_error(
    loss_fn,
    arrays: dict[str, np.ndarray],
    analytic: dict[str, np.ndarray],
    step: float = 1e-5,
    coords_per_tensor: int = 500,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error of *analytic* vs central differences of *loss_fn*.

    *loss_fn* is re-evaluated with the entries of *arrays* perturbed in
    place (and restored). For each tensor, up to *coords_per_tensor*
    coordinates are sampled without replacement (all of them if the tensor
    is smaller).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    for key, arr in arrays.items():
        flat = arr.reshape(-1)
        n = flat.size
        idx = np.arange(n) if n <= coords_per_tensor else rng.choice(n, coords_per_tensor, replace=False)
        ana_flat = analytic[key].reshape(-1)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn()
            flat[i] = orig - step
            down = loss_fn()
            flat[i] = orig
            numeric = (up - down) / (2.0 * step)
            a = ana_flat[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst


def grad_check(
    model: ModelParams,
    x: np.ndarray,
    label: int,
    step: float = 1e-5,
    coords_per_tensor: int = 500,
    seed: int = 0,
) -> float:
    """Check the model's BPTT gradients against central differences.

    Runs on the dropout-disabled graph so the loss is a deterministic
    function of parameters and input. Covers every parameter tensor and
    the input-sequence gradient.
    """
    frozen = model.without_dropout()
    x = np.array(x, dtype=np.float64)

    _, cache = model_forward(frozen, x, train=True)
    analytic = model_backward(frozen, cache, label)

    def loss_fn() -> float:
        p, _ = model_forward(frozen, x, train=False)
        return cross_entropy(p, label)

    arrays = dict(frozen.tensors)
    arrays["input"] = x
    return finite_diff_max_rel_error(
        loss_fn,
        arrays,
        analytic,
        step=step,
        coords_per_tensor=coords_per_tensor,
        rng=np.random.default_rng(seed),
    )
