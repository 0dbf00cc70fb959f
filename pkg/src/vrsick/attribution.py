"""Input attribution: plain gradients and integrated gradients.

Both methods explain one prediction of the classifier by assigning a
signed score to every cell of the reduced input matrix. Integrated
gradients approximates the path integral from a baseline to the input
with a right-endpoint Riemann sum over ``m`` steps::

    score[i] = (x[i] - b[i]) * (1/m) * sum_{j=1..m} dF/dx[i] at b + (j/m)(x - b)

For an affine target the sum is exact for any ``m >= 1``; in general the
completeness identity ``sum(scores) ~= F(x) - F(b)`` tightens as ``m``
grows. The attribution target is a scalar head output (a class logit or
probability); the class defaults to the model's prediction at ``x`` and
is frozen once so every path point differentiates the same scalar.

Attribution always runs on the deterministic graph: dropout is disabled,
so scores are reproducible and independent of any rng.

Row-level summaries ("which time steps mattered") reduce ``|scores|``
across the feature axis with either the mean or the scaled L2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ContractError, DataError
from .model import ModelParams, backward_from_logits, forward_batch
from .reduce import PooledSequence

METHOD_STANDARD = "standard"
METHOD_INTEGRATED = "integrated"
TARGET_LOGIT = "logit"
TARGET_PROBABILITY = "probability"
AGG_MEAN_ABS = "mean_abs"
AGG_L2 = "l2"


@dataclass(frozen=True)
class AttributionConfig:
    method: str = METHOD_INTEGRATED
    target: str = TARGET_LOGIT
    target_class: int | None = None  # None = the predicted class
    ig_steps: int = 50
    aggregation: str = AGG_MEAN_ABS

    def __post_init__(self):
        if self.method not in (METHOD_STANDARD, METHOD_INTEGRATED):
            raise ConfigError(f"unknown attribution method {self.method!r}")
        if self.target not in (TARGET_LOGIT, TARGET_PROBABILITY):
            raise ConfigError(f"unknown attribution target {self.target!r}")
        if self.target_class is not None and self.target_class < 0:
            raise ConfigError(f"target_class must be >= 0, got {self.target_class}")
        if self.ig_steps < 1:
            raise ConfigError(f"ig_steps must be >= 1, got {self.ig_steps}")
        if self.aggregation not in (AGG_MEAN_ABS, AGG_L2):
            raise ConfigError(f"unknown aggregation {self.aggregation!r}")


@dataclass(frozen=True)
class AttributionMap:
    """Signed per-cell scores plus an echo of how they were computed."""

    scores: np.ndarray  # (S, D'), float64
    method: str
    target: str
    target_class: int
    ig_steps: int  # 0 for the standard-gradient method


def _as_sequence(x) -> np.ndarray:
    if isinstance(x, PooledSequence):
        x = x.steps
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ContractError(f"attribution input must be (S, D'), got ndim={x.ndim}")
    return x


def _target_value_and_grad(
    model: ModelParams, x: np.ndarray, target: str, cls: int
) -> tuple[float, np.ndarray]:
    """The scalar head output for *cls* and its gradient w.r.t. the input.

    Runs the dropout-free graph in cache-recording mode so the exact
    backward pass is available; with the rate at zero no randomness is
    consumed and the graph equals the evaluation graph.
    """
    frozen = model.without_dropout()
    probs, cache = forward_batch(frozen, x[np.newaxis], train=True)
    if target == TARGET_LOGIT:
        value = float(cache["logits"][0, cls])
        dlogits = np.zeros((1, model.class_count))
        dlogits[0, cls] = 1.0
    else:
        p = probs[0]
        value = float(p[cls])
        # dp_c/dz_j = p_c (delta_cj - p_j)
        dlogits = (-p[cls] * p)[np.newaxis]
        dlogits[0, cls] += p[cls]
    grads = backward_from_logits(frozen, cache, dlogits)
    return value, grads["input"][0]


def resolve_target_class(model: ModelParams, x, config: AttributionConfig) -> int:
    """The class the attribution explains: configured, else predicted at x."""
    if config.target_class is not None:
        if config.target_class >= model.class_count:
            raise ConfigError(
                f"target_class {config.target_class} out of range for "
                f"{model.class_count} classes"
            )
        return config.target_class
    probs, _ = forward_batch(model, _as_sequence(x)[np.newaxis], train=False)
    return int(np.argmax(probs[0]))


def target_value(model: ModelParams, x, target: str, cls: int) -> float:
    """The attribution target's scalar value at *x* (no gradient work)."""
    x = _as_sequence(x)
    probs, cache = forward_batch(model.without_dropout(), x[np.newaxis], train=False)
    if target == TARGET_LOGIT:
        return float(cache["logits"][0, cls])
    return float(probs[0, cls])


def standard_gradients(model: ModelParams, x, config: AttributionConfig) -> AttributionMap:
    """Raw d(target)/d(input) at the input point."""
    x = _as_sequence(x)
    cls = resolve_target_class(model, x, config)
    _, grad = _target_value_and_grad(model, x, config.target, cls)
    return AttributionMap(
        scores=grad, method=METHOD_STANDARD, target=config.target,
        target_class=cls, ig_steps=0,
    )


def integrate_gradients_path(
    grad_fn, x: np.ndarray, baseline: np.ndarray, steps: int
) -> np.ndarray:
    """Right-endpoint Riemann approximation of the attribution integral.

    *grad_fn* maps a point of ``x``'s shape to the target's gradient at
    that point. Exposed separately so any differentiable scalar function
    can be attributed (and tested) through the same arithmetic.
    """
    if steps < 1:
        raise ConfigError(f"ig_steps must be >= 1, got {steps}")
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    if baseline.shape != x.shape:
        raise ContractError(
            f"baseline shape {baseline.shape} does not match input {x.shape}"
        )
    delta = x - baseline
    total = np.zeros_like(x)
    for j in range(1, steps + 1):
        total += grad_fn(baseline + (j / steps) * delta)
    return delta * (total / steps)


def integrated_gradients(
    model: ModelParams, x, config: AttributionConfig, baseline=None
) -> AttributionMap:
    """Path-integrated attributions from *baseline* (default all-zeros)."""
    x = _as_sequence(x)
    b = np.zeros_like(x) if baseline is None else _as_sequence(baseline)
    if b.shape != x.shape:
        raise ContractError(f"baseline shape {b.shape} does not match input {x.shape}")
    cls = resolve_target_class(model, x, config)
    scores = integrate_gradients_path(
        lambda point: _target_value_and_grad(model, point, config.target, cls)[1],
        x, b, config.ig_steps,
    )
    return AttributionMap(
        scores=scores, method=METHOD_INTEGRATED, target=config.target,
        target_class=cls, ig_steps=config.ig_steps,
    )


def attribute_sample(
    model: ModelParams, x, config: AttributionConfig, baseline=None
) -> AttributionMap:
    """Dispatch on the configured method."""
    if config.method == METHOD_STANDARD:
        return standard_gradients(model, x, config)
    return integrated_gradients(model, x, config, baseline=baseline)


def completeness_gap(
    model: ModelParams, x, attr: AttributionMap, baseline=None
) -> float:
    """``|sum(scores) - (F(x) - F(baseline))|`` for the map's own target."""
    x = _as_sequence(x)
    b = np.zeros_like(x) if baseline is None else _as_sequence(baseline)
    fx = target_value(model, x, attr.target, attr.target_class)
    fb = target_value(model, b, attr.target, attr.target_class)
    return float(abs(attr.scores.sum() - (fx - fb)))


def temporal_importance(scores: np.ndarray, aggregation: str = AGG_MEAN_ABS) -> np.ndarray:
    """Collapse (S, D') scores to one non-negative importance per time step."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ContractError(f"scores must be (S, D'), got ndim={scores.ndim}")
    if aggregation == AGG_MEAN_ABS:
        return np.abs(scores).mean(axis=1)
    if aggregation == AGG_L2:
        return np.sqrt(np.square(scores).sum(axis=1) / scores.shape[1])
    raise ConfigError(f"unknown aggregation {aggregation!r}")


def mean_importance(curves: list[np.ndarray]) -> np.ndarray:
    """Average per-step importance across samples of equal length."""
    if not curves:
        raise ContractError("mean_importance needs at least one curve")
    lengths = {c.shape[0] for c in curves}
    if len(lengths) != 1:
        raise DataError(
            f"cannot average importance curves of different lengths {sorted(lengths)}"
        )
    return np.mean(np.stack(curves), axis=0)


def write_importance_csv(path, curve: np.ndarray) -> None:
    """One ``step,importance`` row per time step, deterministic bytes."""
    lines = ["step,importance\n"]
    lines += [f"{i},{repr(float(v))}\n" for i, v in enumerate(np.asarray(curve))]
    with open(path, "w", newline="") as fh:
        fh.writelines(lines)


def with_target_class(config: AttributionConfig, cls: int) -> AttributionConfig:
    return replace(config, target_class=cls)
