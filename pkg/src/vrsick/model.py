"""Stacked-LSTM severity classifier with exact backpropagation through time.

Layer stack::

    input (S x D') -> LSTM(H, full sequence) -> dropout
                   -> LSTM(H, final state)   -> dropout
                   -> dense(C) + softmax

All arithmetic runs in float64. The forward pass can record every gate
activation, cell state, and dropout mask; the backward pass replays that
cache to produce exact analytic gradients for every parameter tensor and
for the input sequence itself.

Parameters live in a flat ``dict[str, ndarray]`` keyed like
``"lstm1.w_i"``; :func:`param_key_order` fixes the canonical ordering used
by initialization, the optimizer, and the checkpoint format. Gate order is
(input, forget, output, candidate).

Internally everything is batched with a leading sample axis; the public
single-sample operations wrap a batch of one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ContractError
from .reduce import PooledSequence

GATES = ("i", "f", "o", "c")

#: Floor applied to probabilities before the log in the loss.
PROB_CLAMP = 1e-12


def param_key_order() -> list[str]:
    """Canonical tensor ordering: lstm1 gates, lstm2 gates, dense head."""
    keys = []
    for layer in ("lstm1", "lstm2"):
        for g in GATES:
            keys += [f"{layer}.w_{g}", f"{layer}.u_{g}", f"{layer}.b_{g}"]
    return keys + ["head.w", "head.b"]


def param_shapes(input_dim: int, hidden_size: int, class_count: int) -> dict[str, tuple]:
    shapes: dict[str, tuple] = {}
    for layer, d_in in (("lstm1", input_dim), ("lstm2", hidden_size)):
        for g in GATES:
            shapes[f"{layer}.w_{g}"] = (hidden_size, d_in)
            shapes[f"{layer}.u_{g}"] = (hidden_size, hidden_size)
            shapes[f"{layer}.b_{g}"] = (hidden_size,)
    shapes["head.w"] = (class_count, hidden_size)
    shapes["head.b"] = (class_count,)
    return shapes


@dataclass
class ModelParams:
    """All trainable tensors plus the model's structural hyperparameters."""

    tensors: dict[str, np.ndarray]
    input_dim: int
    hidden_size: int
    class_count: int
    dropout_rate: float = 0.2

    def __post_init__(self):
        if self.class_count < 2:
            raise ConfigError(f"class_count must be >= 2, got {self.class_count}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(
                f"dropout_rate must be in [0, 1), got {self.dropout_rate}"
            )
        expected = param_shapes(self.input_dim, self.hidden_size, self.class_count)
        for key, shape in expected.items():
            if key not in self.tensors:
                raise ContractError(f"missing parameter tensor {key!r}")
            if self.tensors[key].shape != shape:
                raise ContractError(
                    f"tensor {key!r} has shape {self.tensors[key].shape}, "
                    f"expected {shape}"
                )

    def copy(self) -> "ModelParams":
        return replace(self, tensors={k: v.copy() for k, v in self.tensors.items()})

    def without_dropout(self) -> "ModelParams":
        """Same tensors (shared, not copied) with the stochastic path off."""
        return replace(self, dropout_rate=0.0)


def init_params(
    input_dim: int,
    hidden_size: int,
    class_count: int,
    seed,
    dropout_rate: float = 0.2,
) -> ModelParams:
    """Deterministically initialize a fresh model.

    Weights are uniform on ``(-a, a)`` with ``a = sqrt(6 / (fan_in +
    fan_out))``; biases start at zero except the forget-gate biases, which
    start at 1 so early training does not erase the cell state. Tensors are
    drawn in :func:`param_key_order` order, so a seed pins every value.
    """
    if min(input_dim, hidden_size) < 1:
        raise ConfigError("input_dim and hidden_size must be positive")
    rng = np.random.default_rng(seed)
    shapes = param_shapes(input_dim, hidden_size, class_count)
    tensors: dict[str, np.ndarray] = {}
    for key in param_key_order():
        shape = shapes[key]
        if key.endswith(".b") or ".b_" in key:
            fill = 1.0 if key.endswith("b_f") else 0.0
            tensors[key] = np.full(shape, fill, dtype=np.float64)
        else:
            fan_out, fan_in = shape
            a = np.sqrt(6.0 / (fan_in + fan_out))
            tensors[key] = rng.uniform(-a, a, size=shape)
    return ModelParams(
        tensors=tensors,
        input_dim=input_dim,
        hidden_size=hidden_size,
        class_count=class_count,
        dropout_rate=dropout_rate,
    )


def zeros_like_tensors(model: ModelParams) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in model.tensors.items()}


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax; outputs are strictly positive and sum to 1."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def dropout(
    x: np.ndarray, rate: float, train: bool, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Inverted dropout: returns ``(output, mask)`` with the mask pre-scaled.

    In training mode each entry is zeroed independently with probability
    *rate* and survivors are scaled by ``1/(1-rate)``, so evaluation needs
    no rescaling. In eval mode (or at rate 0) this is the identity and the
    mask is all ones; no random numbers are consumed.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ContractError("training-mode dropout with rate > 0 needs an rng")
    keep = rng.random(x.shape) >= rate
    mask = keep.astype(np.float64) / (1.0 - rate)
    return x * mask, mask


def _lstm_forward(tensors: dict, layer: str, x: np.ndarray) -> tuple[np.ndarray, dict]:
    """Run one LSTM layer over a batch.

    *x* has shape ``(B, S, D_in)``. Returns the hidden sequence
    ``(B, S, H)`` and a cache of per-step activations stacked as
    ``(S, B, H)`` for the backward pass. h0 = c0 = 0.
    """
    w = {g: tensors[f"{layer}.w_{g}"] for g in GATES}
    u = {g: tensors[f"{layer}.u_{g}"] for g in GATES}
    b = {g: tensors[f"{layer}.b_{g}"] for g in GATES}
    batch, steps, _ = x.shape
    hidden = b["i"].shape[0]

    acts = {name: np.empty((steps, batch, hidden)) for name in ("i", "f", "o", "g", "c", "tc", "h")}
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    for t in range(steps):
        xt = x[:, t, :]
        gi = sigmoid(xt @ w["i"].T + h @ u["i"].T + b["i"])
        gf = sigmoid(xt @ w["f"].T + h @ u["f"].T + b["f"])
        go = sigmoid(xt @ w["o"].T + h @ u["o"].T + b["o"])
        gg = np.tanh(xt @ w["c"].T + h @ u["c"].T + b["c"])
        c = gf * c + gi * gg
        tc = np.tanh(c)
        h = go * tc
        for name, val in (("i", gi), ("f", gf), ("o", go), ("g", gg), ("c", c), ("tc", tc), ("h", h)):
            acts[name][t] = val
    cache = {"x": x, "acts": acts}
    return acts["h"].transpose(1, 0, 2), cache


def _lstm_backward(
    tensors: dict, layer: str, cache: dict, dh_seq: np.ndarray, grads: dict
) -> np.ndarray:
    """Exact BPTT through one layer.

    *dh_seq* (``B, S, H``) is the loss gradient w.r.t. this layer's output
    hidden sequence. Parameter gradients are accumulated into *grads*;
    returns the gradient w.r.t. the layer input (``B, S, D_in``).
    """
    w = {g: tensors[f"{layer}.w_{g}"] for g in GATES}
    u = {g: tensors[f"{layer}.u_{g}"] for g in GATES}
    x = cache["x"]
    acts = cache["acts"]
    batch, steps, d_in = x.shape
    hidden = acts["h"].shape[2]

    dx = np.empty((batch, steps, d_in))
    dh_carry = np.zeros((batch, hidden))
    dc_carry = np.zeros((batch, hidden))
    zeros = np.zeros((batch, hidden))
    for t in reversed(range(steps)):
        gi, gf, go, gg = acts["i"][t], acts["f"][t], acts["o"][t], acts["g"][t]
        tc = acts["tc"][t]
        c_prev = acts["c"][t - 1] if t > 0 else zeros
        h_prev = acts["h"][t - 1] if t > 0 else zeros

        dh = dh_seq[:, t, :] + dh_carry
        do = dh * tc
        dc = dh * go * (1.0 - tc * tc) + dc_carry
        di = dc * gg
        dg = dc * gi
        df = dc * c_prev
        dc_carry = dc * gf

        # pre-activation gradients through the gate nonlinearities
        dz = {
            "i": di * gi * (1.0 - gi),
            "f": df * gf * (1.0 - gf),
            "o": do * go * (1.0 - go),
            "c": dg * (1.0 - gg * gg),
        }
        xt = x[:, t, :]
        dxt = np.zeros((batch, d_in))
        dh_carry = np.zeros((batch, hidden))
        for g in GATES:
            grads[f"{layer}.w_{g}"] += dz[g].T @ xt
            grads[f"{layer}.u_{g}"] += dz[g].T @ h_prev
            grads[f"{layer}.b_{g}"] += dz[g].sum(axis=0)
            dxt += dz[g] @ w[g]
            dh_carry += dz[g] @ u[g]
        dx[:, t, :] = dxt
    return dx


def _as_batch(x) -> np.ndarray:
    if isinstance(x, PooledSequence):
        x = x.steps
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[np.newaxis]
    if x.ndim != 3:
        raise ContractError(f"input must be (S, D') or (B, S, D'), got ndim={x.ndim}")
    return x


def forward_batch(
    model: ModelParams,
    x,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Full forward pass over a batch; always returns the gradient cache.

    The cache records both dropout masks so :func:`backward_batch` replays
    the exact graph that produced the probabilities.
    """
    xb = _as_batch(x)
    if xb.shape[2] != model.input_dim:
        raise ContractError(
            f"input width {xb.shape[2]} does not match model input_dim "
            f"{model.input_dim}"
        )
    rate = model.dropout_rate
    h1_seq, cache1 = _lstm_forward(model.tensors, "lstm1", xb)
    h1_drop, mask1 = dropout(h1_seq, rate, train, rng)
    h2_seq, cache2 = _lstm_forward(model.tensors, "lstm2", h1_drop)
    h2_final = h2_seq[:, -1, :]
    h2_drop, mask2 = dropout(h2_final, rate, train, rng)
    logits = h2_drop @ model.tensors["head.w"].T + model.tensors["head.b"]
    probs = softmax(logits)
    cache = {
        "x": xb,
        "lstm1": cache1,
        "mask1": mask1,
        "lstm2": cache2,
        "mask2": mask2,
        "h2_drop": h2_drop,
        "logits": logits,
        "probs": probs,
        "train": train,
    }
    return probs, cache


def model_forward(
    model: ModelParams,
    x,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict | None]:
    """Class probabilities for one ``S x D'`` sequence.

    Returns ``(probs, cache)``; the cache is only kept in training mode.
    Eval mode touches no randomness, so repeated calls are bitwise
    identical.
    """
    xb = _as_batch(x)
    if xb.shape[0] != 1:
        raise ContractError("model_forward takes a single sequence; use forward_batch")
    probs, cache = forward_batch(model, xb, train=train, rng=rng)
    return probs[0], (cache if train else None)


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """``-log p[label]``, with the probability clamped below at 1e-12."""
    probs = np.asarray(probs)
    if not 0 <= label < probs.shape[-1]:
        raise ContractError(f"label {label} out of range for {probs.shape[-1]} classes")
    return float(-np.log(max(float(probs[..., label].squeeze()), PROB_CLAMP)))


def batch_cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean clamped cross-entropy over a batch."""
    p = np.maximum(probs[np.arange(len(labels)), labels], PROB_CLAMP)
    return float(np.mean(-np.log(p)))


def _loss_logit_grad(probs: np.ndarray, labels: np.ndarray, weight: float) -> np.ndarray:
    """d(weighted summed loss)/d(logits) for clamped cross-entropy.

    Rows whose true-class probability sits below the clamp have zero
    gradient (the clamped log is locally constant there).
    """
    batch = probs.shape[0]
    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    dead = probs[np.arange(batch), labels] < PROB_CLAMP
    dlogits[dead] = 0.0
    return dlogits * weight


def backward_from_logits(model: ModelParams, cache: dict, dlogits: np.ndarray) -> dict:
    """Backpropagate an arbitrary logit-space seed through the whole stack.

    Returns a dict with one gradient per parameter tensor plus ``"input"``
    (``B x S x D'``). Dropout masks recorded in the cache are replayed, so
    the gradients match the exact forward graph.
    """
    grads = zeros_like_tensors(model)
    head_w = model.tensors["head.w"]
    grads["head.w"] += dlogits.T @ cache["h2_drop"]
    grads["head.b"] += dlogits.sum(axis=0)
    dh2 = (dlogits @ head_w) * cache["mask2"]

    batch, steps, _ = cache["x"].shape
    dh_seq2 = np.zeros((batch, steps, model.hidden_size))
    dh_seq2[:, -1, :] = dh2
    dh1 = _lstm_backward(model.tensors, "lstm2", cache["lstm2"], dh_seq2, grads)
    dh1 *= cache["mask1"]
    grads["input"] = _lstm_backward(model.tensors, "lstm1", cache["lstm1"], dh1, grads)
    return grads


def backward_batch(
    model: ModelParams, cache: dict, labels: np.ndarray, weight: float | None = None
) -> dict:
    """Gradients of the mean batch cross-entropy (or *weight*-scaled sum)."""
    labels = np.asarray(labels, dtype=np.int64)
    probs = cache["probs"]
    if weight is None:
        weight = 1.0 / probs.shape[0]
    return backward_from_logits(model, cache, _loss_logit_grad(probs, labels, weight))


def model_backward(model: ModelParams, cache: dict | None, label: int) -> dict:
    """Exact gradients of one sample's loss w.r.t. every tensor and the input.

    Requires the cache from a training-mode forward on the same input.
    """
    if cache is None:
        raise ContractError("model_backward needs the cache from a training-mode forward")
    grads = backward_batch(model, cache, np.array([label]), weight=1.0)
    grads["input"] = grads["input"][0]
    return grads
