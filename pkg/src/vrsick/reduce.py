"""Temporal reduction of a T x D frame sequence to a short LSTM input.

Two modes over non-overlapping windows of ``k`` consecutive frames:

* ``max_pool`` — elementwise maximum over each window; output is
  ``floor(T/k) x D``.
* ``concat`` — windows flattened in temporal order; output is
  ``floor(T/k) x (k*D)``.

Both drop the trailing ``T mod k`` frames (no partial windows).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError
from .fseq import FrameFeatureSequence

MODE_MAX_POOL = "max_pool"
MODE_CONCAT = "concat"
_MODES = (MODE_MAX_POOL, MODE_CONCAT)


@dataclass(frozen=True)
class ReductionConfig:
    mode: str = MODE_CONCAT
    k: int = 5
    tail_policy: str = "drop_remainder"

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ConfigError(f"reduce.mode must be one of {_MODES}, got {self.mode!r}")
        if self.k < 1:
            raise ConfigError(f"reduce.k must be >= 1, got {self.k}")
        if self.tail_policy != "drop_remainder":
            raise ConfigError(
                f"only tail_policy='drop_remainder' is supported, got {self.tail_policy!r}"
            )


@dataclass(frozen=True)
class PooledSequence:
    """An ``S x D'`` reduced sequence, ready for the classifier."""

    steps: np.ndarray
    step_count: int
    width: int

    @classmethod
    def from_array(cls, steps: np.ndarray) -> PooledSequence:
        steps = np.ascontiguousarray(steps, dtype=np.float64)
        return cls(steps=steps, step_count=steps.shape[0], width=steps.shape[1])


def _frames_of(seq) -> np.ndarray:
    """Accept a FrameFeatureSequence or a raw ``(T, D)`` matrix."""
    frames = seq.frames if isinstance(seq, FrameFeatureSequence) else np.asarray(seq, dtype=np.float64)
    if frames.ndim != 2:
        raise ContractError(f"frame matrix must be 2-D (T, D), got ndim={frames.ndim}")
    return frames


def _windows(seq, k: int) -> np.ndarray:
    """Reshape the first ``floor(T/k)*k`` rows into ``(S, k, D)`` windows."""
    frames = _frames_of(seq)
    t, d = frames.shape
    if t < k:
        raise ContractError(
            f"sequence has {t} frames but the window size is {k}; need T >= k"
        )
    s = t // k
    return frames[: s * k].reshape(s, k, d)


def max_pool_time(seq, k: int) -> PooledSequence:
    """Per-window elementwise maximum along the temporal axis."""
    return PooledSequence.from_array(_windows(seq, k).max(axis=1))


def concat_windows(seq, k: int) -> PooledSequence:
    """Join each window's rows, in temporal order, into one k*D row."""
    win = _windows(seq, k)
    s, _, d = win.shape
    return PooledSequence.from_array(win.reshape(s, k * d))


def reduce(seq, config: ReductionConfig) -> PooledSequence:
    """Dispatch to the configured reduction mode."""
    if config.mode == MODE_MAX_POOL:
        return max_pool_time(seq, config.k)
    return concat_windows(seq, config.k)


def reduced_width(feature_dim: int, config: ReductionConfig) -> int:
    """Column count a reduction produces for the given input width."""
    return feature_dim if config.mode == MODE_MAX_POOL else config.k * feature_dim
