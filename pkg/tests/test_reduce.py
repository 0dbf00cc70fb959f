"""Temporal reduction: window max-pooling and window concatenation."""

import numpy as np
import pytest

from vrsick.errors import ConfigError, ContractError
from vrsick.fseq import FrameFeatureSequence
from vrsick.reduce import (
    ReductionConfig,
    concat_windows,
    max_pool_time,
    reduce,
    reduced_width,
)


def brute_force_max_pool(frames: np.ndarray, k: int) -> np.ndarray:
    """Independent per-window maximum, written as plain loops."""
    t, d = frames.shape
    s = t // k
    out = np.empty((s, d))
    for row in range(s):
        for col in range(d):
            best = frames[row * k, col]
            for j in range(1, k):
                best = max(best, frames[row * k + j, col])
            out[row, col] = best
    return out


class TestConfig:
    def test_defaults(self):
        config = ReductionConfig()
        assert (config.mode, config.k) == ("concat", 5)

    def test_bad_mode_rejected(self):
        with pytest.raises(ConfigError, match="reduce.mode"):
            ReductionConfig(mode="avg")

    def test_bad_k_rejected(self):
        with pytest.raises(ConfigError, match="reduce.k"):
            ReductionConfig(k=0)

    def test_only_drop_remainder_supported(self):
        with pytest.raises(ConfigError, match="tail_policy"):
            ReductionConfig(tail_policy="pad")


class TestMaxPool:
    def test_matches_brute_force_on_random_cases(self, rng):
        for _ in range(50):
            t = int(rng.integers(1, 80))
            k = int(rng.integers(1, t + 1))
            d = int(rng.integers(1, 12))
            frames = rng.normal(size=(t, d))
            pooled = max_pool_time(frames, k)
            assert pooled.steps.shape == (t // k, d)
            np.testing.assert_array_equal(pooled.steps, brute_force_max_pool(frames, k))

    def test_sixty_frames_at_k_fifteen_gives_four_steps(self, rng):
        frames = rng.normal(size=(60, 7))
        pooled = max_pool_time(frames, 15)
        assert (pooled.step_count, pooled.width) == (4, 7)

    def test_remainder_rows_are_ignored(self, rng):
        frames = rng.normal(size=(23, 4))
        before = max_pool_time(frames, 5).steps
        frames[20:] += 1e6  # mutate only the dropped tail
        np.testing.assert_array_equal(max_pool_time(frames, 5).steps, before)

    def test_k_one_is_identity(self, rng):
        frames = rng.normal(size=(9, 3))
        np.testing.assert_array_equal(max_pool_time(frames, 1).steps, frames)

    def test_window_larger_than_sequence_rejected(self):
        with pytest.raises(ContractError, match="need T >= k"):
            max_pool_time(np.zeros((3, 2)), 4)

    def test_accepts_sequence_objects(self, rng):
        frames = rng.normal(size=(10, 3))
        seq = FrameFeatureSequence(frames, frame_rate_hz=2.0)
        np.testing.assert_array_equal(max_pool_time(seq, 2).steps,
                                      max_pool_time(frames, 2).steps)


class TestConcat:
    def test_rows_are_windows_in_temporal_order(self, rng):
        frames = rng.normal(size=(8, 3))
        out = concat_windows(frames, 4).steps
        assert out.shape == (2, 12)
        np.testing.assert_array_equal(out[0], frames[0:4].ravel())
        np.testing.assert_array_equal(out[1], frames[4:8].ravel())

    def test_shape_formula_random_sweep(self, rng):
        for _ in range(50):
            t = int(rng.integers(1, 64))
            k = int(rng.integers(1, t + 1))
            d = int(rng.integers(1, 10))
            out = concat_windows(rng.normal(size=(t, d)), k)
            assert (out.step_count, out.width) == (t // k, k * d)

    def test_backbone_scale_shape(self):
        """25 frames of width 2048 concatenated by 5 -> (5, 10240)."""
        frames = np.zeros((25, 2048))
        out = concat_windows(frames, 5)
        assert out.steps.shape == (5, 10240)

    def test_k_one_is_identity(self, rng):
        frames = rng.normal(size=(6, 4))
        np.testing.assert_array_equal(concat_windows(frames, 1).steps, frames)

    def test_values_preserved_not_aggregated(self, rng):
        frames = rng.normal(size=(10, 2))
        out = concat_windows(frames, 5).steps
        assert set(np.unique(out)) == set(np.unique(frames))


class TestDispatch:
    def test_reduce_routes_by_mode(self, rng):
        frames = rng.normal(size=(12, 3))
        np.testing.assert_array_equal(
            reduce(frames, ReductionConfig(mode="max_pool", k=3)).steps,
            max_pool_time(frames, 3).steps,
        )
        np.testing.assert_array_equal(
            reduce(frames, ReductionConfig(mode="concat", k=3)).steps,
            concat_windows(frames, 3).steps,
        )

    def test_reduced_width(self):
        assert reduced_width(32, ReductionConfig(mode="max_pool", k=5)) == 32
        assert reduced_width(32, ReductionConfig(mode="concat", k=5)) == 160
        assert reduced_width(2048, ReductionConfig(mode="concat", k=5)) == 10240

    def test_output_is_float64(self, rng):
        frames = rng.normal(size=(10, 3)).astype(np.float32)
        assert reduce(frames, ReductionConfig()).steps.dtype == np.float64
