"""Shared fixtures: bundled and generated clips, offline backbone configs."""

from pathlib import Path

import numpy as np
import pytest

from vrsick_extractor import FrameSamplingConfig, write_test_clip

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def bundled_clip():
    """The committed 10 s, 80-frame MJPG clip (8 fps, 96x96)."""
    path = DATA_DIR / "clip_10s.avi"
    assert path.exists(), "bundled clip missing; run tools/make_test_clip.py"
    return path


@pytest.fixture(scope="session")
def long_clip(tmp_path_factory):
    """64 s at 2 fps (128 frames): long enough for whole labeled minutes."""
    path = tmp_path_factory.mktemp("clips") / "long_64s.avi"
    write_test_clip(path, seconds=64.0, fps=2.0, size=(96, 96), seed=3)
    return path


@pytest.fixture(scope="session")
def short_clip(tmp_path_factory):
    """2 s at 2 fps (4 frames): extractable, too short for any minute."""
    path = tmp_path_factory.mktemp("clips") / "short_2s.avi"
    write_test_clip(path, seconds=2.0, fps=2.0, size=(96, 96), seed=4)
    return path


@pytest.fixture(scope="session")
def seeded():
    """Factory for configs pinned to deterministic offline weights."""

    def make(**overrides):
        overrides.setdefault("weights", "seeded:0")
        return FrameSamplingConfig(**overrides)

    return make


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
