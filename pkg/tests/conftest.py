"""Shared fixtures: small synthetic datasets and a trained toy model."""

import numpy as np
import pytest

from vrsick.reduce import ReductionConfig
from vrsick.synthetic import SyntheticSpec, generate_synthetic
from vrsick.train import TrainConfig, stratified_kfold, train_fold


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """40 strongly separable sessions, 4 classes, 20x12 frames each."""
    spec = SyntheticSpec(
        session_count=40, frames_per_sample=20, feature_dim=12,
        class_count=4, motif_strength=5.0, noise_sigma=1.0, seed=0,
    )
    out = tmp_path_factory.mktemp("small_dataset")
    manifest, dataset = generate_synthetic(spec, out)
    return {"dir": out, "manifest": manifest, "dataset": dataset, "spec": spec}


@pytest.fixture(scope="session")
def toy_fold(tmp_path_factory):
    """A genuinely trained small model plus its data and fold split.

    Low-amplitude data keeps the network in a smooth regime, which the
    integrated-gradients convergence tests rely on.
    """
    spec = SyntheticSpec(
        session_count=40, frames_per_sample=20, feature_dim=12,
        class_count=4, motif_strength=0.6, noise_sigma=0.2, seed=3,
    )
    out = tmp_path_factory.mktemp("toy_fold")
    _, dataset = generate_synthetic(spec, out)
    config = TrainConfig(
        folds=5, epochs=10, batch_size=8, hidden_size=8, patience=5,
        reduction=ReductionConfig(mode="concat", k=5), seed=3,
    )
    split = stratified_kfold(dataset.labels(), config.folds, config.seed)[0]
    fold = train_fold(dataset, split, config)
    return {"dataset": dataset, "config": config, "split": split, "fold": fold}


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
