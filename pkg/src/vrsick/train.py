"""Stratified k-fold training with early stopping over the LSTM classifier.

The driver is fully deterministic for a given configuration: fold splits,
weight initialization, mini-batch order, and dropout masks each draw from
their own seeded generator stream, so two runs with the same seed produce
bit-identical checkpoints, histories, and reports. Folds are independent
of one another (fold ``f`` seeds with ``seed + f``), which also makes
parallel fold execution output-equivalent to the sequential loop.

Split construction: each class's sample indices are shuffled once and
dealt round-robin to the k folds, so per-class test counts differ by at
most one across folds. The validation set is carved per class from the
head of the remaining (already shuffled) indices; every class with at
least two remaining samples contributes at least one.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .data import LabeledDataset
from .errors import ConfigError, ContractError, StratificationError
from .model import (
    ModelParams,
    backward_batch,
    batch_cross_entropy,
    forward_batch,
    init_params,
)
from .optim import adam_step, clip_by_global_norm, init_adam
from .reduce import ReductionConfig, reduce, reduced_width

# per-fold generator streams (seeded [seed + fold, STREAM, ...])
_STREAM_INIT = 0
_STREAM_SHUFFLE = 1
_STREAM_DROPOUT = 2


@dataclass(frozen=True)
class TrainConfig:
    folds: int = 5
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.001
    patience: int = 5
    validation_fraction: float = 0.1
    seed: int = 0
    class_count: int = 4
    hidden_size: int = 100
    dropout_rate: float = 0.2
    clip_norm: float | None = None
    jobs: int = 1
    reduction: ReductionConfig = field(default_factory=ReductionConfig)

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if not 0.0 < self.validation_fraction < 0.5:
            raise ConfigError(
                f"validation_fraction must be in (0, 0.5), got {self.validation_fraction}"
            )
        if self.class_count < 2:
            raise ConfigError(f"class_count must be >= 2, got {self.class_count}")
        if self.hidden_size < 1:
            raise ConfigError(f"hidden_size must be >= 1, got {self.hidden_size}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be positive, got {self.clip_norm}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    def to_flat_dict(self) -> dict:
        """Flatten to the key set used by config files and run manifests."""
        doc = {}
        for f in fields(self):
            if f.name == "reduction":
                doc["reduce.mode"] = self.reduction.mode
                doc["reduce.k"] = self.reduction.k
            else:
                doc[f.name] = getattr(self, f.name)
        return doc

    @classmethod
    def from_flat_dict(cls, doc: dict) -> "TrainConfig":
        doc = dict(doc)
        known = {f.name for f in fields(cls)} - {"reduction"}
        kwargs = {}
        reduce_kwargs = {}
        for key, value in doc.items():
            if key == "reduce.mode":
                reduce_kwargs["mode"] = str(value)
            elif key == "reduce.k":
                reduce_kwargs["k"] = int(value)
            elif key in known:
                kwargs[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
        kwargs["reduction"] = ReductionConfig(**reduce_kwargs)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from exc


@dataclass(frozen=True)
class FoldSplit:
    """Disjoint train/validation/test index sets for one fold."""

    fold_index: int
    train_ids: np.ndarray
    validation_ids: np.ndarray
    test_ids: np.ndarray


def stratified_kfold(
    labels, k: int, seed: int, validation_fraction: float = 0.1
) -> list[FoldSplit]:
    """Class-balanced k-fold splits with a per-class validation carve-out.

    Every sample appears in exactly one fold's test set; within each fold
    the train/validation/test sets are pairwise disjoint and their union
    is the full index range.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.size == 0:
        raise ContractError("labels must be a non-empty 1-D integer array")
    if k < 2:
        raise ConfigError(f"fold count must be >= 2, got {k}")
    if not 0.0 < validation_fraction < 0.5:
        raise ConfigError(
            f"validation_fraction must be in (0, 0.5), got {validation_fraction}"
        )

    rng = np.random.default_rng(seed)
    classes = np.unique(labels)
    # shuffle each class once; fold f takes every k-th index (round-robin)
    shuffled = {}
    for c in classes:
        idx = np.flatnonzero(labels == c)
        if idx.size < k:
            raise StratificationError(
                f"class {int(c)} has {idx.size} samples, fewer than {k} folds"
            )
        shuffled[int(c)] = rng.permutation(idx)

    splits = []
    for f in range(k):
        test_parts, val_parts, train_parts = [], [], []
        for c in classes:
            order = shuffled[int(c)]
            dealt_to_f = order[f::k]
            rest = np.concatenate([order[g::k] for g in range(k) if g != f])
            want = int(np.floor(validation_fraction * rest.size))
            if want == 0 and rest.size >= 2:
                want = 1
            val_parts.append(rest[:want])
            train_parts.append(rest[want:])
            test_parts.append(dealt_to_f)
        splits.append(
            FoldSplit(
                fold_index=f,
                train_ids=np.sort(np.concatenate(train_parts)),
                validation_ids=np.sort(np.concatenate(val_parts)),
                test_ids=np.sort(np.concatenate(test_parts)),
            )
        )
    return splits


class EarlyStopper:
    """Stop after *patience* consecutive epochs without a strict improvement."""

    def __init__(self, patience: int):
        if patience < 1:
            raise ConfigError(f"patience must be >= 1, got {patience}")
        self.patience = patience
        self.best = -np.inf
        self.best_epoch = 0
        self.streak = 0

    def update(self, accuracy: float, epoch: int) -> bool:
        """Record one epoch's validation accuracy; True means stop now."""
        if accuracy > self.best:
            self.best = accuracy
            self.best_epoch = epoch
            self.streak = 0
        else:
            self.streak += 1
        return self.streak >= self.patience

    @property
    def improved(self) -> bool:
        return self.streak == 0


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int  # 1-based
    train_loss: float
    train_accuracy: float
    validation_loss: float
    validation_accuracy: float


@dataclass
class FoldResult:
    """Everything one trained fold produces."""

    fold_index: int
    model: ModelParams
    history: list[EpochMetrics]
    best_epoch: int
    best_validation_accuracy: float
    test_accuracy: float
    test_loss: float
    confusion: np.ndarray  # rows true class, cols predicted


def prepare_inputs(
    dataset: LabeledDataset, ids, reduction: ReductionConfig
) -> dict[int, np.ndarray]:
    """Reduce each referenced sample's frames once; keyed by sample index."""
    out = {}
    for i in ids:
        i = int(i)
        if not 0 <= i < len(dataset):
            raise ContractError(
                f"sample index {i} out of range for dataset of {len(dataset)}"
            )
        out[i] = reduce(dataset.samples[i].frames, reduction).steps
    return out


def _group_by_steps(ids, inputs) -> list[list[int]]:
    """Partition ids into groups of equal sequence length, preserving order."""
    groups: dict[int, list[int]] = {}
    for i in ids:
        groups.setdefault(inputs[int(i)].shape[0], []).append(int(i))
    return [groups[s] for s in sorted(groups)]


def _eval_pass(
    model: ModelParams, ids, inputs, labels: np.ndarray
) -> tuple[float, float, np.ndarray]:
    """Deterministic eval-mode (loss, accuracy, confusion) over *ids*."""
    c = model.class_count
    confusion = np.zeros((c, c), dtype=np.int64)
    loss_sum = 0.0
    groups = _group_by_steps(ids, inputs)
    for group in groups:
        x = np.stack([inputs[i] for i in group])
        y = labels[group]
        probs, _ = forward_batch(model, x, train=False)
        loss_sum += batch_cross_entropy(probs, y) * len(group)
        pred = np.argmax(probs, axis=1)
        np.add.at(confusion, (y, pred), 1)
    n = sum(len(g) for g in groups)
    accuracy = float(np.trace(confusion) / n)
    return loss_sum / n, accuracy, confusion


def train_fold(
    dataset: LabeledDataset, split: FoldSplit, config: TrainConfig
) -> FoldResult:
    """Train one fold to its early-stopping point and score its test set.

    Returns the parameters from the best validation epoch, not the last
    one, so re-evaluating the returned model on the validation set
    reproduces ``best_validation_accuracy`` exactly.
    """
    if dataset.class_count != config.class_count:
        raise ConfigError(
            f"dataset has {dataset.class_count} classes but config expects "
            f"{config.class_count}"
        )
    if split.train_ids.size == 0:
        raise ConfigError(f"fold {split.fold_index}: training split is empty")
    if config.epochs > 0 and split.validation_ids.size == 0:
        raise ConfigError(
            f"fold {split.fold_index}: validation split is empty; early "
            f"stopping needs at least one validation sample per fold"
        )

    all_ids = np.concatenate([split.train_ids, split.validation_ids, split.test_ids])
    inputs = prepare_inputs(dataset, all_ids, config.reduction)
    labels = dataset.labels()
    width = reduced_width(dataset.feature_dim, config.reduction)

    fold_seed = config.seed + split.fold_index
    model = init_params(
        input_dim=width,
        hidden_size=config.hidden_size,
        class_count=config.class_count,
        seed=[fold_seed, _STREAM_INIT],
        dropout_rate=config.dropout_rate,
    )
    optimizer = init_adam(model, lr=config.learning_rate)
    stopper = EarlyStopper(config.patience)
    best_model = model.copy()
    history: list[EpochMetrics] = []

    for epoch in range(1, config.epochs + 1):
        shuffle_rng = np.random.default_rng([fold_seed, _STREAM_SHUFFLE, epoch])
        dropout_rng = np.random.default_rng([fold_seed, _STREAM_DROPOUT, epoch])
        order = shuffle_rng.permutation(split.train_ids)

        loss_sum = 0.0
        hit_sum = 0
        for lo in range(0, order.size, config.batch_size):
            batch_ids = order[lo : lo + config.batch_size]
            weight = 1.0 / batch_ids.size
            grads = None
            for group in _group_by_steps(batch_ids, inputs):
                x = np.stack([inputs[i] for i in group])
                y = labels[group]
                probs, cache = forward_batch(model, x, train=True, rng=dropout_rng)
                part = backward_batch(model, cache, y, weight=weight)
                if grads is None:
                    grads = part
                else:
                    for key in grads:
                        grads[key] += part[key]
                p = np.maximum(probs[np.arange(len(y)), y], 1e-12)
                loss_sum += float(np.sum(-np.log(p)))
                hit_sum += int(np.sum(np.argmax(probs, axis=1) == y))
            if config.clip_norm is not None:
                clip_by_global_norm(grads, config.clip_norm, model.tensors.keys())
            adam_step(model, grads, optimizer)

        val_loss, val_acc, _ = _eval_pass(model, split.validation_ids, inputs, labels)
        history.append(
            EpochMetrics(
                epoch=epoch,
                train_loss=loss_sum / order.size,
                train_accuracy=hit_sum / order.size,
                validation_loss=val_loss,
                validation_accuracy=val_acc,
            )
        )
        stop = stopper.update(val_acc, epoch)
        if stopper.improved:
            best_model = model.copy()
        if stop:
            break

    if not history:  # epochs == 0: score the freshly initialized model
        best_model = model.copy()
    test_loss, test_acc, confusion = _eval_pass(
        best_model, split.test_ids, inputs, labels
    )
    return FoldResult(
        fold_index=split.fold_index,
        model=best_model,
        history=history,
        best_epoch=stopper.best_epoch,
        best_validation_accuracy=float(stopper.best) if history else 0.0,
        test_accuracy=test_acc,
        test_loss=test_loss,
        confusion=confusion,
    )


@dataclass(frozen=True)
class EvalReport:
    """Held-out metrics for one scored sample set."""

    test_accuracy: float
    test_loss: float
    confusion_matrix: np.ndarray  # rows true class, cols predicted
    sample_count: int
    fold_index: int | None = None


def evaluate(
    model: ModelParams, sample_ids, dataset: LabeledDataset, reduction: ReductionConfig
) -> EvalReport:
    """Deterministic eval-mode scoring of the given samples."""
    ids = np.asarray(list(sample_ids), dtype=np.int64)
    if ids.size == 0:
        raise ContractError("evaluate needs at least one sample id")
    if dataset.class_count != model.class_count:
        raise ConfigError(
            f"dataset has {dataset.class_count} classes but the model "
            f"predicts {model.class_count}"
        )
    inputs = prepare_inputs(dataset, ids, reduction)
    loss, accuracy, confusion = _eval_pass(model, ids, inputs, dataset.labels())
    return EvalReport(
        test_accuracy=accuracy,
        test_loss=loss,
        confusion_matrix=confusion,
        sample_count=int(ids.size),
    )


@dataclass
class CrossValidationResult:
    config: TrainConfig
    splits: list[FoldSplit]
    folds: list[FoldResult]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([f.test_accuracy for f in self.folds]))

    @property
    def mean_loss(self) -> float:
        return float(np.mean([f.test_loss for f in self.folds]))


def _fold_worker(payload):
    dataset, split, config = payload
    return train_fold(dataset, split, config)


def run_cross_validation(
    dataset: LabeledDataset, config: TrainConfig
) -> CrossValidationResult:
    """Train and score every fold; parallelism never changes the numbers.

    With ``jobs > 1`` folds run in separate processes, but each fold's
    randomness is derived only from ``seed + fold_index``, so results are
    identical to the sequential schedule.
    """
    splits = stratified_kfold(
        dataset.labels(), config.folds, config.seed, config.validation_fraction
    )
    if config.jobs == 1 or config.folds == 1:
        folds = [train_fold(dataset, split, config) for split in splits]
    else:
        payloads = [(dataset, split, config) for split in splits]
        workers = min(config.jobs, config.folds)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            folds = list(pool.map(_fold_worker, payloads))
    return CrossValidationResult(config=config, splits=splits, folds=folds)


def report_dict(result: CrossValidationResult) -> dict:
    """JSON-ready summary of a cross-validation run."""
    return {
        "folds": [
            {
                "fold_index": f.fold_index,
                "best_epoch": f.best_epoch,
                "epochs_run": len(f.history),
                "best_validation_accuracy": f.best_validation_accuracy,
                "test_accuracy": f.test_accuracy,
                "test_loss": f.test_loss,
                "confusion_matrix": f.confusion.tolist(),
            }
            for f in result.folds
        ],
        "mean_test_accuracy": result.mean_accuracy,
        "mean_test_loss": result.mean_loss,
    }


def write_report_json(result: CrossValidationResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(report_dict(result), fh, indent=2, sort_keys=True)
        fh.write("\n")


#: Column layout of the per-epoch metrics CSV.
METRICS_HEADER = ["fold", "epoch", "train_loss", "train_acc", "val_loss", "val_acc"]


def write_metrics_csv(result: CrossValidationResult, path) -> None:
    """Per-epoch training curves for every fold, one row per (fold, epoch)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for f in result.folds:
            for m in f.history:
                writer.writerow(
                    [f.fold_index, m.epoch, repr(m.train_loss), repr(m.train_accuracy),
                     repr(m.validation_loss), repr(m.validation_accuracy)]
                )


def resolved_config(config: TrainConfig, overrides: dict) -> TrainConfig:
    """Apply non-None override values (CLI flags beat config files)."""
    flat = config.to_flat_dict()
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in flat:
            raise ConfigError(f"unknown config key {key!r}")
        flat[key] = value
    return TrainConfig.from_flat_dict(flat)
