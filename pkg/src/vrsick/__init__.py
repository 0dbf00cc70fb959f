"""Cybersickness severity classification from frame-level feature sequences.

The package takes per-frame embedding matrices (one row per video frame),
reduces them along time, and trains a two-layer LSTM classifier to predict
per-minute sickness severity classes, with integrated-gradients attribution
to explain which time steps drove a prediction.
"""

from .attribution import (
    AttributionConfig,
    AttributionMap,
    attribute_sample,
    completeness_gap,
    integrate_gradients_path,
    integrated_gradients,
    standard_gradients,
    temporal_importance,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    BinningScheme,
    DatasetManifest,
    FmsLabel,
    LabeledDataset,
    Sample,
    SessionEntry,
    SessionRecord,
    bin_fms,
    load_manifest,
    minute_frame_slice,
    read_manifest,
    write_manifest,
)
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    FormatError,
    StratificationError,
    VrsickError,
)
from .fseq import (
    FrameFeatureSequence,
    read_attribution_file,
    read_feature_file,
    write_attribution_file,
    write_feature_file,
)
from .gradcheck import finite_diff_max_rel_error, grad_check
from .model import (
    ModelParams,
    batch_cross_entropy,
    cross_entropy,
    forward_batch,
    init_params,
    model_backward,
    model_forward,
    param_key_order,
    softmax,
)
from .optim import AdamState, adam_step, clip_by_global_norm, init_adam
from .reduce import (
    PooledSequence,
    ReductionConfig,
    concat_windows,
    max_pool_time,
    reduce,
    reduced_width,
)
from .synthetic import SyntheticSpec, generate_synthetic, template_accuracy
from .train import (
    EarlyStopper,
    EpochMetrics,
    EvalReport,
    FoldResult,
    FoldSplit,
    TrainConfig,
    evaluate,
    run_cross_validation,
    stratified_kfold,
    train_fold,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AttributionConfig",
    "AttributionMap",
    "BinningScheme",
    "ConfigError",
    "ContractError",
    "DataError",
    "DatasetManifest",
    "EarlyStopper",
    "EpochMetrics",
    "EvalReport",
    "FmsLabel",
    "FoldResult",
    "FoldSplit",
    "FormatError",
    "FrameFeatureSequence",
    "LabeledDataset",
    "ModelParams",
    "PooledSequence",
    "ReductionConfig",
    "Sample",
    "SessionEntry",
    "SessionRecord",
    "StratificationError",
    "SyntheticSpec",
    "TrainConfig",
    "VrsickError",
    "adam_step",
    "attribute_sample",
    "batch_cross_entropy",
    "bin_fms",
    "clip_by_global_norm",
    "completeness_gap",
    "concat_windows",
    "cross_entropy",
    "evaluate",
    "finite_diff_max_rel_error",
    "forward_batch",
    "generate_synthetic",
    "grad_check",
    "init_adam",
    "init_params",
    "integrate_gradients_path",
    "integrated_gradients",
    "load_checkpoint",
    "load_manifest",
    "max_pool_time",
    "minute_frame_slice",
    "model_backward",
    "model_forward",
    "param_key_order",
    "read_attribution_file",
    "read_feature_file",
    "read_manifest",
    "reduce",
    "reduced_width",
    "run_cross_validation",
    "save_checkpoint",
    "softmax",
    "standard_gradients",
    "stratified_kfold",
    "temporal_importance",
    "template_accuracy",
    "train_fold",
    "write_attribution_file",
    "write_feature_file",
    "write_manifest",
]
