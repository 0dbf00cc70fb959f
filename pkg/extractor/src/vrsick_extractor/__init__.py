"""Gameplay-video feature extraction for the severity training pipeline.

Decodes a clip, samples frames at a fixed rate, embeds each frame with a
head-removed pretrained CNN, and writes the result as an FSEQ container
plus a manifest entry the training pipeline consumes directly.
"""

__version__ = "0.1.0"

from .backbone import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    PREPROCESS_SPEC,
    extract_features,
    load_backbone,
    preprocess_frames,
)
from .clipgen import decode_frame_index, write_test_clip
from .config import SUPPORTED_BACKBONES, FrameSamplingConfig, parse_weights
from .errors import (
    AlignmentError,
    ConfigError,
    ExtractionError,
    ExtractionWarning,
    ExtractorError,
)
from .fseq import FSEQ_MAGIC, read_header, write_feature_file
from .session import (
    DEFAULT_EDGES,
    FMS_MAX,
    FMS_MIN,
    MANIFEST_NAME,
    build_session,
    minute_frame_slice,
    parse_label_csv,
    update_manifest,
    validate_labels,
)
from .video import SampledFrames, VideoInfo, probe_video, sample_frames

__all__ = [
    "AlignmentError",
    "ConfigError",
    "DEFAULT_EDGES",
    "ExtractionError",
    "ExtractionWarning",
    "ExtractorError",
    "FMS_MAX",
    "FMS_MIN",
    "FSEQ_MAGIC",
    "FrameSamplingConfig",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "MANIFEST_NAME",
    "PREPROCESS_SPEC",
    "SUPPORTED_BACKBONES",
    "SampledFrames",
    "VideoInfo",
    "build_session",
    "decode_frame_index",
    "extract_features",
    "load_backbone",
    "minute_frame_slice",
    "parse_label_csv",
    "preprocess_frames",
    "probe_video",
    "read_header",
    "sample_frames",
    "update_manifest",
    "validate_labels",
    "write_feature_file",
    "write_test_clip",
]
