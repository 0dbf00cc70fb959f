"""Pretrained-CNN embedding: RGB frames in, pooled feature vectors out.

The backbone is an ImageNet-classification network with its classifier
head removed, so the forward pass ends at the global-average-pooled
vector (width 2048 for the default InceptionV3). Inference runs in eval
mode on a single thread with gradients disabled, which makes the output
a pure function of (frames, weights): reruns are bitwise identical.

Weight sources ("pretrained" vs "seeded:<int>") are described in
:func:`vrsick_extractor.config.parse_weights`. Loaded backbones are
cached per (architecture, weights) for the life of the process.
"""

from __future__ import annotations

import numpy as np

from .config import FrameSamplingConfig, parse_weights
from .errors import ConfigError

# The backbone's published input preprocessing; recorded in the manifest
# so downstream consumers can reproduce the embedding.
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
PREPROCESS_SPEC = (
    "rgb uint8 / 255, per-channel normalize "
    f"mean={IMAGENET_MEAN} std={IMAGENET_STD}"
)

_BATCH_SIZE = 8
_CACHE: dict[tuple[str, str], object] = {}


def _build_inception_v3(weights_spec: str):
    import torch
    from torchvision import models as tv_models

    kind, seed = parse_weights(weights_spec)
    if kind == "pretrained":
        try:
            model = tv_models.inception_v3(
                weights=tv_models.Inception_V3_Weights.IMAGENET1K_V1
            )
        except Exception as exc:
            raise ConfigError(
                f"cannot load pretrained ImageNet weights ({exc}); pass "
                "weights 'seeded:<int>' for a deterministic offline backbone"
            ) from exc
    else:
        # Seeds torch's global generator; construction order then fixes
        # every tensor, so equal seeds give bitwise-equal backbones.
        torch.manual_seed(seed)
        model = tv_models.inception_v3(weights=None, aux_logits=False, init_weights=True)
    model.fc = torch.nn.Identity()
    model.eval()
    for parameter in model.parameters():
        parameter.requires_grad_(False)
    return model


_BUILDERS = {"inception_v3": _build_inception_v3}


def load_backbone(config: FrameSamplingConfig):
    """Return the (cached) head-removed backbone module for *config*."""
    key = (config.backbone, config.weights)
    if key not in _CACHE:
        try:
            builder = _BUILDERS[config.backbone]
        except KeyError:
            raise ConfigError(
                f"unknown backbone {config.backbone!r}; "
                f"supported: {', '.join(sorted(_BUILDERS))}"
            ) from None
        _CACHE[key] = builder(config.weights)
    return _CACHE[key]


def preprocess_frames(frames: np.ndarray):
    """Normalize uint8 RGB frames into the backbone's input tensor.

    ``(N, height, width, 3)`` uint8 becomes ``(N, 3, height, width)``
    float32, scaled to [0, 1] and normalized per channel.
    """
    import torch

    frames = np.asarray(frames)
    if frames.ndim != 4 or frames.shape[3] != 3:
        raise ConfigError(
            f"frames must be (N, height, width, 3) RGB, got shape {frames.shape}"
        )
    if frames.dtype != np.uint8:
        raise ConfigError(f"frames must be uint8, got dtype {frames.dtype}")
    scaled = frames.astype(np.float32) / np.float32(255.0)
    scaled -= np.asarray(IMAGENET_MEAN, dtype=np.float32)
    scaled /= np.asarray(IMAGENET_STD, dtype=np.float32)
    return torch.from_numpy(np.ascontiguousarray(scaled.transpose(0, 3, 1, 2)))


def extract_features(frames, config: FrameSamplingConfig) -> np.ndarray:
    """Embed frames as a ``(T, output_dim)`` float32 matrix, one row each.

    *frames* is either a :class:`~vrsick_extractor.video.SampledFrames`
    or a raw ``(T, height, width, 3)`` uint8 RGB array whose geometry
    matches ``config.resize``. Row order follows frame order, and equal
    frames produce equal rows.
    """
    import torch

    frames = np.asarray(getattr(frames, "frames", frames))
    if len(frames) == 0:
        return np.zeros((0, config.output_dim), dtype=np.float32)
    width, height = config.resize
    if frames.ndim != 4 or frames.shape[1] != height or frames.shape[2] != width:
        raise ConfigError(
            f"frames have shape {frames.shape} but config.resize is "
            f"{width}x{height} (width x height)"
        )

    model = load_backbone(config)
    batch = preprocess_frames(frames)
    previous_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        chunks = []
        with torch.no_grad():
            for start in range(0, batch.shape[0], _BATCH_SIZE):
                chunks.append(model(batch[start : start + _BATCH_SIZE]))
        pooled = torch.cat(chunks, dim=0)
    finally:
        torch.set_num_threads(previous_threads)

    if pooled.ndim != 2 or pooled.shape[1] != config.output_dim:
        raise ConfigError(
            f"backbone {config.backbone!r} produces width {pooled.shape[-1]}, "
            f"config output_dim is {config.output_dim}"
        )
    return pooled.numpy().astype(np.float32, copy=False)
