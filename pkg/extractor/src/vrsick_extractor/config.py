"""Extraction settings: sampling rate, frame geometry, backbone choice."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

SUPPORTED_BACKBONES = ("inception_v3",)


def parse_weights(spec: str) -> tuple[str, int | None]:
    """Split a weight-source spec into ``(kind, seed)``.

    ``"pretrained"`` selects the backbone's published ImageNet checkpoint
    (returns seed ``None``). ``"seeded:<int>"`` builds the same
    architecture with deterministically initialized random weights, for
    environments without checkpoint access.
    """
    if spec == "pretrained":
        return "pretrained", None
    if spec.startswith("seeded:"):
        tail = spec[len("seeded:"):]
        try:
            return "seeded", int(tail)
        except ValueError:
            raise ConfigError(f"weights seed {tail!r} is not an integer") from None
    raise ConfigError(
        f"unknown weights spec {spec!r}; expected 'pretrained' or 'seeded:<int>'"
    )


@dataclass(frozen=True)
class FrameSamplingConfig:
    """How a video becomes a ``T x D`` embedding matrix.

    ``rate_hz`` frames are taken per second of video (the container frame
    nearest each timestamp ``n / rate_hz``), each resized to ``resize``
    (width, height) pixels and pushed through ``backbone``; the pooled
    output of width ``output_dim`` becomes one matrix row. The sampling
    rate must not exceed the source frame rate (checked per video).
    """

    rate_hz: float = 1.0
    resize: tuple[int, int] = (224, 224)
    backbone: str = "inception_v3"
    weights: str = "pretrained"
    output_dim: int = 2048

    def __post_init__(self):
        rate = float(self.rate_hz)
        if not (math.isfinite(rate) and rate > 0):
            raise ConfigError(f"rate_hz must be a positive number, got {self.rate_hz!r}")
        object.__setattr__(self, "rate_hz", rate)

        try:
            width, height = self.resize
            width, height = int(width), int(height)
        except (TypeError, ValueError):
            raise ConfigError(
                f"resize must be a (width, height) pair, got {self.resize!r}"
            ) from None
        if width < 1 or height < 1:
            raise ConfigError(f"resize dimensions must be positive, got {self.resize!r}")
        object.__setattr__(self, "resize", (width, height))

        if self.backbone not in SUPPORTED_BACKBONES:
            raise ConfigError(
                f"unknown backbone {self.backbone!r}; "
                f"supported: {', '.join(SUPPORTED_BACKBONES)}"
            )
        if not isinstance(self.output_dim, int) or self.output_dim < 1:
            raise ConfigError(f"output_dim must be a positive int, got {self.output_dim!r}")
        parse_weights(self.weights)
