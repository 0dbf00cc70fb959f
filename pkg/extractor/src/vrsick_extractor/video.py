"""Frame sampling: decode a clip and keep the frame nearest each timestamp.

Sampling at ``rate_hz`` takes timestamps ``n / rate_hz`` for
``n = 0 .. floor(duration * rate_hz) - 1`` and selects the container
frame whose own timestamp ``j / fps`` is nearest (ties resolve to the
later frame). Frames are decoded once, in order, and resized to the
configured (width, height) before they are returned, so the output is
ready for the backbone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .config import FrameSamplingConfig
from .errors import ExtractionError


@dataclass(frozen=True)
class VideoInfo:
    """Container metadata needed to plan sampling."""

    fps: float
    frame_count: int

    @property
    def duration_s(self) -> float:
        return self.frame_count / self.fps


@dataclass(frozen=True)
class SampledFrames:
    """Frames pulled from one clip, in temporal order.

    ``frames`` is ``(T, height, width, 3)`` uint8 RGB; ``timestamps_s``
    holds the requested timestamps ``n / rate_hz`` and ``frame_indices``
    the container frame chosen for each.
    """

    frames: np.ndarray
    timestamps_s: np.ndarray
    frame_indices: np.ndarray
    source: VideoInfo

    def __len__(self) -> int:
        return self.frames.shape[0]


def probe_video(video_path) -> VideoInfo:
    """Read a clip's frame rate and frame count without decoding frames."""
    path = Path(video_path)
    if not path.exists():
        raise ExtractionError(f"video {path} does not exist")
    capture = cv2.VideoCapture(str(path))
    try:
        if not capture.isOpened():
            raise ExtractionError(f"cannot decode video {path}")
        fps = float(capture.get(cv2.CAP_PROP_FPS))
        frame_count = int(round(capture.get(cv2.CAP_PROP_FRAME_COUNT)))
    finally:
        capture.release()
    if not (math.isfinite(fps) and fps > 0) or frame_count < 1:
        raise ExtractionError(
            f"cannot decode video {path}: container reports "
            f"{frame_count} frames at {fps} fps"
        )
    return VideoInfo(fps=fps, frame_count=frame_count)


def _plan(info: VideoInfo, rate_hz: float) -> tuple[np.ndarray, np.ndarray]:
    """Timestamps and nearest container frame indices for one clip."""
    # count = floor(duration * rate); computed in row space with a one-ulp
    # cushion so rate == fps selects exactly every frame.
    count = int(math.floor(info.frame_count * rate_hz / info.fps + 1e-9))
    timestamps = np.arange(count, dtype=np.float64) / rate_hz
    indices = np.floor(timestamps * info.fps + 0.5).astype(np.int64)
    return timestamps, np.minimum(indices, info.frame_count - 1)


def sample_frames(video_path, config: FrameSamplingConfig) -> SampledFrames:
    """Decode *video_path* and return the frames nearest each timestamp.

    Raises :class:`ExtractionError` when the file cannot be decoded or
    when ``config.rate_hz`` exceeds the source frame rate. A clip shorter
    than one sampling period yields zero frames (no error at this layer).
    """
    path = Path(video_path)
    info = probe_video(path)
    if config.rate_hz > info.fps:
        raise ExtractionError(
            f"sampling rate {config.rate_hz:g} Hz exceeds the source "
            f"frame rate {info.fps:g} fps of {path}"
        )
    timestamps, indices = _plan(info, config.rate_hz)

    width, height = config.resize
    frames = np.empty((len(indices), height, width, 3), dtype=np.uint8)
    if len(indices) == 0:
        return SampledFrames(frames, timestamps, indices, info)

    # One sequential decode pass; a container frame may fill several
    # output rows when timestamps collide on it.
    rows_for: dict[int, list[int]] = {}
    for row, j in enumerate(indices.tolist()):
        rows_for.setdefault(j, []).append(row)
    last_needed = max(rows_for)

    capture = cv2.VideoCapture(str(path))
    try:
        if not capture.isOpened():
            raise ExtractionError(f"cannot decode video {path}")
        for j in range(last_needed + 1):
            ok, bgr = capture.read()
            if not ok:
                raise ExtractionError(f"failed to decode frame {j} of {path}")
            if j not in rows_for:
                continue
            resized = cv2.resize(bgr, (width, height), interpolation=cv2.INTER_AREA)
            rgb = cv2.cvtColor(resized, cv2.COLOR_BGR2RGB)
            for row in rows_for[j]:
                frames[row] = rgb
    finally:
        capture.release()
    return SampledFrames(frames, timestamps, indices, info)
