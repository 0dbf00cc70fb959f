"""Deterministic tiny MJPG clips for exercising the sampling pipeline.

Every frame carries its own index, encoded as two flat gray blocks
holding the index's base-16 digits (``value = 16 + 14 * digit``). Flat
blocks survive MJPG's lossy round trip with a wide margin, so a decoded
frame identifies exactly which source frame it came from:
:func:`decode_frame_index` reads the digits back. The rest of the frame
is a seeded random backdrop plus a moving marker, so no two frames are
identical anywhere else.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from .errors import ExtractionError

_DIGIT_BASE = 16
_DIGIT_STEP = 14
_DIGIT_OFFSET = 16


def _block_rects(width: int, height: int) -> list[tuple[int, int, int, int]]:
    """(y0, y1, x0, x1) for the two digit blocks, scaled to the frame."""
    size = width // 5
    y0 = height // 12
    x_high = width // 12
    x_low = x_high + width // 3
    return [
        (y0, y0 + size, x_high, x_high + size),
        (y0, y0 + size, x_low, x_low + size),
    ]


def write_test_clip(path, seconds: float = 10.0, fps: float = 8.0,
                    size: tuple[int, int] = (96, 96), seed: int = 7) -> int:
    """Write a deterministic MJPG clip; returns the frame count.

    The content is a pure function of the arguments. Frame indices must
    fit two base-16 digits, so ``seconds * fps`` must stay below 256.
    """
    width, height = size
    if min(width, height) < 48:
        raise ExtractionError(f"clip size must be at least 48x48, got {size}")
    frame_count = int(round(seconds * fps))
    if not (1 <= frame_count < _DIGIT_BASE**2):
        raise ExtractionError(
            f"frame count {frame_count} outside 1..{_DIGIT_BASE**2 - 1}"
        )

    rng = np.random.default_rng(seed)
    backdrop = rng.integers(30, 220, size=(height, width, 3), dtype=np.uint8)
    rects = _block_rects(width, height)
    marker_rows = slice(5 * height // 8, 5 * height // 8 + height // 8)
    marker_width = max(4, width // 8)

    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, (width, height)
    )
    if not writer.isOpened():
        raise ExtractionError(f"cannot open MJPG writer for {path}")
    try:
        for index in range(frame_count):
            frame = backdrop.copy()
            high, low = divmod(index, _DIGIT_BASE)
            for digit, (y0, y1, x0, x1) in zip((high, low), rects):
                frame[y0:y1, x0:x1] = _DIGIT_OFFSET + _DIGIT_STEP * digit
            x = (5 * index) % (width - marker_width)
            frame[marker_rows, x : x + marker_width] = (255, 40, 40)
            writer.write(cv2.cvtColor(frame, cv2.COLOR_RGB2BGR))
    finally:
        writer.release()
    if not Path(path).exists():
        raise ExtractionError(f"MJPG writer produced no file at {path}")
    return frame_count


def decode_frame_index(frame_rgb: np.ndarray) -> int:
    """Recover the frame index encoded by :func:`write_test_clip`.

    The frame must be at the clip's native resolution (the digit blocks
    are located proportionally). Gray blocks are channel-symmetric, so
    RGB/BGR order does not matter.
    """
    frame = np.asarray(frame_rgb)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ExtractionError(f"expected an (H, W, 3) frame, got shape {frame.shape}")
    height, width = frame.shape[:2]
    digits = []
    for y0, y1, x0, x1 in _block_rects(width, height):
        # Read the block interior only; MJPG ringing lives at the edges.
        dy, dx = (y1 - y0) // 4, (x1 - x0) // 4
        value = float(frame[y0 + dy : y1 - dy, x0 + dx : x1 - dx].mean())
        digit = round((value - _DIGIT_OFFSET) / _DIGIT_STEP)
        digits.append(int(np.clip(digit, 0, _DIGIT_BASE - 1)))
    high, low = digits
    return _DIGIT_BASE * high + low
