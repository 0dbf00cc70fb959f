"""Writer for the FSEQ frame-embedding container.

FSEQ layout (little-endian, no padding):

    offset  size        content
    0       4           magic, ASCII "FSEQ"
    4       4           unsigned 32-bit D  (columns: embedding width)
    8       4           unsigned 32-bit T  (rows: frame count)
    12      4*T*D       IEEE-754 float32 payload, row-major

Total file size is exactly ``12 + 4*T*D`` bytes. This is the downstream
training pipeline's input format; the writer here is implemented against
that published layout, not against the consumer's code. The frame rate
is not part of the container; it travels in the dataset manifest.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ExtractionError

FSEQ_MAGIC = b"FSEQ"
_HEADER = struct.Struct("<4sII")


def write_feature_file(matrix: np.ndarray, path) -> None:
    """Serialize a ``T x D`` float matrix to *path* in the FSEQ layout."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ExtractionError(f"feature matrix must be 2-D, got ndim={matrix.ndim}")
    rows, cols = matrix.shape
    if rows < 1 or cols < 1:
        raise ExtractionError(f"feature matrix must be at least 1x1, got {matrix.shape}")
    payload = np.ascontiguousarray(matrix, dtype="<f4")
    if not np.all(np.isfinite(payload)):
        bad = int(np.flatnonzero(~np.isfinite(payload))[0])
        raise ExtractionError(f"feature matrix has a non-finite value at flat index {bad}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FSEQ_MAGIC, cols, rows))
        fh.write(payload.tobytes(order="C"))


def read_header(path) -> tuple[int, int]:
    """Return ``(D, T)`` from an FSEQ file header (used for reporting)."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise ExtractionError(f"{path}: too short for an FSEQ header")
    magic, cols, rows = _HEADER.unpack(raw)
    if magic != FSEQ_MAGIC:
        raise ExtractionError(f"{path}: bad magic {magic!r}, expected {FSEQ_MAGIC!r}")
    return cols, rows
