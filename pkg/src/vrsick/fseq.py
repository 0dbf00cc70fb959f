"""Binary containers for frame-embedding and attribution matrices.

FSEQ layout (little-endian, no padding):

    offset  size        content
    0       4           magic, ASCII "FSEQ"
    4       4           unsigned 32-bit D  (columns: embedding width)
    8       4           unsigned 32-bit T  (rows: frame count)
    12      4*T*D       IEEE-754 float32 payload, row-major

Total file size is exactly ``12 + 4*T*D`` bytes. Attribution dumps use the
same layout with magic "ATTR" and signed score values.

Payloads are stored as float32 and widened to float64 on read, so a
write/read round trip is exact whenever the in-memory values are
float32-representable (everything this package produces is).

The frame rate is deliberately not part of the container; it travels in
the dataset manifest.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError

FSEQ_MAGIC = b"FSEQ"
ATTR_MAGIC = b"ATTR"
_HEADER = struct.Struct("<4sII")


@dataclass
class FrameFeatureSequence:
    """A ``T x D`` matrix of per-frame embeddings plus its sampling rate.

    Rows are frames in temporal order; columns are embedding dimensions.
    Arithmetic downstream runs in float64, so frames are widened on
    construction regardless of the input dtype.
    """

    frames: np.ndarray
    frame_rate_hz: float = 1.0

    def __post_init__(self):
        frames = np.ascontiguousarray(np.asarray(self.frames, dtype=np.float64))
        if frames.ndim != 2:
            raise ValueError(f"frames must be 2-D (T x D), got ndim={frames.ndim}")
        if frames.shape[0] < 1 or frames.shape[1] < 1:
            raise ValueError(f"frames must be at least 1x1, got shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            bad = int(np.flatnonzero(~np.isfinite(frames))[0])
            raise ValueError(
                f"frames contain a non-finite value at flat index {bad}"
            )
        if not (np.isfinite(self.frame_rate_hz) and self.frame_rate_hz > 0):
            raise ValueError(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
        self.frames = frames
        self.frame_rate_hz = float(self.frame_rate_hz)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.frames.shape[1]


def _encode_matrix(matrix: np.ndarray, magic: bytes) -> bytes:
    payload = np.ascontiguousarray(matrix, dtype="<f4")
    if not np.all(np.isfinite(payload)):
        bad = int(np.flatnonzero(~np.isfinite(payload))[0])
        raise ValueError(
            f"value at flat index {bad} is not representable as a finite float32"
        )
    t, d = matrix.shape
    return _HEADER.pack(magic, d, t) + payload.tobytes()


def _decode_matrix(raw: bytes, magic: bytes, path) -> np.ndarray:
    if len(raw) < _HEADER.size:
        raise FormatError(
            f"{path}: truncated header, need {_HEADER.size} bytes, got {len(raw)}"
        )
    got_magic, d, t = _HEADER.unpack_from(raw, 0)
    if got_magic != magic:
        raise FormatError(
            f"{path}: bad magic {got_magic!r} at byte offset 0, expected {magic!r}"
        )
    if t < 1 or d < 1:
        raise FormatError(
            f"{path}: dimensions must be >= 1, got D={d} (offset 4), T={t} (offset 8)"
        )
    expected = _HEADER.size + 4 * t * d
    if len(raw) < expected:
        raise FormatError(
            f"{path}: truncated payload at byte offset {len(raw)}, "
            f"expected {expected} bytes total"
        )
    if len(raw) > expected:
        raise FormatError(
            f"{path}: {len(raw) - expected} trailing bytes at offset {expected}"
        )
    values = np.frombuffer(raw, dtype="<f4", count=t * d, offset=_HEADER.size)
    finite = np.isfinite(values)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise FormatError(
            f"{path}: non-finite value at byte offset {_HEADER.size + 4 * bad}"
        )
    return values.astype(np.float64).reshape(t, d)


def write_feature_file(seq: FrameFeatureSequence, path) -> None:
    """Serialize *seq* to *path* in the FSEQ layout."""
    data = _encode_matrix(seq.frames, FSEQ_MAGIC)
    with open(path, "wb") as fh:
        fh.write(data)


def read_feature_file(path, frame_rate_hz: float = 1.0) -> FrameFeatureSequence:
    """Read an FSEQ file back into a float64 :class:`FrameFeatureSequence`.

    The container does not carry a frame rate; pass the manifest's value
    via *frame_rate_hz* (defaults to 1 Hz).
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    frames = _decode_matrix(raw, FSEQ_MAGIC, path)
    return FrameFeatureSequence(frames=frames, frame_rate_hz=frame_rate_hz)


def write_attribution_file(scores: np.ndarray, path) -> None:
    """Dump a signed ``S x D'`` attribution score matrix (magic "ATTR")."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError(f"scores must be 2-D, got ndim={scores.ndim}")
    with open(path, "wb") as fh:
        fh.write(_encode_matrix(scores, ATTR_MAGIC))


def read_attribution_file(path) -> np.ndarray:
    """Read an "ATTR" score dump back as a float64 matrix."""
    with open(path, "rb") as fh:
        raw = fh.read()
    return _decode_matrix(raw, ATTR_MAGIC, path)
