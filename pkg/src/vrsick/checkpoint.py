"""Model checkpoints: a binary tensor blob plus a JSON metadata sidecar.

Binary layout (little-endian), extension ``.ssm``::

    bytes 0..3    magic "SSM1"
    bytes 4..15   uint32 input_dim, hidden_size, class_count
    bytes 16..    every parameter tensor, canonical order, raw float64

Tensor shapes are implied by the three header dims, so the expected byte
size is exact and any truncation or surplus is detected. The sidecar
(same path + ".json") records what the binary cannot: dropout rate, the
temporal-reduction settings the model was trained with, and free-form
training metadata. Both files are written deterministically.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError
from .model import ModelParams, param_key_order, param_shapes
from .reduce import ReductionConfig

CKPT_MAGIC = b"SSM1"
_HEADER = struct.Struct("<4sIII")


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def save_checkpoint(
    path,
    model: ModelParams,
    reduction: ReductionConfig,
    meta: dict | None = None,
) -> None:
    """Write ``path`` (binary tensors) and ``path + ".json"`` (metadata)."""
    path = Path(path)
    chunks = [_HEADER.pack(CKPT_MAGIC, model.input_dim, model.hidden_size, model.class_count)]
    for key in param_key_order():
        chunks.append(np.ascontiguousarray(model.tensors[key], dtype="<f8").tobytes())
    path.write_bytes(b"".join(chunks))

    doc = {
        "input_dim": model.input_dim,
        "hidden_size": model.hidden_size,
        "class_count": model.class_count,
        "dropout_rate": model.dropout_rate,
        "reduce": {"mode": reduction.mode, "k": reduction.k},
        "meta": meta or {},
    }
    sidecar_path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_checkpoint(path) -> tuple[ModelParams, ReductionConfig, dict]:
    """Read a checkpoint pair back into ``(model, reduction, meta)``."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise FormatError(
            f"{path}: file is {len(blob)} bytes, shorter than the "
            f"{_HEADER.size}-byte header"
        )
    magic, input_dim, hidden_size, class_count = _HEADER.unpack_from(blob, 0)
    if magic != CKPT_MAGIC:
        raise FormatError(
            f"{path}: bad magic at byte 0: expected {CKPT_MAGIC!r}, got {magic!r}"
        )
    if min(input_dim, hidden_size) < 1 or class_count < 2:
        raise FormatError(
            f"{path}: implausible header dims "
            f"({input_dim}, {hidden_size}, {class_count})"
        )

    shapes = param_shapes(input_dim, hidden_size, class_count)
    expected = _HEADER.size + 8 * sum(
        int(np.prod(shapes[k])) for k in param_key_order()
    )
    if len(blob) != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes for header dims "
            f"({input_dim}, {hidden_size}, {class_count}), got {len(blob)}"
        )

    tensors: dict[str, np.ndarray] = {}
    offset = _HEADER.size
    for key in param_key_order():
        shape = shapes[key]
        count = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        tensors[key] = arr.astype(np.float64).reshape(shape)
        offset += 8 * count
    if not all(np.isfinite(t).all() for t in tensors.values()):
        raise FormatError(f"{path}: checkpoint contains non-finite values")

    side = sidecar_path(path)
    if not side.exists():
        raise FormatError(f"{path}: metadata sidecar {side} is missing")
    try:
        doc = json.loads(side.read_text())
        dropout_rate = float(doc["dropout_rate"])
        reduction = ReductionConfig(
            mode=str(doc["reduce"]["mode"]), k=int(doc["reduce"]["k"])
        )
        meta = dict(doc.get("meta", {}))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, ConfigError) as exc:
        raise FormatError(f"{side}: malformed checkpoint sidecar: {exc}") from exc

    model = ModelParams(
        tensors=tensors,
        input_dim=int(input_dim),
        hidden_size=int(hidden_size),
        class_count=int(class_count),
        dropout_rate=dropout_rate,
    )
    return model, reduction, meta
