"""Session assembly: video plus minute labels become FSEQ + manifest entry.

The manifest schema mirrors what the training pipeline reads:

    {
      "feature_dim": 2048,
      "binning": {"edges": [2, 4, 7]},
      "sessions": [
        {"session_id": "...", "feature_file": "....fseq",
         "frame_rate_hz": 1.0,
         "labels": [{"minute_index": 0, "fms": 3}, ...]}
      ]
    }

Minute ``m`` of a session owns embedding rows
``[ceil(m*60*rate), ceil((m+1)*60*rate))``. A label is accepted whenever
its minute owns at least one sampled row (the consumer truncates a
partially covered final minute the same way); a minute that starts at or
beyond the last row is an alignment error. The extra top-level
``provenance`` object records how the embeddings were produced and is
ignored by the consumer.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from pathlib import Path

from . import __version__
from .backbone import PREPROCESS_SPEC, extract_features
from .config import FrameSamplingConfig
from .errors import AlignmentError, ExtractionError, ExtractionWarning
from .fseq import write_feature_file
from .video import sample_frames

FMS_MIN, FMS_MAX = 1, 10
DEFAULT_EDGES = (2, 4, 7)
MANIFEST_NAME = "manifest.json"


def minute_frame_slice(minute_index: int, rate_hz: float) -> tuple[int, int]:
    """Half-open row interval ``[start, end)`` owned by a labeled minute."""
    start = math.ceil(minute_index * 60 * rate_hz)
    end = math.ceil((minute_index + 1) * 60 * rate_hz)
    return start, end


def validate_labels(fms_labels) -> list[tuple[int, int]]:
    """Check (minute_index, fms) pairs; returns them as plain int tuples."""
    seen = set()
    labels = []
    for i, pair in enumerate(fms_labels):
        try:
            minute, fms = pair
        except (TypeError, ValueError):
            raise ExtractionError(
                f"label #{i} must be a (minute_index, fms) pair, got {pair!r}"
            ) from None
        if isinstance(minute, bool) or not isinstance(minute, int) or minute < 0:
            raise ExtractionError(
                f"label #{i}: minute_index must be a non-negative int, got {minute!r}"
            )
        if isinstance(fms, bool) or not isinstance(fms, int):
            raise ExtractionError(f"label #{i}: fms must be an int, got {fms!r}")
        if not (FMS_MIN <= fms <= FMS_MAX):
            raise ExtractionError(
                f"label #{i}: fms must be in {FMS_MIN}..{FMS_MAX}, got {fms}"
            )
        if minute in seen:
            raise ExtractionError(f"label #{i}: duplicate minute_index {minute}")
        seen.add(minute)
        labels.append((minute, fms))
    return labels


def parse_label_csv(path) -> list[tuple[int, int]]:
    """Read ``minute,fms`` integer pairs from a CSV file.

    A single header line ``minute,fms`` is allowed and skipped; blank
    lines are ignored. Value validation happens in :func:`build_session`.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ExtractionError(f"cannot read labels file {path}: {exc}") from exc
    labels = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        cells = [cell.strip() for cell in line.split(",")]
        if cells == ["minute", "fms"] and not labels and lineno == 1:
            continue
        try:
            minute, fms = (int(cell) for cell in cells)
        except ValueError:
            raise ExtractionError(
                f"{path}: line {lineno}: expected 'minute,fms' integers, got {line!r}"
            ) from None
        labels.append((minute, fms))
    return labels


def _session_id_from(video_path: Path) -> str:
    cleaned = re.sub(r"[^A-Za-z0-9._-]+", "-", video_path.stem).strip("-.")
    return cleaned or "session"


def build_session(video_path, fms_labels, config: FrameSamplingConfig,
                  out_dir, session_id: str | None = None) -> dict:
    """Extract one clip to ``<out_dir>/<session_id>.fseq`` + manifest entry.

    Returns the session entry dict (``session_id``, ``feature_file``,
    ``frame_rate_hz``, ``labels``) ready for :func:`update_manifest`.
    Raises :class:`AlignmentError` when a label's minute owns no sampled
    rows, and warns :class:`ExtractionWarning` when there are no labels
    at all (features are still written).
    """
    video_path = Path(video_path)
    labels = validate_labels(fms_labels)
    if session_id is None:
        session_id = _session_id_from(video_path)

    sampled = sample_frames(video_path, config)
    total_rows = len(sampled)
    if total_rows < 1:
        raise ExtractionError(
            f"{video_path}: sampling at {config.rate_hz:g} Hz yields zero frames"
        )
    for minute, _ in labels:
        start, _end = minute_frame_slice(minute, config.rate_hz)
        if start >= total_rows:
            raise AlignmentError(
                f"label at minute {minute} is beyond the clip: first owned "
                f"row {start}, only {total_rows} rows at {config.rate_hz:g} Hz"
            )
    if not labels:
        warnings.warn(
            f"session {session_id!r} has zero labels; features are written "
            "but produce no training samples",
            ExtractionWarning,
            stacklevel=2,
        )

    features = extract_features(sampled, config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    feature_file = f"{session_id}.fseq"
    write_feature_file(features, out_dir / feature_file)

    return {
        "session_id": session_id,
        "feature_file": feature_file,
        "frame_rate_hz": float(config.rate_hz),
        "labels": [{"minute_index": m, "fms": f} for m, f in labels],
    }


def _provenance(config: FrameSamplingConfig) -> dict:
    width, height = config.resize
    return {
        "extractor": f"vrsick-extractor {__version__}",
        "backbone": config.backbone,
        "weights": config.weights,
        "resize": [width, height],
        "preprocessing": PREPROCESS_SPEC,
    }


def update_manifest(out_dir, entry: dict, config: FrameSamplingConfig) -> dict:
    """Create or update ``<out_dir>/manifest.json`` with *entry*.

    A session with the same id replaces its previous entry (reruns are
    idempotent); new ids append. Returns the full manifest document.
    """
    path = Path(out_dir) / MANIFEST_NAME
    if path.exists():
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ExtractionError(f"cannot update manifest {path}: {exc}") from exc
        if doc.get("feature_dim") != config.output_dim:
            raise ExtractionError(
                f"manifest {path} has feature_dim {doc.get('feature_dim')}, "
                f"config output_dim is {config.output_dim}"
            )
        if not isinstance(doc.get("sessions"), list):
            raise ExtractionError(f"manifest {path} has no 'sessions' list")
    else:
        doc = {
            "feature_dim": config.output_dim,
            "binning": {"edges": list(DEFAULT_EDGES)},
            "sessions": [],
        }

    doc["provenance"] = _provenance(config)
    sessions = doc["sessions"]
    for i, existing in enumerate(sessions):
        if existing.get("session_id") == entry["session_id"]:
            sessions[i] = entry
            break
    else:
        sessions.append(entry)

    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc
