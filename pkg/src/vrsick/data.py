"""Session ingestion: minute-level sickness labels, severity binning, manifests.

A dataset is described by a JSON manifest:

    {
      "feature_dim": 2048,
      "binning": {"edges": [2, 4, 7]},
      "sessions": [
        {"session_id": "s01", "feature_file": "features/s01.fseq",
         "frame_rate_hz": 1.0,
         "labels": [{"minute_index": 0, "fms": 3}, ...]}
      ]
    }

Relative ``feature_file`` paths resolve against the manifest's directory.
Each labeled minute becomes one training sample: the label at minute ``m``
owns the frames recorded during ``[m*60, (m+1)*60)`` seconds, i.e. rows
``[m*60*rate, (m+1)*60*rate)`` of the feature matrix.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .fseq import FrameFeatureSequence, read_feature_file

FMS_MIN = 1
FMS_MAX = 10

#: Default 4-class severity bands: {1}, {2-3}, {4-6}, {7-10}.
DEFAULT_EDGES = (2, 4, 7)


@dataclass(frozen=True)
class FmsLabel:
    """One per-minute sickness rating on the 1..10 scale."""

    minute_index: int
    fms: int

    def __post_init__(self):
        if self.minute_index < 0:
            raise DataError(f"minute_index must be >= 0, got {self.minute_index}")
        if not FMS_MIN <= self.fms <= FMS_MAX:
            raise DataError(
                f"fms must be in [{FMS_MIN}, {FMS_MAX}], got {self.fms}"
            )


@dataclass(frozen=True)
class BinningScheme:
    """Partition of the 1..10 sickness scale into contiguous severity classes.

    ``edges`` are the lower bounds of classes ``1..C-1``; class 0 implicitly
    starts at 1. For example ``edges=(2, 4, 7)`` induces the four bands
    {1}, {2-3}, {4-6}, {7-10}.
    """

    edges: tuple[int, ...] = DEFAULT_EDGES

    def __post_init__(self):
        edges = tuple(int(e) for e in self.edges)
        if len(edges) < 1:
            raise DataError("binning needs at least one edge (two classes)")
        if any(not FMS_MIN < e <= FMS_MAX for e in edges):
            raise DataError(
                f"edges must lie in ({FMS_MIN}, {FMS_MAX}], got {edges}"
            )
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise DataError(f"edges must be strictly ascending, got {edges}")
        object.__setattr__(self, "edges", edges)

    @property
    def class_count(self) -> int:
        return len(self.edges) + 1


def bin_fms(fms: int, scheme: BinningScheme) -> int:
    """Map a sickness score to its severity class index.

    Total and monotone non-decreasing over 1..10; class 0 always contains
    score 1 and class ``C-1`` always contains score 10.
    """
    if not FMS_MIN <= fms <= FMS_MAX:
        raise DataError(f"fms must be in [{FMS_MIN}, {FMS_MAX}], got {fms}")
    return bisect_right(scheme.edges, fms)


def minute_frame_slice(minute_index: int, frame_rate_hz: float) -> tuple[int, int]:
    """Half-open row interval ``[start, end)`` owned by a labeled minute."""
    start = math.ceil(minute_index * 60.0 * frame_rate_hz)
    end = math.ceil((minute_index + 1) * 60.0 * frame_rate_hz)
    return start, end


@dataclass
class SessionRecord:
    """A fully loaded session: features plus its minute-level labels."""

    session_id: str
    features: FrameFeatureSequence
    labels: list[FmsLabel]
    participant_id: str | None = None

    def __post_init__(self):
        minutes = [l.minute_index for l in self.labels]
        if sorted(set(minutes)) != minutes:
            raise DataError(
                f"session {self.session_id!r}: labels must be sorted by "
                f"minute_index with no duplicates"
            )
        t = self.features.frame_count
        for label in self.labels:
            start, _ = minute_frame_slice(label.minute_index, self.features.frame_rate_hz)
            if start >= t:
                raise DataError(
                    f"session {self.session_id!r}: minute {label.minute_index} "
                    f"has no frames (first owned row {start}, only {t} rows)"
                )


@dataclass(frozen=True)
class SessionEntry:
    """Manifest-side reference to a session's feature file and labels."""

    session_id: str
    feature_file: str
    frame_rate_hz: float
    labels: tuple[FmsLabel, ...]
    participant_id: str | None = None


@dataclass(frozen=True)
class DatasetManifest:
    feature_dim: int
    binning: BinningScheme
    sessions: tuple[SessionEntry, ...]


@dataclass(frozen=True)
class Sample:
    """One labeled classification sample: a minute's frames plus its class."""

    name: str
    session_id: str
    minute_index: int
    fms: int
    class_index: int
    frames: np.ndarray  # rows owned by this minute, float64


@dataclass
class LabeledDataset:
    """Materialized (features, severity class) pairs, immutable after load."""

    samples: list[Sample]
    feature_dim: int
    binning: BinningScheme

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def class_count(self) -> int:
        return self.binning.class_count

    def labels(self) -> np.ndarray:
        return np.array([s.class_index for s in self.samples], dtype=np.int64)


def _parse_labels(raw, where: str) -> tuple[FmsLabel, ...]:
    if not isinstance(raw, list):
        raise DataError(f"{where}: 'labels' must be a list")
    labels = []
    for i, item in enumerate(raw):
        try:
            labels.append(FmsLabel(int(item["minute_index"]), int(item["fms"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{where}: label #{i} is malformed: {exc}") from exc
    return tuple(labels)


def read_manifest(path) -> DatasetManifest:
    """Parse and validate a manifest JSON document (does not touch files)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest {path} is not valid JSON: {exc}") from exc

    try:
        feature_dim = int(doc["feature_dim"])
        edges = doc["binning"]["edges"]
        raw_sessions = doc["sessions"]
    except (KeyError, TypeError) as exc:
        raise DataError(f"manifest {path}: missing required key: {exc}") from exc
    if feature_dim < 1:
        raise DataError(f"manifest {path}: feature_dim must be >= 1")

    sessions = []
    for i, raw in enumerate(raw_sessions):
        where = f"manifest {path}: session #{i}"
        try:
            entry = SessionEntry(
                session_id=str(raw["session_id"]),
                feature_file=str(raw["feature_file"]),
                frame_rate_hz=float(raw["frame_rate_hz"]),
                labels=_parse_labels(raw["labels"], where),
                participant_id=raw.get("participant_id"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{where}: {exc}") from exc
        if entry.frame_rate_hz <= 0:
            raise DataError(f"{where}: frame_rate_hz must be positive")
        sessions.append(entry)

    return DatasetManifest(
        feature_dim=feature_dim,
        binning=BinningScheme(tuple(edges)),
        sessions=tuple(sessions),
    )


def write_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "feature_dim": manifest.feature_dim,
        "binning": {"edges": list(manifest.binning.edges)},
        "sessions": [
            {
                "session_id": s.session_id,
                "feature_file": s.feature_file,
                "frame_rate_hz": s.frame_rate_hz,
                "labels": [
                    {"minute_index": l.minute_index, "fms": l.fms} for l in s.labels
                ],
                **({"participant_id": s.participant_id} if s.participant_id else {}),
            }
            for s in manifest.sessions
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_session(entry: SessionEntry, base_dir: Path, feature_dim: int) -> SessionRecord:
    feature_path = Path(entry.feature_file)
    if not feature_path.is_absolute():
        feature_path = base_dir / feature_path
    if not feature_path.exists():
        raise DataError(
            f"session {entry.session_id!r}: feature file {feature_path} does not exist"
        )
    features = read_feature_file(feature_path, frame_rate_hz=entry.frame_rate_hz)
    if features.feature_dim != feature_dim:
        raise DataError(
            f"session {entry.session_id!r}: feature dim {features.feature_dim} "
            f"does not match manifest feature_dim {feature_dim}"
        )
    return SessionRecord(
        session_id=entry.session_id,
        features=features,
        labels=list(entry.labels),
        participant_id=entry.participant_id,
    )


def load_manifest(path) -> tuple[DatasetManifest, LabeledDataset]:
    """Load a manifest and materialize one sample per labeled minute.

    The sample count equals the total label count across sessions. Raises
    :class:`DataError` on missing files, feature-dim mismatches, or labeled
    minutes that own no frames.
    """
    manifest = read_manifest(path)
    base_dir = Path(path).resolve().parent

    samples: list[Sample] = []
    for entry in manifest.sessions:
        record = load_session(entry, base_dir, manifest.feature_dim)
        frames = record.features.frames
        for label in record.labels:
            start, end = minute_frame_slice(label.minute_index, entry.frame_rate_hz)
            rows = frames[start : min(end, frames.shape[0])]
            samples.append(
                Sample(
                    name=f"{entry.session_id}:m{label.minute_index}",
                    session_id=entry.session_id,
                    minute_index=label.minute_index,
                    fms=label.fms,
                    class_index=bin_fms(label.fms, manifest.binning),
                    frames=rows,
                )
            )

    dataset = LabeledDataset(
        samples=samples,
        feature_dim=manifest.feature_dim,
        binning=manifest.binning,
    )
    return manifest, dataset


def dataset_stats(dataset: LabeledDataset) -> dict:
    """Summary statistics used by the ``validate`` command."""
    counts = np.bincount(dataset.labels(), minlength=dataset.class_count)
    frame_counts = [s.frames.shape[0] for s in dataset.samples]
    return {
        "samples": len(dataset),
        "sessions": len({s.session_id for s in dataset.samples}),
        "feature_dim": dataset.feature_dim,
        "class_count": dataset.class_count,
        "class_histogram": counts.tolist(),
        "frames_per_sample_min": min(frame_counts) if frame_counts else 0,
        "frames_per_sample_max": max(frame_counts) if frame_counts else 0,
    }
