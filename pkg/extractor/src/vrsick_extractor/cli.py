"""Command line: VR gameplay video to FSEQ embeddings plus dataset manifest.

    vrsick-extract --video clip.avi --labels labels.csv --rate 1 \
        --resize 224 224 --out data/

Writes ``<session>.fseq`` and creates or updates ``manifest.json`` in
``--out``, in exactly the container and manifest schema the downstream
training pipeline reads (its ``validate`` command accepts the output
directory as-is). Reruns with identical inputs produce identical bytes.

Exit codes: 0 on success, 1 for problems the operator can fix (bad
flags, undecodable video, misaligned labels), 2 for unexpected runtime
failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import FrameSamplingConfig
from .errors import ExtractorError
from .fseq import read_header
from .session import MANIFEST_NAME, build_session, parse_label_csv, update_manifest
from .video import probe_video


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ExtractorError (exit code 1)."""

    def error(self, message):
        raise ExtractorError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="vrsick-extract", description=__doc__.split("\n\n")[0])
    parser.add_argument(
        "--version", action="version", version=f"vrsick-extract {__version__}"
    )
    parser.add_argument("--video", required=True, help="path to a decodable video clip")
    parser.add_argument(
        "--labels",
        help="CSV of 'minute,fms' integer pairs (header line optional); "
        "omit for an unlabeled session",
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--rate", type=float, default=1.0,
        help="sampling rate in frames per second of video (default 1)",
    )
    parser.add_argument(
        "--resize", type=int, nargs=2, metavar=("W", "H"), default=(224, 224),
        help="frame size fed to the backbone (default 224 224)",
    )
    parser.add_argument(
        "--backbone", default="inception_v3",
        help="feature backbone identifier (default inception_v3)",
    )
    parser.add_argument(
        "--weights", default="pretrained",
        help="'pretrained' for the published ImageNet checkpoint, or "
        "'seeded:<int>' for deterministic offline weights (default pretrained)",
    )
    parser.add_argument(
        "--dim", type=int, default=2048,
        help="expected backbone output width (default 2048)",
    )
    parser.add_argument(
        "--session-id", help="manifest session id (default: the video file stem)"
    )
    return parser


def _run(args) -> int:
    config = FrameSamplingConfig(
        rate_hz=args.rate,
        resize=tuple(args.resize),
        backbone=args.backbone,
        weights=args.weights,
        output_dim=args.dim,
    )
    labels = parse_label_csv(args.labels) if args.labels else []

    info = probe_video(args.video)
    print(
        f"video: {args.video} ({info.frame_count} frames at "
        f"{info.fps:g} fps, {info.duration_s:g} s)"
    )

    out_dir = Path(args.out)
    entry = build_session(
        args.video, labels, config, out_dir, session_id=args.session_id
    )
    doc = update_manifest(out_dir, entry, config)

    cols, rows = read_header(out_dir / entry["feature_file"])
    width, height = config.resize
    print(
        f"sampled: {rows} frames at {config.rate_hz:g} Hz, "
        f"resized to {width}x{height}"
    )
    print(f"wrote {out_dir / entry['feature_file']} ({rows} x {cols})")
    print(
        f"manifest: {out_dir / MANIFEST_NAME} ({len(doc['sessions'])} session(s), "
        f"{len(entry['labels'])} label(s) this session)"
    )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        return _run(parser.parse_args(argv))
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
