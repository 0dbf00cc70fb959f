"""Command-line interface.

Commands::

    vrsick synth        generate a labeled synthetic dataset
    vrsick validate     check a manifest and print dataset statistics
    vrsick train        stratified k-fold training, writes checkpoints + reports
    vrsick eval         score a saved checkpoint on (a subset of) a dataset
    vrsick attribute    per-sample input attributions and importance curves
    vrsick export-plot  reshape metrics/importance CSVs into plot-ready tables

Exit codes: 0 on success, 1 for validation problems the operator can fix
(bad flags, malformed files, impossible configurations), 2 for unexpected
runtime failures.

Every artifact a command writes is deterministic: rerunning with the same
arguments and inputs reproduces identical bytes. Progress text on stdout
is informational only.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .attribution import (
    AttributionConfig,
    attribute_sample,
    completeness_gap,
    mean_importance,
    temporal_importance,
    write_importance_csv,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .data import dataset_stats, load_manifest
from .errors import ConfigError, VrsickError
from .fseq import write_attribution_file
from .reduce import ReductionConfig
from .synthetic import SyntheticSpec, generate_synthetic, template_accuracy
from .train import (
    TrainConfig,
    evaluate,
    prepare_inputs,
    resolved_config,
    run_cross_validation,
    write_metrics_csv,
    write_report_json,
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 1)."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="vrsick", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"vrsick {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sessions", type=int, default=40, help="session count (default 40)")
    p.add_argument("--frames", type=int, default=60, help="frames per session (default 60)")
    p.add_argument("--dim", type=int, default=32, help="feature dimension (default 32)")
    p.add_argument("--classes", type=int, default=4, help="severity classes (default 4)")
    p.add_argument("--motif-strength", type=float, default=5.0,
                   help="additive motif amplitude; 0 removes all class signal (default 5)")
    p.add_argument("--noise-sigma", type=float, default=1.0,
                   help="Gaussian noise scale (default 1)")
    p.add_argument("--seed", type=int, default=0, help="generation seed (default 0)")

    p = sub.add_parser("validate", help="check a dataset manifest")
    p.add_argument("--data", required=True, help="path to manifest.json")

    p = sub.add_parser("train", help="stratified k-fold training")
    p.add_argument("--data", required=True, help="path to manifest.json")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON config file; explicit flags override it")
    p.add_argument("--folds", type=int, help="cross-validation folds (default 5)")
    p.add_argument("--epochs", type=int, help="max epochs per fold (default 50)")
    p.add_argument("--batch-size", type=int, help="mini-batch size (default 32)")
    p.add_argument("--learning-rate", type=float, help="Adam step size (default 0.001)")
    p.add_argument("--patience", type=int,
                   help="epochs without validation improvement before stopping (default 5)")
    p.add_argument("--validation-fraction", type=float,
                   help="per-class share of non-test data held out (default 0.1)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--class-count", type=int, help="severity classes (default 4)")
    p.add_argument("--hidden-size", type=int, help="LSTM units per layer (default 100)")
    p.add_argument("--dropout-rate", type=float, help="dropout rate (default 0.2)")
    p.add_argument("--reduce-mode", choices=["max_pool", "concat"],
                   help="temporal reduction (default concat)")
    p.add_argument("--reduce-k", type=int, help="frames per reduced step (default 5)")
    p.add_argument("--clip-norm", type=float, help="global gradient-norm cap (default off)")
    p.add_argument("--jobs", type=int,
                   help="parallel fold workers; never changes results (default 1)")

    p = sub.add_parser("eval", help="score a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True, help="path to a .ssm checkpoint")
    p.add_argument("--data", required=True, help="path to manifest.json")
    p.add_argument("--ids", help="comma-separated sample indices (default: all)")
    p.add_argument("--out", help="also write the report JSON here")

    p = sub.add_parser("attribute", help="input attributions for selected samples")
    p.add_argument("--checkpoint", required=True, help="path to a .ssm checkpoint")
    p.add_argument("--data", required=True, help="path to manifest.json")
    p.add_argument("--ids", required=True, help="comma-separated sample indices")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--method", choices=["integrated", "standard"], default="integrated",
                   help="attribution method (default integrated)")
    p.add_argument("--target", choices=["logit", "probability"], default="logit",
                   help="scalar the scores explain (default logit)")
    p.add_argument("--target-class", type=int,
                   help="class to explain (default: the predicted class)")
    p.add_argument("--ig-steps", type=int, default=50,
                   help="integration steps (default 50)")
    p.add_argument("--aggregation", choices=["mean_abs", "l2"], default="mean_abs",
                   help="per-step reduction of |scores| (default mean_abs)")
    p.add_argument("--dump-scores", action="store_true",
                   help="also write raw score matrices as binary files")

    p = sub.add_parser("export-plot", help="reshape result CSVs into plot tables")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--metrics", help="metrics.csv from a training run")
    p.add_argument("--importance", nargs="+",
                   help="importance CSVs from the attribute command")

    return parser


def _parse_ids(text: str | None, total: int) -> list[int]:
    if text is None:
        return list(range(total))
    try:
        ids = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"--ids must be comma-separated integers: {exc}") from exc
    if not ids:
        raise ConfigError("--ids resolved to an empty list")
    for i in ids:
        if not 0 <= i < total:
            raise ConfigError(f"sample index {i} out of range (dataset has {total})")
    return ids


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        session_count=args.sessions,
        frames_per_sample=args.frames,
        feature_dim=args.dim,
        class_count=args.classes,
        motif_strength=args.motif_strength,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    _, dataset = generate_synthetic(spec, args.out)
    print(f"wrote {len(dataset)} samples across {spec.session_count} sessions")
    print(f"template-matcher accuracy: {template_accuracy(dataset):.4f}")
    print(f"manifest: {Path(args.out) / 'manifest.json'}")
    return 0


def cmd_validate(args) -> int:
    _, dataset = load_manifest(args.data)
    stats = dataset_stats(dataset)
    print(f"manifest: {args.data}")
    for key in ("samples", "sessions", "feature_dim", "class_count"):
        print(f"{key}: {stats[key]}")
    print(f"class_histogram: {stats['class_histogram']}")
    print(
        f"frames_per_sample: {stats['frames_per_sample_min']}"
        f"..{stats['frames_per_sample_max']}"
    )
    print("ok")
    return 0


def _load_train_config(args) -> TrainConfig:
    base = TrainConfig()
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config {args.config} must be a JSON object")
        merged = base.to_flat_dict()
        merged.update(doc)
        base = TrainConfig.from_flat_dict(merged)
    overrides = {
        "folds": args.folds,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
        "patience": args.patience,
        "validation_fraction": args.validation_fraction,
        "seed": args.seed,
        "class_count": args.class_count,
        "hidden_size": args.hidden_size,
        "dropout_rate": args.dropout_rate,
        "reduce.mode": args.reduce_mode,
        "reduce.k": args.reduce_k,
        "clip_norm": args.clip_norm,
        "jobs": args.jobs,
    }
    return resolved_config(base, overrides)


def cmd_train(args) -> int:
    config = _load_train_config(args)
    _, dataset = load_manifest(args.data)
    if dataset.class_count != config.class_count:
        raise ConfigError(
            f"manifest binning defines {dataset.class_count} classes but the "
            f"training config expects {config.class_count}; pass --class-count "
            f"{dataset.class_count} or change the manifest binning"
        )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_doc = {
        "command": "train",
        "config": config.to_flat_dict(),
        "data": str(args.data),
        "package_version": __version__,
    }
    (out / "run_manifest.json").write_text(
        json.dumps(run_doc, indent=2, sort_keys=True) + "\n"
    )

    result = run_cross_validation(dataset, config)
    write_report_json(result, out / "report.json")
    write_metrics_csv(result, out / "metrics.csv")
    for fold in result.folds:
        save_checkpoint(
            out / f"fold{fold.fold_index}.ssm",
            fold.model,
            config.reduction,
            meta={
                "fold_index": fold.fold_index,
                "best_epoch": fold.best_epoch,
                "seed": config.seed,
            },
        )
        print(
            f"fold {fold.fold_index}: test_accuracy={fold.test_accuracy:.4f} "
            f"test_loss={fold.test_loss:.4f} best_epoch={fold.best_epoch}"
        )
    print(
        f"mean: test_accuracy={result.mean_accuracy:.4f} "
        f"test_loss={result.mean_loss:.4f}"
    )
    print(f"wrote {out / 'report.json'}")
    return 0


def cmd_eval(args) -> int:
    model, reduction, _ = load_checkpoint(args.checkpoint)
    _, dataset = load_manifest(args.data)
    ids = _parse_ids(args.ids, len(dataset))
    report = evaluate(model, ids, dataset, reduction)
    print(f"samples: {report.sample_count}")
    print(f"accuracy: {report.test_accuracy:.4f}")
    print(f"loss: {report.test_loss:.4f}")
    print("confusion (rows true, cols predicted):")
    for row in report.confusion_matrix.tolist():
        print(f"  {row}")
    if args.out:
        doc = {
            "accuracy": report.test_accuracy,
            "loss": report.test_loss,
            "confusion_matrix": report.confusion_matrix.tolist(),
            "sample_count": report.sample_count,
        }
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_attribute(args) -> int:
    model, reduction, _ = load_checkpoint(args.checkpoint)
    _, dataset = load_manifest(args.data)
    ids = _parse_ids(args.ids, len(dataset))
    config = AttributionConfig(
        method=args.method,
        target=args.target,
        target_class=args.target_class,
        ig_steps=args.ig_steps,
        aggregation=args.aggregation,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs = prepare_inputs(dataset, ids, reduction)

    curves = []
    for i in ids:
        x = inputs[i]
        attr = attribute_sample(model, x, config)
        curve = temporal_importance(attr.scores, config.aggregation)
        curves.append(curve)
        write_importance_csv(out / f"importance_{i}.csv", curve)
        if args.dump_scores:
            write_attribution_file(attr.scores, out / f"scores_{i}.attr")
        line = (
            f"sample {i} ({dataset.samples[i].name}): class={attr.target_class} "
            f"target={attr.target} sum={attr.scores.sum():.6f}"
        )
        if attr.method == "integrated":
            gap = completeness_gap(model, x, attr)
            line += f" completeness_gap={gap:.6e}"
        print(line)

    mean_curve = mean_importance(curves)
    write_importance_csv(out / "importance_mean.csv", mean_curve)
    print(f"wrote {len(ids)} importance curves + mean to {out}")
    return 0


def _read_metrics_rows(path) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read metrics file {path}: {exc}") from exc


def _write_wide_curves(rows: list[dict], column: str, path) -> None:
    """Pivot (fold, epoch, column) to one epoch-indexed column per fold."""
    folds = sorted({int(r["fold"]) for r in rows})
    epochs = sorted({int(r["epoch"]) for r in rows})
    cell = {(int(r["fold"]), int(r["epoch"])): r[column] for r in rows}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch"] + [f"fold{f}" for f in folds])
        for e in epochs:
            writer.writerow([e] + [cell.get((f, e), "") for f in folds])


def cmd_export_plot(args) -> int:
    if not args.metrics and not args.importance:
        raise ConfigError("export-plot needs --metrics and/or --importance inputs")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.metrics:
        rows = _read_metrics_rows(args.metrics)
        needed = {"fold", "epoch", "val_loss", "val_acc"}
        if rows and not needed.issubset(rows[0]):
            raise ConfigError(
                f"{args.metrics} is missing columns {sorted(needed - set(rows[0]))}"
            )
        _write_wide_curves(rows, "val_loss", out / "loss_curves.csv")
        _write_wide_curves(rows, "val_acc", out / "accuracy_curves.csv")
        print(f"wrote {out / 'loss_curves.csv'} and {out / 'accuracy_curves.csv'}")
    if args.importance:
        tables = []
        for src in args.importance:
            rows = _read_metrics_rows(src)
            if rows and not {"step", "importance"}.issubset(rows[0]):
                raise ConfigError(f"{src} is not an importance CSV (step,importance)")
            tables.append((Path(src).stem, {int(r["step"]): r["importance"] for r in rows}))
        steps = sorted({s for _, t in tables for s in t})
        with open(out / "importance_table.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step"] + [name for name, _ in tables])
            for s in steps:
                writer.writerow([s] + [t.get(s, "") for _, t in tables])
        print(f"wrote {out / 'importance_table.csv'}")
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "validate": cmd_validate,
    "train": cmd_train,
    "eval": cmd_eval,
    "attribute": cmd_attribute,
    "export-plot": cmd_export_plot,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except VrsickError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
