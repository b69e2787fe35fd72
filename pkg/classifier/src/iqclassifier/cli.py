"""Command-line interface: train a classifier on an exported IQ dataset and
evaluate it on the held-out frames.

    iqclassify train    --manifest ds/manifest.json --out run/
    iqclassify evaluate --model run/model.pt --out run/

Evaluation re-derives the held-out split from the seed stored in the model
file, writes the confusion CSV (true,pred,count,row_pct), the predicted-label
CSV (frame_index,true_alpha,pred_alpha) and a confusion-matrix figure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def cmd_train(args):
    from .train import TrainConfig, train

    cfg = TrainConfig(
        manifest_path=args.manifest,
        out_dir=args.out,
        train_fraction=args.train_fraction,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        filters=args.filters,
        kernel=args.kernel,
        patience=args.patience,
        min_epochs=args.min_epochs,
    )
    result = train(cfg)
    print(
        f"trained {result.model_path} "
        f"(best validation accuracy {result.best_val_accuracy:.3f}, "
        f"{len(result.history)} epochs)"
    )
    return 0


def cmd_evaluate(args):
    from .data import load_dataset, split_indices
    from .evaluate import (
        evaluate,
        save_confusion_figure,
        write_confusion_csv,
        write_predictions_csv,
    )
    from .model import load_model

    model, extra = load_model(args.model)
    manifest = args.manifest or extra.get("manifest_path")
    if manifest is None:
        raise ValueError("no manifest path stored in model; pass --manifest")
    dataset = load_dataset(manifest)
    _, test_idx = split_indices(
        dataset, extra.get("train_fraction", 0.8), extra.get("seed", 0)
    )
    cm, rows = evaluate(model, dataset, test_idx)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_confusion_csv(cm, out / "confusion.csv")
    write_predictions_csv(rows, out / "predictions.csv")
    if not args.no_figures:
        save_confusion_figure(
            cm, out / "confusion.png",
            title=f"overall accuracy {100 * cm.overall_accuracy:.1f}%",
        )
    summary = {
        "overall_accuracy": cm.overall_accuracy,
        "per_class_accuracy": {
            f"{a:g}": acc for a, acc in zip(cm.class_alphas, cm.per_class_accuracy)
        },
        "test_frames": int(cm.counts.sum()),
    }
    (out / "evaluation.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"overall accuracy {cm.overall_accuracy:.3f} on {int(cm.counts.sum())} frames")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="iqclassify",
        description="bandwidth-compression-factor classifier for captured IQ frames",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on an exported dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default="run")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--filters", type=int, default=32)
    p.add_argument("--kernel", type=int, default=8)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--min-epochs", type=int, default=8)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="confusion matrix + predicted labels")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--out", default="run")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
