"""Command-line surface: train a model, evaluate a checkpoint.

Exit codes: 0 success, 2 file or data error; argparse handles usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import evaluate as evaluate_mod
from .data import WaypointDataset, read_rows, row_id
from .model import ModelConfig
from .train import TrainConfig, load_checkpoint, train


def cmd_train(args) -> int:
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch, seed=args.seed)
    result = train(args.data, args.out, ModelConfig(), cfg)
    last = result.epoch_log[-1]
    print(
        f"trained {cfg.epochs} epochs, final loss {last['total']:.4f} "
        f"-> {result.checkpoint_path}"
    )
    return 0


def cmd_eval(args) -> int:
    model, _, _ = load_checkpoint(args.ckpt)
    data = WaypointDataset.from_file(args.data, split=args.split)
    records = evaluate_mod.predict(model, data)
    if args.pred:
        evaluate_mod.write_predictions(args.pred, records)
    truths = {row_id(row): row for row in read_rows(args.data)}
    matched = [truths[record["id"]] for record in records]
    report = evaluate_mod.evaluate_records(records, matched)
    text = evaluate_mod.metrics_to_json(report)
    if args.metrics:
        Path(args.metrics).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="oconnet", description="neural inverse design for overconstrained linkages"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a model on a normalized dataset")
    p_train.add_argument("--data", required=True, help="normalized dataset JSONL")
    p_train.add_argument("--out", required=True, help="checkpoint output path")
    p_train.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p_train.add_argument("--batch", type=int, default=TrainConfig.batch_size)
    p_train.add_argument("--seed", type=int, default=TrainConfig.seed)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a checkpoint on a dataset split")
    p_eval.add_argument("--ckpt", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--split", choices=("train", "val", "all"), default="val")
    p_eval.add_argument("--pred", help="write prediction JSONL here")
    p_eval.add_argument("--metrics", help="write the metrics JSON here")
    p_eval.set_defaults(func=cmd_eval)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError) as error:
        print(f"oconnet {args.command}: {error}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
