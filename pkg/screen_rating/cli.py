"""
Command-line entry point.

    python -m screen_rating <command> [flags]

Commands: train, eval, predict, ablate, conv-cost, data-stats,
gen-synthetic, distill-demo. Exit status is 0 on success, 1 for invalid
input or configuration, 2 for runtime failures.
"""

import argparse
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from .ablation import ROW_COLUMNS, get_suite, run_ablation
from .checkpoint import load_checkpoint, save_checkpoint
from .config import DistillWeights, ModelConfig, PRESETS, get_preset, with_overrides
from .conv_cost import ConvCostCalculator, ConvShape, format_table
from .distillation import DistillationDemo
from .errors import ConfigurationError, ContractError, SchemaError, ScreenRatingError
from .history_logger import HistoryLogger, write_json, write_rows
from .image_encoder import ImageEncoder
from .manifest import dataset_stats, load_manifest
from .metrics import format_report_table
from .model import RatingModel, count_parameters
from .synthetic import generate_synthetic
from .trainer import evaluate_checkpoint, predict, resume, train

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

VALIDATION_ERRORS = (ValidationError, ConfigurationError, SchemaError, ContractError)


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", type=Path, help="also write machine-readable results here")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit timestamps so repeated runs give identical files")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", default="desk", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float, help="learning rate")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--activation", help="Swish, Mish, GELU, GoLU, Sigmoid, HSwish or Identity")
    p.add_argument("--loss", choices=["mse", "mae"])
    p.add_argument("--target-scale", choices=["raw", "minmax"])
    p.add_argument("--text-encoder", choices=["transformer", "simple-recurrent"])
    p.add_argument("--workers", type=int, help="threads for image decoding")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="screen_rating",
                     description="Lightweight image + text rating regressor")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true")
    verbosity.add_argument("--quiet", "-q", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model on a manifest")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("runs/train"),
                   help="directory for history.csv and checkpoint.npz")
    p.add_argument("--resume", type=Path, metavar="CHECKPOINT",
                   help="continue this checkpoint to --epochs; other config flags are ignored")
    _add_config_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("eval", help="score a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--split", choices=["train", "val", "test"],
                   help="default: test, else val, else train")
    p.add_argument("--clamp", action="store_true", help="clamp predictions to the rating range")
    _add_output_flags(p)

    p = sub.add_parser("predict", help="write predictions for every manifest row")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("predictions.csv"))
    _add_output_flags(p)

    p = sub.add_parser("ablate", help="run an ablation suite")
    p.add_argument("--suite", default="activations", help="activations, components or dropout")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, help="directory for ablation.csv and per-variant history")
    p.add_argument("--clamp", action="store_true")
    _add_config_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("conv-cost", help="standard vs depthwise separable MACs")
    p.add_argument("--dk", type=int, help="kernel size D_K")
    p.add_argument("--m", type=int, help="input channels M")
    p.add_argument("--n", type=int, help="output channels N")
    p.add_argument("--df", type=int, help="feature map size D_F")
    p.add_argument("--encoder", action="store_true", help="cost table for a preset's encoder")
    p.add_argument("--preset", default="desk", choices=sorted(PRESETS))
    _add_output_flags(p)

    p = sub.add_parser("data-stats", help="category counts and rating histogram")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--schema", choices=["csv", "jsonl"])
    p.add_argument("--seed", type=int, default=0, help="split seed")
    _add_output_flags(p)

    p = sub.add_parser("gen-synthetic", help="write a synthetic rated-screen corpus")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--size", type=int, default=64, help="image size in pixels")
    p.add_argument("--noise", type=float, default=0.0, help="rating noise std")
    _add_output_flags(p)

    p = sub.add_parser("distill-demo", help="toy teacher -> student distillation run")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--out", type=Path, default=Path("runs/distill"),
                   help="directory for distill.csv")
    _add_output_flags(p)
    return parser


def _config_from_args(args) -> ModelConfig:
    cfg = get_preset(args.preset)
    return with_overrides(cfg, seed=args.seed, epochs=args.epochs, learning_rate=args.lr,
                          batch_size=args.batch_size, dropout=args.dropout,
                          activation=args.activation, loss=args.loss,
                          target_scale=args.target_scale, text_encoder=args.text_encoder,
                          workers=args.workers)


def _emit(args, payload: Dict) -> None:
    if args.json is None:
        return
    if not args.no_timestamp:
        payload = dict(payload, generated_at=datetime.now().isoformat())
    write_json(args.json, payload)


# ---------------------------------------------------------------------- #
# Commands
# ---------------------------------------------------------------------- #

def cmd_train(args) -> int:
    if args.resume is not None:
        ckpt = load_checkpoint(args.resume)
        if args.epochs is None:
            raise ConfigurationError("--resume needs --epochs")
        cfg = with_overrides(ckpt.config, epochs=args.epochs)
    else:
        ckpt, cfg = None, _config_from_args(args)
    manifest = load_manifest(args.manifest, seed=cfg.seed)
    history = HistoryLogger(args.out, timestamps=not args.no_timestamp, overwrite=True)
    if ckpt is not None:
        result = resume(ckpt, manifest, cfg.epochs, history)
    else:
        result = train(manifest, cfg, history)
    save_checkpoint(result.checkpoint, args.out / "checkpoint.npz")

    last = result.history[-1]
    print(f"Best epoch {result.best_epoch} of {cfg.epochs}; history in {history.csv_file}")
    rows = [("train (last epoch)", last.train), ("val (last epoch)", last.val)]
    print(format_report_table([(name, r) for name, r in rows if r is not None]))
    _emit(args, {
        "command": "train",
        "config": cfg.model_dump(mode="json"),
        "best_epoch": result.best_epoch,
        "flags": result.flags,
        "parameters": count_parameters(result.model),
        "history": result.history_rows(),
        "load_report": manifest.report.to_dict(),
    })
    return EXIT_OK


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    manifest = load_manifest(args.manifest, seed=ckpt.config.seed)
    split, report = evaluate_checkpoint(ckpt, manifest, args.split, args.clamp)
    print(f"Split: {split}")
    print(format_report_table([(f"epoch {ckpt.epoch}", report)]))
    _emit(args, {"command": "eval", "split": split, "epoch": ckpt.epoch,
                 "metrics": report.to_dict()})
    return EXIT_OK


def cmd_predict(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    manifest = load_manifest(args.manifest, seed=ckpt.config.seed)
    rows = predict(ckpt, manifest)
    write_rows(args.out, rows, ["image_path", "predicted", "displayed"])
    print(f"Wrote {len(rows)} predictions to {args.out}")
    _emit(args, {"command": "predict", "predictions": rows})
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _config_from_args(args)
    suite = get_suite(args.suite)
    manifest = load_manifest(args.manifest, seed=cfg.seed)
    table = run_ablation(suite, manifest, cfg, args.out, args.clamp,
                         timestamps=not args.no_timestamp)
    print(table.render())
    if args.out is not None:
        write_rows(args.out / "ablation.csv", table.as_rows(), list(ROW_COLUMNS))
    _emit(args, {"command": "ablate", "suite": args.suite, "rows": table.as_rows()})
    return EXIT_OK


def cmd_conv_cost(args) -> int:
    calculator = ConvCostCalculator()
    if args.encoder:
        cfg = get_preset(args.preset)
        encoder = ImageEncoder(cfg.image, np.random.default_rng(cfg.seed))
        results = calculator.calculate_layers(encoder.layer_costs())
        print(format_table(results))
        standard = sum(r.standard_macs for r in results)
        separable = sum(r.separable_macs for r in results)
        actual = encoder.total_macs()
        params = count_parameters(RatingModel(cfg, cfg.text.vocab_size))
        print(f"\nTotal standard MACs {standard}, separable MACs {separable}, "
              f"as built {actual}")
        print("Parameters: " + ", ".join(f"{k} {v}" for k, v in params.items()))
        _emit(args, {"command": "conv-cost", "preset": args.preset,
                     "layers": [r.as_row() for r in results],
                     "totals": {"standard_macs": standard, "separable_macs": separable,
                                "encoder_macs": actual},
                     "parameters": params})
        return EXIT_OK

    missing = [flag for flag in ("dk", "m", "n", "df") if getattr(args, flag) is None]
    if missing:
        raise ConfigurationError(
            "conv-cost needs --dk --m --n --df (or --encoder); missing "
            + ", ".join(f"--{m}" for m in missing))
    outcome = calculator.calculate_from_args(vars(args))
    if not outcome["success"]:
        raise ConfigurationError(outcome["error"])
    print(format_table([calculator.calculate(ConvShape(**outcome["input"]))]))
    _emit(args, {"command": "conv-cost", **outcome})
    return EXIT_OK


def cmd_data_stats(args) -> int:
    manifest = load_manifest(args.manifest, args.schema, seed=args.seed)
    stats = dataset_stats(manifest)
    print(stats.render())
    print(f"\nLoad report: {manifest.report.accepted} accepted, "
          f"{manifest.report.rejected} rejected {dict(manifest.report.reasons) or ''}")
    _emit(args, {"command": "data-stats", "stats": stats.to_dict(),
                 "load_report": manifest.report.to_dict()})
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    corpus = generate_synthetic(args.n, args.seed, args.out, args.size, args.noise)
    print(f"Wrote {len(corpus.manifest)} samples; manifest at {corpus.path}")
    _emit(args, {"command": "gen-synthetic", "manifest": str(corpus.path),
                 "samples": [s.as_row() for s in corpus.manifest.samples]})
    return EXIT_OK


def cmd_distill_demo(args) -> int:
    if args.steps < 1:
        raise ConfigurationError(f"--steps must be >= 1, got {args.steps}")
    demo = DistillationDemo(DistillWeights(), seed=args.seed)
    result = demo.run(steps=args.steps, batch_size=args.batch_size, lr=args.lr)
    rows = [step.as_row() for step in result.curve]
    path = write_rows(args.out / "distill.csv", rows, ["step", "mlm", "ce", "cos", "total"])
    first, last = result.curve[0], result.curve[-1]
    print(f"Step 1 total {first.total:.4f} -> step {last.step} total {last.total:.4f}; "
          f"curve in {path}")
    _emit(args, {"command": "distill-demo", "seed": args.seed, "curve": rows})
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "ablate": cmd_ablate,
    "conv-cost": cmd_conv_cost,
    "data-stats": cmd_data_stats,
    "gen-synthetic": cmd_gen_synthetic,
    "distill-demo": cmd_distill_demo,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        return COMMANDS[args.command](args)
    except VALIDATION_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ScreenRatingError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
