"""Bridge command line: generate claims from prompts, or fine-tune the
built-in generator on (PIO, claim) pairs. Exit codes: 0 ok, 1 validation or
model failure, 2 IO failure."""

from __future__ import annotations

import argparse
import json
import sys

from .config import DecodingConfig, read_prompts, write_claims
from .decoding import generate_claims
from .model import TinySeq2Seq, TrainSettings, finetune_generator, read_training_pairs


def _cmd_generate(args) -> int:
    config = DecodingConfig.load(args.config)
    try:
        model = TinySeq2Seq.load(args.model)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load model {args.model!r}: {exc}", file=sys.stderr)
        return 1
    requests = read_prompts(args.prompts)
    records = generate_claims(requests, config, model, seed=args.seed)
    write_claims(args.out, records)
    n_errors = sum(1 for r in records if "error" in r)
    print(json.dumps({
        "command": "generate",
        "n_requests": len(requests),
        "n_errors": n_errors,
        "config_hash": config.hash(),
        "seed": args.seed,
    }))
    return 0


def _cmd_finetune(args) -> int:
    pairs = read_training_pairs(args.claims)
    settings = TrainSettings(
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        learning_rate=args.lr,
        seed=args.seed,
    )
    model = finetune_generator(
        pairs, settings, args.model_out, unit=args.unit, dim=args.dim
    )
    print(json.dumps({
        "command": "finetune",
        "n_pairs": len(pairs),
        "unit": args.unit,
        "epochs_run": model.history["epochs_run"],
        "final_loss": model.history["loss"][-1],
        "model_out": str(args.model_out),
    }))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claim-gen-bridge",
        description="Synthetic-claim generation bridge over PIO prompts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="prompts JSONL in, claims JSONL out")
    p.add_argument("--prompts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", required=True, help="decoding config JSON")
    p.add_argument("--model", required=True, help="model artifact path")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("finetune", help="fine-tune the built-in generator")
    p.add_argument("--claims", required=True, help="claims JSONL training data")
    p.add_argument("--model-out", required=True)
    p.add_argument("--unit", choices=("word", "char"), default="word")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--max-epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_finetune)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
