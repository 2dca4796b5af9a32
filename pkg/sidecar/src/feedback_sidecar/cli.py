"""Command-line entry points: ``train`` a checkpoint, ``serve`` it over the
bridge protocol. Exit codes: 0 success, 1 validation error, 2 runtime
failure, 64 usage."""

from __future__ import annotations

import argparse
import sys

from feedback_sidecar.labels import LabelMismatchError

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2, 64


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feedback-sidecar",
                                     description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("train", help="fine-tune a checkpoint on labeled JSONL")
    p.add_argument("--labeled", required=True,
                   help="engine labeled-record JSONL file")
    p.add_argument("--checkpoint", required=True, help="output directory")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--pretrain-epochs", type=int, default=2,
                   dest="pretrain_epochs")
    p.add_argument("--max-len", type=int, default=48, dest="max_len")
    p.add_argument("--raw-text", action="store_true", dest="raw_text",
                   help="skip the lowercase/URL-stripping cleanup pass")

    p = sub.add_parser("serve", help="answer bridge requests on stdin/stdout")
    p.add_argument("--checkpoint", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "train":
            from feedback_sidecar.train import TrainSpec, finetune
            out = finetune(TrainSpec(
                labeled_path=args.labeled, checkpoint_dir=args.checkpoint,
                epochs=args.epochs, lr=args.lr, seed=args.seed,
                split=args.split, pretrain_epochs=args.pretrain_epochs,
                max_len=args.max_len,
                engine_style_cleanup=not args.raw_text))
            print(f"checkpoint written to {out}")
            return EXIT_OK
        if args.command == "serve":
            from feedback_sidecar.serve import serve
            return serve(args.checkpoint)
    except (LabelMismatchError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - surface as runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
