"""Trainer CLI: train a per-threshold cGAN, write predictions for evaluation."""

from __future__ import annotations

import argparse
import sys

from .train import TrainConfig, predict, train


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgan-trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one generator for one threshold")
    p.add_argument("--manifest", required=True)
    p.add_argument("--gamma-db", type=float, required=True)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--lambda", dest="lam", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint path (.pt)")
    p.add_argument("--checkpoint-every", type=int, default=0)

    p = sub.add_parser("predict", help="write generator manifolds as tile files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.add_argument("--out", required=True, help="prediction directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "train":
            config = TrainConfig(lam=args.lam, lr=args.lr, batch_size=args.batch_size,
                                 epochs=args.epochs, seed=args.seed, width=args.width,
                                 checkpoint_path=args.out,
                                 checkpoint_every=args.checkpoint_every)
            _, history = train(args.manifest, args.gamma_db, config)
            print(f"trained {args.epochs} epochs; final L1 {history['l1'][-1]:.4f}; "
                  f"checkpoint {args.out}")
        else:
            written = predict(args.checkpoint, args.manifest, args.split, args.out)
            print(f"wrote {len(written)} prediction tiles to {args.out}")
    except (ValueError, FileNotFoundError) as e:
        print(f"cgan-trainer: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
