"""Command line entry: export backbone feature maps to FTZ files."""

from __future__ import annotations

import argparse
import sys

from .backbones import BACKBONES, UnknownLayer, WeightsUnavailable
from .export import ExportSpec, export_features


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export_features",
        description="Dump intermediate CNN feature maps as FTZ files.",
    )
    parser.add_argument("--image", required=True, help="input image path")
    parser.add_argument("--backbone", required=True, choices=BACKBONES)
    parser.add_argument(
        "--layers",
        required=True,
        help="comma-separated layer names, e.g. head,block5,block15",
    )
    parser.add_argument(
        "--prune",
        default="",
        help="comma-separated block indices to remove (pruned backbone only)",
    )
    parser.add_argument("--out", required=True, dest="out_prefix", help="output path prefix")
    parser.add_argument("--weights", default="auto", choices=("auto", "imagenet", "random"))
    parser.add_argument("--seed", type=int, default=0, help="seed for random-init weights")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    layers = [l for l in args.layers.split(",") if l]
    prune = tuple(int(b) for b in args.prune.split(",") if b)
    try:
        spec = ExportSpec(
            image_path=args.image,
            backbone=args.backbone,
            layers=layers,
            prune_blocks=prune,
            out_prefix=args.out_prefix,
        )
        paths = export_features(spec, weights=args.weights, seed=args.seed)
    except (UnknownLayer, WeightsUnavailable, ValueError, OSError) as exc:
        print(f"export_features: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
