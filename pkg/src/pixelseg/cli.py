"""Command-line interface: segment exported features, evaluate masks, inspect spectra.

Exit codes: 0 success, 2 when every candidate errored (nothing scoreable),
1 on I/O or validation failures.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import evaluation, pipeline, tensor_io
from .exceptions import AllCandidatesErrored, AllRecipesFailed, PixelsegError
from .feature_prep import FeatureRecipe

CONFIG_KEYS = (
    "t_eig",
    "t_sil",
    "seed",
    "methods",
    "k_override",
    "n_max_silhouette",
    "n_hier_max",
    "standardize",
)


def _parse_recipe(text: str) -> tuple[str, list[str]]:
    name, sep, paths = text.partition("=")
    if not sep or not name or not paths:
        raise argparse.ArgumentTypeError(
            f"expected NAME=path1[,path2,...], got {text!r}"
        )
    return name, [p for p in paths.split(",") if p]


def _parse_image_size(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", text)
    if not m or int(m.group(1)) < 1 or int(m.group(2)) < 1:
        raise argparse.ArgumentTypeError(f"expected HxW (e.g. 224x224), got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _parse_methods(text: str) -> tuple[str, ...]:
    methods = tuple(m for m in text.split(",") if m)
    for m in methods:
        if m not in pipeline.METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}")
    if not methods:
        raise argparse.ArgumentTypeError("at least one method is required")
    return methods


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pixelseg",
        description="Class-agnostic segmentation by clustering PCA-projected pixel features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment an image from exported feature tensors")
    seg.add_argument(
        "--recipe",
        action="append",
        type=_parse_recipe,
        required=True,
        metavar="NAME=FTZ[,FTZ...]",
        help="candidate representation; repeat for multiple candidates",
    )
    seg.add_argument("--out", required=True, help="output directory")
    seg.add_argument("--image-size", type=_parse_image_size, metavar="HxW")
    seg.add_argument("--json", action="store_true", help="also print report JSON to stdout")
    _add_config_flags(seg)

    ev = sub.add_parser("eval", help="score predicted masks against ground truth")
    ev.add_argument("--pred", help="predicted label-map PNG")
    ev.add_argument("--gt", help="ground-truth label-map PNG")
    ev.add_argument("--manifest", help="JSON-lines file of {\"pred\": ..., \"gt\": ...}")
    ev.add_argument("--out", help="also write the report JSON to this file")

    ins = sub.add_parser("inspect", help="print the eigenvalue spectrum of one recipe")
    ins.add_argument(
        "--recipe",
        type=_parse_recipe,
        required=True,
        metavar="NAME=FTZ[,FTZ...]",
    )
    _add_config_flags(ins)
    return parser


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--t-eig", type=float, dest="t_eig")
    sub.add_argument("--t-sil", type=float, dest="t_sil")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--methods", type=_parse_methods)
    sub.add_argument("--k", type=int, dest="k_override", help="fixed cluster count override")
    sub.add_argument("--config", help="JSON file with RunConfig keys; flags win")


def _load_config(args) -> pipeline.RunConfig:
    values: dict = {}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        with open(cfg_path, encoding="utf-8") as fh:
            raw = json.load(fh)
        unknown = set(raw) - set(CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if "methods" in values:
        values["methods"] = tuple(values["methods"])
    return pipeline.RunConfig(**values)


def _load_recipes(args, config) -> tuple[list[FeatureRecipe], dict]:
    tensors: dict = {}
    recipes = []
    for name, paths in args.recipe:
        for p in paths:
            if p not in tensors:
                tensors[p] = tensor_io.read_ftz(p)
        recipes.append(
            FeatureRecipe(name, tuple(paths), standardize=config.standardize)
        )
    return recipes, tensors


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _pc_map_png(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        scaled = (values - lo) / (hi - lo) * 255.0
    else:
        scaled = np.zeros_like(values)
    return np.rint(scaled).astype(np.uint8)


def cmd_segment(args) -> int:
    config = _load_config(args)
    recipes, tensors = _load_recipes(args, config)
    image_h, image_w = args.image_size or (None, None)
    result = pipeline.run_segmentation(recipes, tensors, image_h, image_w, config)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tensor_io.write_label_png(result.label_map, out_dir / "labelmap.png")
    maps = result.winner.pc_maps
    for j in range(maps.k):
        _write_gray_png(_pc_map_png(maps.map_grid(j)), out_dir / f"pcmap_{j}.png")

    payload = {
        "candidates": result.report,
        "winner": {
            "recipe": result.winner.recipe_id,
            "method": result.winner.method,
            "k": result.winner.k,
            "sr": result.winner.sr,
        },
        "seed": config.seed,
        "config": config.as_dict(),
    }
    report_text = _dump_json(payload)
    (out_dir / "report.json").write_text(report_text, encoding="utf-8")
    if args.json:
        sys.stdout.write(report_text)
    return 0


def _write_gray_png(arr: np.ndarray, path) -> None:
    from PIL import Image

    Image.fromarray(arr, mode="L").save(path, format="PNG")


def _eval_one(pred_path: str, gt_path: str) -> dict:
    pred = tensor_io.read_label_png(pred_path)
    gt = tensor_io.read_label_png(gt_path)
    report = evaluation.evaluate(pred, gt, n_mode="clusters")
    m_iou_gt = evaluation.mean_iou(pred, gt, report.matching, n_mode="gt")
    return {
        "pred": pred_path,
        "gt": gt_path,
        "p_acc": report.p_acc,
        "m_iou_clusters": report.m_iou,
        "m_iou_gt": m_iou_gt,
        "n_clusters": int(np.unique(pred.labels).size),
        "n_gt_classes": int(np.unique(gt.labels).size),
        "matching": [list(pair) for pair in report.matching],
    }


def cmd_eval(args) -> int:
    if args.manifest:
        entries = []
        with open(args.manifest, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    entries.append(json.loads(line))
        images = [_eval_one(e["pred"], e["gt"]) for e in entries]
    elif args.pred and args.gt:
        images = [_eval_one(args.pred, args.gt)]
    else:
        raise ValueError("eval needs --pred and --gt, or --manifest")

    def mean(key: str) -> float:
        return math.fsum(img[key] for img in images) / len(images)

    payload = {
        "images": images,
        "aggregate": {
            "n_images": len(images),
            "p_acc": mean("p_acc"),
            "m_iou_clusters": mean("m_iou_clusters"),
            "m_iou_gt": mean("m_iou_gt"),
        },
    }
    text = _dump_json(payload)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def cmd_inspect(args) -> int:
    from .pca import fit_pca
    from .feature_prep import concat_features

    config = _load_config(args)
    name, paths = args.recipe
    tensors = [tensor_io.read_ftz(p) for p in paths]
    recipe = FeatureRecipe(name, tuple(paths), standardize=config.standardize)
    matrix = concat_features(recipe, tensors)
    model = fit_pca(matrix, t_eig=config.t_eig)
    lam = model.eigenvalues_
    ratios = lam / lam[0] if lam[0] > 0 else np.zeros_like(lam)
    payload = {
        "recipe": name,
        "eigenvalues": lam.tolist(),
        "ratios": ratios.tolist(),
        "k_selected": model.k_,
        "t_eig": config.t_eig,
    }
    sys.stdout.write(_dump_json(payload))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"segment": cmd_segment, "eval": cmd_eval, "inspect": cmd_inspect}
    try:
        return handlers[args.command](args)
    except (AllCandidatesErrored, AllRecipesFailed) as exc:
        print(f"pixelseg: no usable clustering candidate: {exc}", file=sys.stderr)
        return 2
    except (PixelsegError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"pixelseg: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
