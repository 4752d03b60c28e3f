"""Score predicted class-agnostic label maps against ground truth.

Predicted clusters carry no class identity, so scoring first matches them to
ground-truth classes with an optimal (Hungarian) assignment maximizing total
IoU, then computes pixel accuracy and mean IoU over the matched pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import DimMismatch
from .validation import check_label_grid

N_MODES = ("clusters", "gt")


@dataclass
class PairScore:
    """Pixel counts and IoU for one matched (predicted, ground-truth) pair."""

    pred_label: int
    gt_label: int
    tp: int
    fp: int
    fn: int
    iou: float


@dataclass
class EvalReport:
    """Matching plus the derived metrics for one image."""

    matching: list[tuple[int, int]]
    per_class: list[PairScore]
    p_acc: float
    m_iou: float
    n_classes_used: int
    n_mode: str
    unmatched_pred: list[int]
    unmatched_gt: list[int]


def _grids(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    p = check_label_grid(pred)
    g = check_label_grid(gt)
    if p.shape != g.shape:
        raise DimMismatch(f"pred shape {p.shape} != gt shape {g.shape}")
    return p, g


def _contingency(p: np.ndarray, g: np.ndarray):
    pl, pinv = np.unique(p.ravel(), return_inverse=True)
    gl, ginv = np.unique(g.ravel(), return_inverse=True)
    counts = np.bincount(pinv * gl.size + ginv, minlength=pl.size * gl.size)
    return pl, gl, counts.reshape(pl.size, gl.size)


def _iou_matrix(m: np.ndarray) -> np.ndarray:
    union = m.sum(axis=1, keepdims=True) + m.sum(axis=0, keepdims=True) - m
    return m / union  # every row/col sums over >= 1 pixel, so union >= 1


def match_labels(pred, gt) -> list[tuple[int, int]]:
    """Injective pred-label -> gt-label matching maximizing total IoU."""
    p, g = _grids(pred, gt)
    pl, gl, m = _contingency(p, g)
    rows, cols = linear_sum_assignment(_iou_matrix(m), maximize=True)
    pairs = sorted(zip(pl[rows].tolist(), gl[cols].tolist()))
    return [(int(a), int(b)) for a, b in pairs]


def pixel_accuracy(pred, gt, matching) -> float:
    """Fraction of pixels whose matched predicted label equals the gt label."""
    p, g = _grids(pred, gt)
    correct = 0
    for pred_label, gt_label in matching:
        correct += int(np.count_nonzero((p == pred_label) & (g == gt_label)))
    return correct / p.size


def mean_iou(pred, gt, matching, n_mode: str = "clusters") -> float:
    """Mean IoU over matched pairs, divided by the cluster or gt class count.

    ``clusters`` divides by the number of predicted clusters (unmatched ones
    contribute 0); ``gt`` divides by the number of ground-truth classes.
    """
    if n_mode not in N_MODES:
        raise ValueError(f"n_mode must be one of {N_MODES}")
    p, g = _grids(pred, gt)
    ious = []
    for pred_label, gt_label in matching:
        pred_mask = p == pred_label
        gt_mask = g == gt_label
        tp = int(np.count_nonzero(pred_mask & gt_mask))
        union = int(np.count_nonzero(pred_mask | gt_mask))
        ious.append(tp / union if union else 0.0)
    divisor = np.unique(p).size if n_mode == "clusters" else np.unique(g).size
    return math.fsum(ious) / divisor


def evaluate(pred, gt, n_mode: str = "clusters") -> EvalReport:
    """Match labels, then score pAcc and mIoU in one report."""
    p, g = _grids(pred, gt)
    matching = match_labels(p, g)
    per_class = []
    for pred_label, gt_label in matching:
        pred_mask = p == pred_label
        gt_mask = g == gt_label
        tp = int(np.count_nonzero(pred_mask & gt_mask))
        fp = int(np.count_nonzero(pred_mask)) - tp
        fn = int(np.count_nonzero(gt_mask)) - tp
        per_class.append(
            PairScore(pred_label, gt_label, tp, fp, fn, tp / (tp + fp + fn))
        )
    matched_pred = {a for a, _ in matching}
    matched_gt = {b for _, b in matching}
    n_used = np.unique(p).size if n_mode == "clusters" else np.unique(g).size
    return EvalReport(
        matching=matching,
        per_class=per_class,
        p_acc=pixel_accuracy(p, g, matching),
        m_iou=mean_iou(p, g, matching, n_mode),
        n_classes_used=int(n_used),
        n_mode=n_mode,
        unmatched_pred=[int(v) for v in np.unique(p) if v not in matched_pred],
        unmatched_gt=[int(v) for v in np.unique(g) if v not in matched_gt],
    )
