"""Collar-aware frame-level scoring.

Counting rules (collar c, validity mask m):
  TP = valid predicted-1 frames inside the ground truth dilated by c
  FP = valid predicted-1 frames outside it
  FN = valid ground-truth-1 frames with no valid predicted-1 within +-c
  TN = valid predicted-0 frames outside the dilated ground truth
TP counts predicted frames while FN counts ground-truth frames, so the
two are deliberately asymmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d


@dataclass(frozen=True)
class FrameCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("counts must be non-negative")

    def __add__(self, other: "FrameCounts") -> "FrameCounts":
        return FrameCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


def collar_frames(t_c: float, hop: float) -> int:
    """Tolerance in frames for a tolerance in seconds."""
    if t_c < 0:
        raise ValueError(f"collar must be >= 0, got {t_c}")
    if hop <= 0:
        raise ValueError(f"hop must be positive, got {hop}")
    return int(round(t_c / hop))


def dilate(labels: np.ndarray, c: int) -> np.ndarray:
    """Widen every 1-run by c frames on both sides."""
    if c < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    labels = np.asarray(labels, dtype=bool)
    if c == 0 or labels.size == 0:
        return labels.copy()
    return maximum_filter1d(labels, size=2 * c + 1, mode="constant")


def frame_eval(
    pred: np.ndarray,
    gt: np.ndarray,
    c: int,
    mask: np.ndarray | None = None,
) -> FrameCounts:
    """Count TP/FP/FN/TN under a symmetric collar of c frames.

    Masked-out frames contribute to no bucket: they neither count as
    predictions nor as ground truth, and they do not seed dilation.
    """
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape or pred.ndim != 1:
        raise ValueError(f"shape mismatch: pred {pred.shape}, gt {gt.shape}")
    if mask is None:
        mask = np.ones_like(pred)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != pred.shape:
            raise ValueError(f"mask shape {mask.shape} != {pred.shape}")

    valid_pred = pred & mask
    valid_gt = gt & mask
    gt_halo = dilate(valid_gt, c)
    pred_halo = dilate(valid_pred, c)
    return FrameCounts(
        tp=int(np.sum(valid_pred & gt_halo)),
        fp=int(np.sum(valid_pred & ~gt_halo)),
        fn=int(np.sum(valid_gt & ~pred_halo)),
        tn=int(np.sum(~pred & mask & ~gt_halo)),
    )


def metrics_from_counts(counts: FrameCounts) -> Metrics:
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return Metrics(precision=precision, recall=recall, f1=f1)


def sum_counts(counts_list) -> FrameCounts:
    total = FrameCounts()
    for c in counts_list:
        total = total + c
    return total
