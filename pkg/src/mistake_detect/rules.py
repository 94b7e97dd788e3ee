"""Rule-based mistake detection by per-frame thresholding."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evaluation import frame_eval, metrics_from_counts, sum_counts
from .frames import UNVOICED, FrameSeries

BETA_GRID = tuple(round(0.005 + 0.001 * i, 3) for i in range(46))
GAMMA_GRID = tuple(0.5 * i for i in range(1, 17))


@dataclass(frozen=True)
class RuleThresholds:
    """Frequency tolerance in octave units, amplitude tolerance in log2 units."""

    beta: float
    gamma: float

    def __post_init__(self) -> None:
        if self.beta <= 0 or self.gamma <= 0:
            raise ValueError("thresholds must be positive")


def beta_to_cents(beta: float) -> float:
    return 1200.0 * beta


def gamma_to_db(gamma: float) -> float:
    return gamma * 20.0 * math.log10(2.0)


def format_threshold(value: float, mistake_class: str) -> str:
    """e.g. 0.01 -> "0.01 (12.0 cents)"; 1.0 -> "1 (6.0 dB)"."""
    if mistake_class == "F":
        return f"{value:g} ({beta_to_cents(value):.1f} cents)"
    if mistake_class == "A":
        return f"{value:g} ({gamma_to_db(value):.1f} dB)"
    raise ValueError(f"mistake class must be F or A, got {mistake_class!r}")


def _paired_values(teacher, learner):
    t_series = teacher if isinstance(teacher, FrameSeries) else None
    t = np.asarray(teacher.values if t_series else teacher, dtype=np.float64)
    l = np.asarray(
        learner.values if isinstance(learner, FrameSeries) else learner,
        dtype=np.float64,
    )
    if t.shape != l.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {l.shape}")
    return t, l, t_series


def _wrap(flags: np.ndarray, template: FrameSeries | None):
    if template is None:
        return flags
    return FrameSeries(values=flags, hop=template.hop, window=template.window)


def rb_detect_frequency(teacher, learner, beta: float, distance: str = "abs"):
    """Flag frames where tonic-normalized pitches disagree by more than beta.

    Voicing asymmetry (exactly one side unvoiced) is always a flag; two
    unvoiced frames never are. ``distance`` is "abs" for plain absolute
    difference or "circular" for min(d, 1 - d) on the octave circle.
    """
    if distance not in ("abs", "circular"):
        raise ValueError(f"distance must be 'abs' or 'circular', got {distance!r}")
    t, l, template = _paired_values(teacher, learner)
    t_voiced = t != UNVOICED
    l_voiced = l != UNVOICED
    d = np.abs(t - l)
    if distance == "circular":
        d = np.minimum(d, 1.0 - d)
    flags = np.where(
        t_voiced & l_voiced, d > beta, t_voiced != l_voiced
    ).astype(np.uint8)
    return _wrap(flags, template)


def rb_detect_amplitude(teacher, learner, gamma: float):
    """Flag frames where log2 energies differ by more than gamma."""
    t, l, template = _paired_values(teacher, learner)
    flags = (np.abs(t - l) > gamma).astype(np.uint8)
    return _wrap(flags, template)


def detect_with_threshold(
    teacher: np.ndarray, learner: np.ndarray, mistake_class: str, threshold: float,
    distance: str = "abs",
) -> np.ndarray:
    if mistake_class == "F":
        return rb_detect_frequency(teacher, learner, threshold, distance=distance)
    if mistake_class == "A":
        return rb_detect_amplitude(teacher, learner, threshold)
    raise ValueError(f"mistake class must be F or A, got {mistake_class!r}")


def grid_search_threshold(
    samples,
    mistake_class: str,
    grid=None,
    collar_c: int = 8,
    distance: str = "abs",
) -> tuple[float, float]:
    """Pick the grid value maximizing micro-averaged collar F1.

    ``samples`` is a list of (teacher_values, learner_values, gt_labels,
    mask) tuples; mask may be None. Ties resolve toward the larger, more
    lenient threshold. Returns (threshold, achieved F1).
    """
    if grid is None:
        grid = BETA_GRID if mistake_class == "F" else GAMMA_GRID
    grid = list(grid)
    if not grid:
        raise ValueError("empty threshold grid")
    if not samples:
        raise ValueError("empty training set")

    best_value, best_f1 = grid[0], -1.0
    for value in sorted(grid):
        counts = []
        for teacher, learner, gt, mask in samples:
            pred = detect_with_threshold(
                teacher, learner, mistake_class, value, distance=distance
            )
            counts.append(frame_eval(pred, gt, collar_c, mask))
        f1 = metrics_from_counts(sum_counts(counts)).f1
        if f1 >= best_f1:
            best_value, best_f1 = value, f1
    return best_value, best_f1
