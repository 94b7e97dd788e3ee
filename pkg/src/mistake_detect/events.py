"""Event extraction from frame probabilities and event-level scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import FrameCounts, Metrics, metrics_from_counts
from .frames import FrameSeries

HIGH_THRESHOLD = 0.6
LOW_THRESHOLD = 0.4
MIN_EVENT_SECONDS = 0.100
MERGE_GAP_SECONDS = 0.050
EVENT_COLLAR_SECONDS = 0.200


@dataclass(frozen=True)
class Event:
    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError(f"degenerate event [{self.start}, {self.end})")

    @property
    def duration(self) -> float:
        return self.end - self.start


def frames_to_events(
    probs,
    hop: float | None = None,
    high: float = HIGH_THRESHOLD,
    low: float = LOW_THRESHOLD,
    min_dur: float = MIN_EVENT_SECONDS,
    merge_gap: float = MERGE_GAP_SECONDS,
) -> list[Event]:
    """Hysteresis event extraction.

    A run of frames >= ``low`` becomes an event if it contains at least one
    frame >= ``high``. Events separated by less than ``merge_gap`` merge,
    then events shorter than ``min_dur`` are dropped. Binary inputs work
    unchanged (set high = low = 0.5 for plain thresholding).
    """
    if isinstance(probs, FrameSeries):
        hop = probs.hop
        values = np.asarray(probs.values, dtype=np.float64)
    else:
        if hop is None:
            raise ValueError("hop is required when probs is a bare array")
        values = np.asarray(probs, dtype=np.float64)
    if low > high:
        raise ValueError(f"low {low} must not exceed high {high}")
    if values.size == 0:
        return []

    sustain = values >= low
    edges = np.diff(np.concatenate([[0], sustain.astype(np.int8), [0]]))
    run_starts = np.flatnonzero(edges == 1)
    run_ends = np.flatnonzero(edges == -1)

    # work in frame indices; durations like end*hop - start*hop lose bits
    runs = [
        (int(i0), int(i1))
        for i0, i1 in zip(run_starts, run_ends)
        if np.any(values[i0:i1] >= high)
    ]
    merged: list[tuple[int, int]] = []
    for i0, i1 in runs:
        if merged and (i0 - merged[-1][1]) * hop < merge_gap:
            merged[-1] = (merged[-1][0], i1)
        else:
            merged.append((i0, i1))
    return [
        Event(start=i0 * hop, end=i1 * hop)
        for i0, i1 in merged
        if (i1 - i0) * hop >= min_dur
    ]


def _check_sorted(events: list[Event], name: str) -> None:
    for a, b in zip(events, events[1:]):
        if b.start < a.start:
            raise ValueError(f"{name} events must be sorted by start time")


def event_eval(
    pred_events: list[Event],
    gt_events: list[Event],
    collar: float = EVENT_COLLAR_SECONDS,
) -> tuple[FrameCounts, Metrics]:
    """Greedy one-to-one matching of predictions to collar-dilated truths.

    Candidate matches need positive temporal overlap with the dilated
    ground-truth interval; they are consumed in decreasing-overlap order,
    each event matching at most once. tn is structurally 0.
    """
    _check_sorted(pred_events, "predicted")
    _check_sorted(gt_events, "ground-truth")

    candidates = []
    for j, gt in enumerate(gt_events):
        g0, g1 = gt.start - collar, gt.end + collar
        for i, pr in enumerate(pred_events):
            overlap = min(pr.end, g1) - max(pr.start, g0)
            if overlap > 0:
                candidates.append((-overlap, j, i))
    candidates.sort()

    matched_pred: set[int] = set()
    matched_gt: set[int] = set()
    for _, j, i in candidates:
        if i in matched_pred or j in matched_gt:
            continue
        matched_pred.add(i)
        matched_gt.add(j)

    tp = len(matched_pred)
    counts = FrameCounts(
        tp=tp, fp=len(pred_events) - tp, fn=len(gt_events) - tp, tn=0
    )
    return counts, metrics_from_counts(counts)


def annotations_to_events(annotations, label: str) -> list[Event]:
    """Ground-truth events of one mistake class, sorted by start."""
    return sorted(
        (Event(start=a.start, end=a.end) for a in annotations if a.label == label),
        key=lambda e: (e.start, e.end),
    )
