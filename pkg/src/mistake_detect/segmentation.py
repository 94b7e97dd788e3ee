"""Note segmentation of pitch contours.

A smoothed contour is mapped to MIDI numbers, cut into spans wherever the
pitch walks more than half a semitone from the span's opening frame, and
each long-enough span is classified as silence, transition, or static by
its mean energy and trimmed pitch spread.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .frames import FrameSeries

PITCH_EPS = 1e-6
MEDIAN_WINDOW = 20
BOUNDARY_DELTA = 0.5
MIN_NOTE_SECONDS = 0.5
TRIM_FRAMES = 15
ENERGY_GATE = 0.01
PITCH_STD_GATE = 10.0

# 'candidate' is transient: segment_notes emits it for spans long enough to
# be notes; classification resolves it to silence, transition, or static.
CATEGORIES = ("silence", "transition", "static", "candidate")


@dataclass(frozen=True)
class NoteSegment:
    t_on: float
    t_off: float
    category: str
    mean_midi: float = 0.0
    mean_energy: float = 0.0
    pitch_std: float = 0.0

    def __post_init__(self) -> None:
        if not self.t_on < self.t_off:
            raise ValueError(f"degenerate segment [{self.t_on}, {self.t_off})")
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")

    @property
    def duration(self) -> float:
        return self.t_off - self.t_on


def smooth_pitch(contour: FrameSeries, w_m: int = MEDIAN_WINDOW) -> FrameSeries:
    """Replace unvoiced zeros with a tiny positive pitch, then median-filter.

    Edge frames use a shrunken window rather than padding, so constant
    contours pass through unchanged.
    """
    if w_m < 1:
        raise ValueError(f"w_m must be >= 1, got {w_m}")
    values = np.asarray(contour.values, dtype=np.float64).copy()
    values[values == 0.0] = PITCH_EPS
    n = len(values)
    if n == 0 or w_m == 1:
        return FrameSeries(values=values, hop=contour.hop, window=contour.window)

    left = w_m // 2
    right = w_m - 1 - left
    out = np.empty_like(values)
    if n >= w_m:
        out[left : n - right] = np.median(
            np.lib.stride_tricks.sliding_window_view(values, w_m), axis=1
        )
        edge = list(range(left)) + list(range(n - right, n))
    else:
        edge = list(range(n))
    for i in edge:
        out[i] = np.median(values[max(0, i - left) : min(n, i + right + 1)])
    return FrameSeries(values=out, hop=contour.hop, window=contour.window)


def to_midi(contour: FrameSeries) -> FrameSeries:
    values = np.asarray(contour.values, dtype=np.float64)
    if np.any(values <= 0):
        raise ValueError("to_midi requires strictly positive pitch values")
    return FrameSeries(
        values=69.0 + 12.0 * np.log2(values / 440.0),
        hop=contour.hop,
        window=contour.window,
    )


def segment_notes(
    midi: FrameSeries,
    delta: float = BOUNDARY_DELTA,
    min_note: float = MIN_NOTE_SECONDS,
) -> list[NoteSegment]:
    """Cut a MIDI contour into spans by a running-anchor scan.

    The anchor starts at the first frame; a boundary opens wherever the
    contour departs more than ``delta`` semitones from the anchor, which
    then resets to the departing frame. Spans lasting at least ``min_note``
    come back as 'candidate', shorter ones as 'transition'; together they
    tile [0, duration) exactly.
    """
    values = np.asarray(midi.values, dtype=np.float64)
    if len(values) == 0:
        raise ValueError("cannot segment an empty series")
    boundaries = [0]
    anchor = values[0]
    for n in range(1, len(values)):
        if abs(values[n] - anchor) > delta:
            boundaries.append(n)
            anchor = values[n]
    boundaries.append(len(values))

    hop = midi.hop
    segments = []
    for b0, b1 in zip(boundaries[:-1], boundaries[1:]):
        category = "candidate" if (b1 - b0) * hop >= min_note else "transition"
        segments.append(
            NoteSegment(
                t_on=b0 * hop,
                t_off=b1 * hop,
                category=category,
                mean_midi=float(values[b0:b1].mean()),
            )
        )
    return segments


def _segment_frames(segment: NoteSegment, hop: float) -> tuple[int, int]:
    return int(round(segment.t_on / hop)), int(round(segment.t_off / hop))


def classify_segment(
    segment: NoteSegment,
    energy: FrameSeries,
    midi: FrameSeries,
    w_p: int = TRIM_FRAMES,
    tau_e: float = ENERGY_GATE,
    tau_sigma: float = PITCH_STD_GATE,
) -> str:
    """silence / transition / static by mean energy and trimmed pitch std.

    The std discards ``w_p`` frames at each end of the segment to ignore
    attack and release wobble; segments too short to trim use every frame.
    """
    i0, i1 = _segment_frames(segment, midi.hop)
    if i0 < 0 or i1 > energy.n_frames or i1 > midi.n_frames:
        raise ValueError("segment lies outside the series bounds")
    mean_energy = float(np.mean(energy.values[i0:i1]))
    if mean_energy < tau_e:
        return "silence"
    if i1 - i0 >= 2 * w_p + 1:
        trimmed = midi.values[i0 + w_p : i1 - w_p]
    else:
        trimmed = midi.values[i0:i1]
    if float(np.std(trimmed)) > tau_sigma:
        return "transition"
    return "static"


def label_segments(
    midi: FrameSeries,
    energy: FrameSeries,
    delta: float = BOUNDARY_DELTA,
    min_note: float = MIN_NOTE_SECONDS,
    w_p: int = TRIM_FRAMES,
    tau_e: float = ENERGY_GATE,
    tau_sigma: float = PITCH_STD_GATE,
) -> list[NoteSegment]:
    """Segment and fully classify a contour; no 'candidate' survives."""
    segments = []
    for seg in segment_notes(midi, delta=delta, min_note=min_note):
        i0, i1 = _segment_frames(seg, midi.hop)
        stats = {
            "mean_midi": float(np.mean(midi.values[i0:i1])),
            "mean_energy": float(np.mean(energy.values[i0:i1])),
            "pitch_std": float(np.std(midi.values[i0:i1])),
        }
        if seg.category == "candidate":
            category = classify_segment(
                seg, energy, midi, w_p=w_p, tau_e=tau_e, tau_sigma=tau_sigma
            )
        else:
            category = seg.category
        segments.append(replace(seg, category=category, **stats))
    return segments
