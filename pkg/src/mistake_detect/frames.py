"""Regularly hopped per-frame value series.

All frame-level quantities in the toolkit (pitch contours, energy curves,
chroma matrices, labels, detector outputs) share this container so that
series produced on the same hop grid can be compared index by index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Sentinel written into tonic-normalized pitch series for unvoiced frames.
UNVOICED = -1.0


@dataclass
class FrameSeries:
    """Frame values on a regular time grid.

    ``values`` is 1-D ``(n_frames,)`` for scalar features or 2-D
    ``(n_frames, dim)`` for vector features such as chroma. ``hop`` is the
    frame period in seconds; ``window`` records the analysis window length
    used to compute the series (0.0 when not applicable).
    """

    values: np.ndarray
    hop: float
    window: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        if self.hop <= 0:
            raise ValueError(f"hop must be positive, got {self.hop}")
        if self.window < 0:
            raise ValueError(f"window must be non-negative, got {self.window}")
        if self.values.ndim not in (1, 2):
            raise ValueError(f"values must be 1-D or 2-D, got shape {self.values.shape}")
        if np.issubdtype(self.values.dtype, np.floating) and not np.all(
            np.isfinite(self.values)
        ):
            raise ValueError("values must be finite")

    @property
    def n_frames(self) -> int:
        return len(self.values)

    @property
    def duration(self) -> float:
        """Nominal covered duration in seconds."""
        return self.n_frames * self.hop

    def frame_times(self) -> np.ndarray:
        """Start time of each frame."""
        return np.arange(self.n_frames) * self.hop

    def frame_centers(self) -> np.ndarray:
        return (np.arange(self.n_frames) + 0.5) * self.hop


def resample_frames(
    series: FrameSeries, target_hop: float, n_frames: int | None = None
) -> FrameSeries:
    """Nearest-frame resampling onto a new hop grid.

    Each target frame takes the value of the source frame whose center is
    nearest its own. ``n_frames`` overrides the default output length of
    ``round(duration / target_hop)``, which callers use to land several
    series on one shared grid.
    """
    if target_hop <= 0:
        raise ValueError(f"target_hop must be positive, got {target_hop}")
    if n_frames is None:
        n_frames = int(round(series.duration / target_hop))
    if series.n_frames == 0:
        return FrameSeries(series.values[:0], hop=target_hop, window=series.window)
    centers = (np.arange(n_frames) + 0.5) * target_hop
    src = np.rint(centers / series.hop - 0.5).astype(int)
    src = np.clip(src, 0, series.n_frames - 1)
    return FrameSeries(series.values[src].copy(), hop=target_hop, window=series.window)


def stack_pair_features(teacher: FrameSeries, learner: FrameSeries) -> np.ndarray:
    """Stack a teacher/learner feature pair into a channels-first model input.

    Scalar series become a ``(2, T)`` array with the teacher in channel 0.
    Vector series of width ``d`` become ``(2*d, T)`` with the teacher block
    first. Frame counts must match exactly.
    """
    if teacher.n_frames != learner.n_frames:
        raise ValueError(
            f"frame count mismatch: teacher {teacher.n_frames}, learner {learner.n_frames}"
        )
    if teacher.values.ndim != learner.values.ndim:
        raise ValueError("teacher and learner series have different dimensionality")
    t = np.asarray(teacher.values, dtype=np.float64)
    l = np.asarray(learner.values, dtype=np.float64)
    if t.ndim == 1:
        return np.stack([t, l], axis=0)
    return np.concatenate([t.T, l.T], axis=0)
