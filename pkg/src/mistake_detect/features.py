"""Frame-level energy and pitch representations."""

from __future__ import annotations

import math

import numpy as np

from .audio import AudioClip
from .errors import DataError
from .frames import UNVOICED, FrameSeries

ENERGY_FLOOR = 1e-6


def rms_energy(clip: AudioClip, frame: float = 0.060, hop: float = 0.010) -> FrameSeries:
    """Short-time RMS, one value per hop.

    Frame windows shrink at the clip tail instead of being dropped, so a
    constant signal yields a constant series over the full duration.
    """
    sr = clip.sample_rate
    x = clip.samples
    w = int(round(frame * sr))
    h = int(round(hop * sr))
    if w <= 0 or h <= 0:
        raise ValueError("frame and hop must each cover at least one sample")
    if len(x) < w:
        raise DataError(
            f"clip of {len(x)} samples is shorter than one {w}-sample frame"
        )
    n_frames = math.ceil(len(x) / h)
    sq_cumsum = np.concatenate([[0.0], np.cumsum(x**2)])
    starts = np.arange(n_frames) * h
    ends = np.minimum(starts + w, len(x))
    counts = ends - starts
    values = np.sqrt((sq_cumsum[ends] - sq_cumsum[starts]) / counts)
    return FrameSeries(values=values, hop=hop, window=frame)


def log_compress(energy: FrameSeries) -> FrameSeries:
    """log2 of energy with a 1e-6 floor so silence stays finite."""
    values = np.asarray(energy.values)
    if np.any(values < 0):
        raise ValueError("energy values must be non-negative")
    return FrameSeries(
        values=np.log2(np.maximum(values, ENERGY_FLOOR)),
        hop=energy.hop,
        window=energy.window,
    )


def tonic_normalize(contour: FrameSeries, tonic: float) -> FrameSeries:
    """Fold a pitch contour onto one octave above the tonic.

    Voiced frames map to log2(p / tonic) mod 1, so any octave of the same
    scale degree lands on the same value in [0, 1). Unvoiced frames (0 Hz)
    map to the sentinel -1 exactly.
    """
    if tonic <= 0:
        raise ValueError(f"tonic must be positive, got {tonic}")
    values = np.asarray(contour.values, dtype=np.float64)
    voiced = values > 0
    out = np.full(values.shape, UNVOICED)
    folded = np.mod(np.log2(values[voiced] / tonic), 1.0)
    # mod can land on 1.0 through rounding; fold that back to 0.
    folded[folded >= 1.0] = 0.0
    out[voiced] = folded
    return FrameSeries(values=out, hop=contour.hop, window=contour.window)
