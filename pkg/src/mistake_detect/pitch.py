"""Monophonic fundamental-frequency tracking.

Cumulative-mean-normalized difference tracker (YIN family) with parabolic
lag interpolation. Deliberately self-contained: frames are processed in
blocks with FFT cross-correlation, so whole recordings track in one call.
"""

from __future__ import annotations

import numpy as np

from .audio import AudioClip
from .errors import DataError
from .frames import FrameSeries

DEFAULT_WINDOW = 0.060
DEFAULT_HOP = 0.010
F_MIN = 65.0
F_MAX = 1000.0
CMNDF_THRESHOLD = 0.15
# Frames quieter than this RMS are forced unvoiced regardless of periodicity.
ENERGY_GATE = 1e-4

_BLOCK = 512


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


def extract_pitch(
    clip: AudioClip,
    window: float = DEFAULT_WINDOW,
    hop: float = DEFAULT_HOP,
    f_min: float = F_MIN,
    f_max: float = F_MAX,
    threshold: float = CMNDF_THRESHOLD,
) -> FrameSeries:
    """Track f0 per hop; 0 marks unvoiced frames.

    A frame is voiced when its normalized difference function dips below
    ``threshold`` somewhere in the lag range, its RMS clears the energy
    gate, and the interpolated frequency lands inside [f_min, f_max].
    Trailing frames without a complete analysis window stay unvoiced.
    """
    if window < 2.0 / f_min:
        raise ValueError(
            f"window {window} s too short for f_min {f_min} Hz (need >= {2.0 / f_min})"
        )
    sr = clip.sample_rate
    x = clip.samples
    w = int(round(window * sr))
    h = int(round(hop * sr))
    if h <= 0 or w <= 1:
        raise ValueError("window and hop must each cover at least one sample")
    if len(x) < w:
        raise DataError(
            f"clip of {len(x)} samples is shorter than one {w}-sample analysis window"
        )

    tau_min = max(2, int(np.floor(sr / f_max)))
    tau_max = min(int(np.floor(sr / f_min)), w - 2)
    if tau_max <= tau_min:
        raise ValueError("empty lag range; widen [f_min, f_max] or the window")
    width = w - tau_max  # fixed summation length, independent of lag
    n_fft = _next_pow2(w)  # lag + width - 1 < w <= n_fft, so no wraparound

    n_frames = int(np.ceil(len(x) / h))
    freqs = np.zeros(n_frames)
    all_frames = np.lib.stride_tricks.sliding_window_view(x, w)[::h]
    n_full = len(all_frames)
    taus = np.arange(1, tau_max + 1, dtype=np.float64)

    for b in range(0, n_full, _BLOCK):
        frames = np.ascontiguousarray(all_frames[b : b + _BLOCK])
        rows = np.arange(len(frames))
        rms = np.sqrt(np.mean(frames**2, axis=1))

        spec_head = np.conj(np.fft.rfft(frames[:, :width], n_fft, axis=1))
        spec_full = np.fft.rfft(frames, n_fft, axis=1)
        corr = np.fft.irfft(spec_head * spec_full, n_fft, axis=1)[:, : tau_max + 1]

        sq_cumsum = np.zeros((len(frames), w + 1))
        np.cumsum(frames**2, axis=1, out=sq_cumsum[:, 1:])
        head_energy = sq_cumsum[:, width]
        lag_energy = sq_cumsum[:, width + 1 : width + tau_max + 1] - sq_cumsum[:, 1 : tau_max + 1]

        diff = head_energy[:, None] + lag_energy - 2.0 * corr[:, 1:]
        np.maximum(diff, 0.0, out=diff)
        running = np.cumsum(diff, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cmndf = np.where(running > 0.0, diff * taus / running, 1.0)

        below = cmndf < threshold
        below[:, : tau_min - 1] = False
        any_below = below.any(axis=1)
        first = np.argmax(below, axis=1)

        # From the first below-threshold lag, slide to the local minimum:
        # the first lag where the function stops decreasing.
        rising = np.empty_like(below)
        rising[:, :-1] = cmndf[:, 1:] >= cmndf[:, :-1]
        rising[:, -1] = True
        cols = np.arange(tau_max)
        best = np.argmax(rising & (cols[None, :] >= first[:, None]), axis=1)

        left = cmndf[rows, np.maximum(best - 1, 0)]
        mid = cmndf[rows, best]
        right = cmndf[rows, np.minimum(best + 1, tau_max - 1)]
        curvature = left - 2.0 * mid + right
        interior = (best >= 1) & (best <= tau_max - 2) & (np.abs(curvature) > 1e-12)
        safe = np.where(np.abs(curvature) > 1e-12, curvature, 1.0)
        shift = np.clip(np.where(interior, 0.5 * (left - right) / safe, 0.0), -1.0, 1.0)

        tau_hat = best + 1.0 + shift
        f = sr / tau_hat
        voiced = any_below & (rms >= ENERGY_GATE) & (f >= f_min) & (f <= f_max)
        freqs[b : b + len(frames)] = np.where(voiced, f, 0.0)

    return FrameSeries(values=freqs, hop=hop, window=window)
