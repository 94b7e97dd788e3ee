"""Tonic-relative chromagram."""

from __future__ import annotations

import math

import numpy as np

from .audio import AudioClip
from .errors import DataError
from .frames import FrameSeries

CHROMA_WINDOW = 0.046
CHROMA_HOP = 0.023
# Spectral bins outside this band contribute nothing (roughly C2 to C8).
BAND_LOW = 65.0
BAND_HIGH = 4186.0


def chromagram(
    clip: AudioClip,
    tonic: float,
    window: float = CHROMA_WINDOW,
    hop: float = CHROMA_HOP,
) -> FrameSeries:
    """Per-frame 12-bin pitch-class energy, bin 0 at the tonic's class.

    Each STFT bin in the analysis band is assigned to the nearest
    equal-tempered semitone relative to the tonic; bin energies accumulate
    by pitch class and each frame is L2-normalized (silent frames stay
    all-zero).
    """
    if tonic <= 0:
        raise ValueError(f"tonic must be positive, got {tonic}")
    sr = clip.sample_rate
    x = clip.samples
    w = int(round(window * sr))
    h = int(round(hop * sr))
    if w <= 0 or h <= 0:
        raise ValueError("window and hop must each cover at least one sample")
    if len(x) < w:
        raise DataError(
            f"clip of {len(x)} samples is shorter than one {w}-sample window"
        )
    n_fft = 2048
    while n_fft < w:
        n_fft *= 2

    n_frames = math.ceil(len(x) / h)
    padded = np.concatenate([x, np.zeros(max(0, (n_frames - 1) * h + w - len(x)))])
    frames = np.lib.stride_tricks.sliding_window_view(padded, w)[::h][:n_frames]
    spectra = np.abs(np.fft.rfft(frames * np.hanning(w), n_fft, axis=1)) ** 2

    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sr)
    in_band = (freqs >= BAND_LOW) & (freqs <= BAND_HIGH)
    classes = np.mod(
        np.rint(12.0 * np.log2(freqs[in_band] / tonic)).astype(int), 12
    )
    chroma = np.zeros((n_frames, 12))
    for pc in range(12):
        cols = np.flatnonzero(in_band)[classes == pc]
        if len(cols):
            chroma[:, pc] = spectra[:, cols].sum(axis=1)

    norms = np.linalg.norm(chroma, axis=1, keepdims=True)
    np.divide(chroma, norms, out=chroma, where=norms > 0)
    return FrameSeries(values=chroma, hop=hop, window=window)
