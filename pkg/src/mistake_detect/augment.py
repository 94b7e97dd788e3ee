"""Amplitude-mistake augmentation on static note segments."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .annotations import MistakeAnnotation
from .audio import AudioClip
from .features import rms_energy
from .frames import FrameSeries
from .segmentation import NoteSegment, label_segments, smooth_pitch, to_midi

SCALE_LOW = (0.2, 0.6)
SCALE_HIGH = (1.2, 1.8)
RAMP_SECONDS = 0.010


@dataclass(frozen=True)
class AugmentationRecord:
    segment: NoteSegment
    scale: float
    annotation: MistakeAnnotation


def sample_scale(rng: np.random.Generator) -> float:
    """Draw a gain from U(0.2, 0.6) or U(1.2, 1.8), branch chosen fairly."""
    lo, hi = SCALE_LOW if rng.random() < 0.5 else SCALE_HIGH
    return float(rng.uniform(lo, hi))


def augment_amplitude(
    clip: AudioClip,
    contour: FrameSeries,
    m: int,
    seed: int,
) -> tuple[AudioClip, list[AugmentationRecord]]:
    """Rescale ``m`` randomly chosen static segments of the clip.

    Each chosen segment's samples are multiplied by a random gain, with
    short linear ramps at the edges so the gain change itself does not add
    clicks; the class-A annotation still covers the full segment. Samples
    outside the chosen segments are untouched. Deterministic per seed.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    midi = to_midi(smooth_pitch(contour))
    energy = rms_energy(clip, frame=contour.window or 0.060, hop=contour.hop)
    static = [s for s in label_segments(midi, energy) if s.category == "static"]

    if m > len(static):
        warnings.warn(
            f"requested {m} segments but only {len(static)} static ones exist; "
            "augmenting all of them"
        )
        m = len(static)

    rng = np.random.default_rng(seed)
    chosen = sorted(rng.choice(len(static), size=m, replace=False)) if m else []

    sr = clip.sample_rate
    ramp = int(round(RAMP_SECONDS * sr))
    gain = np.ones(len(clip.samples))
    records = []
    for idx in chosen:
        seg = static[idx]
        scale = sample_scale(rng)
        s0 = int(round(seg.t_on * sr))
        s1 = min(int(round(seg.t_off * sr)), len(gain))
        r = min(ramp, (s1 - s0) // 2)
        gain[s0:s1] = scale
        if r > 0:
            gain[s0 : s0 + r] = np.linspace(1.0, scale, r, endpoint=False)
            gain[s1 - r : s1] = np.linspace(scale, 1.0, r + 1)[1:]
        records.append(
            AugmentationRecord(
                segment=seg,
                scale=scale,
                annotation=MistakeAnnotation(
                    start=seg.t_on,
                    end=seg.t_off,
                    label="A",
                    description=f"aug r={scale!r}",
                ),
            )
        )
    return AudioClip(clip.samples * gain, sr), records
