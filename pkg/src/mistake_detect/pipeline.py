"""Corpus-to-samples glue and whole-detector evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .annotations import MistakeAnnotation
from .chroma import chromagram
from .corpus import DatasetIndex
from .errors import DataError
from .events import annotations_to_events, event_eval, frames_to_events
from .evaluation import (
    FrameCounts,
    Metrics,
    frame_eval,
    metrics_from_counts,
    sum_counts,
)
from .features import log_compress, rms_energy, tonic_normalize
from .frames import FrameSeries, resample_frames, stack_pair_features
from .pairs import (
    RecordingPair,
    align_pair,
    annotations_to_frame_labels,
    chunk_pair,
    chunk_valid_duration,
    load_pair,
    valid_frame_mask,
)
from .pitch import extract_pitch

FRAME_HOP = 0.010
FEATURE_KINDS = ("contour", "chroma")


@dataclass
class ChunkSample:
    """One fixed-length training/evaluation unit."""

    key: tuple[str, str]
    chunk_index: int
    features: np.ndarray
    labels: np.ndarray
    mask: np.ndarray
    annotations: list[MistakeAnnotation]
    hop: float


def _grid_frames(n_samples: int, sample_rate: int, hop: float = FRAME_HOP) -> int:
    return math.ceil(n_samples / int(round(hop * sample_rate)))


def pair_features(
    pair: RecordingPair, mistake_class: str, feature_kind: str = "contour"
) -> np.ndarray:
    """Stacked teacher+learner features on the common 10 ms grid.

    Class F uses tonic-normalized pitch (2, T) or stacked chromagrams
    (24, T) per ``feature_kind``; class A always uses log RMS energy
    (2, T) since loudness is what it inspects.
    """
    if feature_kind not in FEATURE_KINDS:
        raise ValueError(f"feature_kind must be one of {FEATURE_KINDS}")
    t_clip, l_clip = pair.teacher.clip, pair.learner.clip
    if len(t_clip.samples) != len(l_clip.samples):
        raise ValueError("pair must be aligned before feature extraction")
    n_target = _grid_frames(len(t_clip.samples), t_clip.sample_rate)

    if mistake_class == "A":
        t_series = log_compress(rms_energy(t_clip, hop=FRAME_HOP))
        l_series = log_compress(rms_energy(l_clip, hop=FRAME_HOP))
    elif mistake_class != "F":
        raise ValueError(f"mistake class must be F or A, got {mistake_class!r}")
    elif feature_kind == "contour":
        t_series = tonic_normalize(extract_pitch(t_clip, hop=FRAME_HOP), pair.teacher.meta.tonic)
        l_series = tonic_normalize(extract_pitch(l_clip, hop=FRAME_HOP), pair.learner.meta.tonic)
    else:
        t_series = resample_frames(
            chromagram(t_clip, pair.teacher.meta.tonic), FRAME_HOP, n_frames=n_target
        )
        l_series = resample_frames(
            chromagram(l_clip, pair.learner.meta.tonic), FRAME_HOP, n_frames=n_target
        )
    if t_series.n_frames != n_target or l_series.n_frames != n_target:
        raise ValueError("feature series disagree with the common frame grid")
    return stack_pair_features(t_series, l_series)


def pair_to_chunks(
    pair: RecordingPair,
    key: tuple[str, str],
    mistake_class: str,
    feature_kind: str = "contour",
    chunk_len: float = 4.0,
) -> list[ChunkSample]:
    """Align, chunk, extract features, and rasterize labels for one pair."""
    pair = align_pair(pair)
    total_duration = pair.teacher.clip.duration
    samples = []
    for i, chunk in enumerate(chunk_pair(pair, chunk_len=chunk_len)):
        features = pair_features(chunk, mistake_class, feature_kind)
        n_frames = features.shape[1]
        labels = annotations_to_frame_labels(
            chunk.annotations, FRAME_HOP, n_frames, classes=(mistake_class,)
        ).labels[mistake_class]
        mask = valid_frame_mask(
            n_frames, FRAME_HOP, chunk_valid_duration(total_duration, chunk_len, i)
        )
        samples.append(
            ChunkSample(
                key=key,
                chunk_index=i,
                features=features,
                labels=labels,
                mask=mask,
                annotations=chunk.annotations,
                hop=FRAME_HOP,
            )
        )
    return samples


def prepare_chunks(
    index: DatasetIndex,
    keys,
    mistake_class: str,
    feature_kind: str = "contour",
    chunk_len: float = 4.0,
    map_fn=map,
) -> list[ChunkSample]:
    """ChunkSamples for the given pair keys, in key order."""

    def one(key):
        return pair_to_chunks(
            load_pair(index, key), key, mistake_class, feature_kind, chunk_len
        )

    samples = []
    for chunks in map_fn(one, list(keys)):
        samples.extend(chunks)
    return samples


@dataclass
class EvaluationReport:
    """Micro-averaged metrics for the three scoring families."""

    no_collar: Metrics
    collar: Metrics
    event: Metrics
    no_collar_counts: FrameCounts
    collar_counts: FrameCounts
    event_counts: FrameCounts

    def families(self) -> dict[str, Metrics]:
        return {
            "no-collar": self.no_collar,
            "collar": self.collar,
            "event": self.event,
        }


def evaluate_probs(
    samples: list[ChunkSample],
    probs_list: list[np.ndarray],
    mistake_class: str,
    threshold: float = 0.5,
    collar_c: int = 8,
    event_collar: float = 0.200,
    high: float = 0.6,
    low: float = 0.4,
    min_dur: float = 0.100,
    merge_gap: float = 0.050,
) -> EvaluationReport:
    """Score frame probabilities against chunk ground truth.

    Frame families threshold at ``threshold``; the event family extracts
    hysteresis events from the probabilities (binary inputs pass through
    unchanged). Masked frames are silenced before event extraction.
    """
    if len(samples) != len(probs_list):
        raise ValueError("one probability vector per chunk is required")
    plain, collared, events = [], [], []
    for sample, probs in zip(samples, probs_list):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != sample.labels.shape:
            raise ValueError(
                f"probs shape {probs.shape} != labels {sample.labels.shape}"
            )
        pred = (probs >= threshold).astype(np.uint8)
        plain.append(frame_eval(pred, sample.labels, 0, sample.mask))
        collared.append(frame_eval(pred, sample.labels, collar_c, sample.mask))
        gated = np.where(sample.mask, probs, 0.0)
        pred_events = frames_to_events(
            gated, hop=sample.hop, high=high, low=low,
            min_dur=min_dur, merge_gap=merge_gap,
        )
        # chunk clipping can leave ground-truth slivers below the duration
        # floor; the extractor cannot emit a match for those, so they are
        # held to the same floor as predictions
        gt_events = [
            e
            for e in annotations_to_events(sample.annotations, mistake_class)
            if e.end - e.start >= min_dur - 1e-9
        ]
        counts, _ = event_eval(pred_events, gt_events, collar=event_collar)
        events.append(counts)

    no_collar_counts = sum_counts(plain)
    collar_counts = sum_counts(collared)
    event_counts = sum_counts(events)
    return EvaluationReport(
        no_collar=metrics_from_counts(no_collar_counts),
        collar=metrics_from_counts(collar_counts),
        event=metrics_from_counts(event_counts),
        no_collar_counts=no_collar_counts,
        collar_counts=collar_counts,
        event_counts=event_counts,
    )


def evaluate_detector(
    detector,
    samples: list[ChunkSample],
    mistake_class: str,
    **scoring,
) -> EvaluationReport:
    """Run a fitted detector (predict_proba over features) and score it."""
    probs = detector.predict_proba([s.features for s in samples])
    return evaluate_probs(samples, probs, mistake_class, **scoring)


def cross_teacher_eval(
    detector,
    other_index: DatasetIndex,
    mistake_class: str,
    feature_kind: str = "contour",
    keys=None,
    **scoring,
) -> EvaluationReport:
    """Score a detector fitted on one corpus against another corpus.

    The detector keeps its own standardization; the other corpus only
    supplies test material. Feature layout must match what the detector
    was fitted on.
    """
    keys = other_index.pair_keys() if keys is None else list(keys)
    if not keys:
        raise DataError("other corpus has no pairs to evaluate")
    samples = prepare_chunks(other_index, keys, mistake_class, feature_kind)
    return evaluate_detector(detector, samples, mistake_class, **scoring)
