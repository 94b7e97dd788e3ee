"""Teacher/learner recording pairs: loading, alignment, chunking, labels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .annotations import MISTAKE_CLASSES, MistakeAnnotation, parse_annotations
from .audio import AudioClip, load_wav
from .corpus import DatasetIndex, RecordingMeta
from .errors import DataError

# Guards float noise in time/hop divisions at interval boundaries.
_TIME_EPS = 1e-9


@dataclass
class Recording:
    clip: AudioClip
    meta: RecordingMeta


@dataclass
class RecordingPair:
    """One learner take matched against its reference teacher lesson.

    Annotation times are on the learner timeline, which after ``align_pair``
    coincides with the teacher timeline.
    """

    teacher: Recording
    learner: Recording
    annotations: list[MistakeAnnotation] = field(default_factory=list)


def load_pair(index: DatasetIndex, key: tuple[str, str]) -> RecordingPair:
    """Load audio, metadata, and annotations for one learner take."""
    if key not in index.learners:
        raise KeyError(f"no learner entry {key!r} in index")
    learner_entry = index.learners[key]
    teacher_entry = index.teachers[index.pairing[key]]
    annotations: list[MistakeAnnotation] = []
    if learner_entry.annotations_path is not None:
        annotations = parse_annotations(learner_entry.annotations_path)
    return RecordingPair(
        teacher=Recording(load_wav(teacher_entry.audio_path), teacher_entry.meta),
        learner=Recording(load_wav(learner_entry.audio_path), learner_entry.meta),
        annotations=annotations,
    )


def align_pair(pair: RecordingPair) -> RecordingPair:
    """Force the learner clip to the teacher clip's length.

    A short learner is zero-padded, a long one truncated. Annotations past
    the resulting duration are clipped to it. Idempotent.
    """
    t_clip = pair.teacher.clip
    l_clip = pair.learner.clip
    if t_clip.sample_rate != l_clip.sample_rate:
        raise DataError(
            f"sample-rate mismatch: teacher {t_clip.sample_rate} Hz, "
            f"learner {l_clip.sample_rate} Hz"
        )
    n = len(t_clip.samples)
    samples = l_clip.samples
    if len(samples) > n:
        samples = samples[:n]
    elif len(samples) < n:
        samples = np.concatenate([samples, np.zeros(n - len(samples))])
    duration = n / t_clip.sample_rate
    annotations = []
    for ann in pair.annotations:
        if ann.start >= duration:
            continue
        if ann.end > duration:
            ann = replace(ann, end=duration)
        annotations.append(ann)
    return RecordingPair(
        teacher=pair.teacher,
        learner=Recording(AudioClip(samples, l_clip.sample_rate), pair.learner.meta),
        annotations=annotations,
    )


def chunk_pair(pair: RecordingPair, chunk_len: float = 4.0) -> list[RecordingPair]:
    """Cut an aligned pair into consecutive fixed-length chunks.

    The final partial chunk is zero-padded up to ``chunk_len`` rather than
    dropped. Annotations are split at chunk boundaries and re-based to each
    chunk's start. Use ``chunk_valid_duration`` to recover how much of a
    chunk is real audio.
    """
    if chunk_len <= 0:
        raise ValueError(f"chunk_len must be positive, got {chunk_len}")
    t_clip = pair.teacher.clip
    l_clip = pair.learner.clip
    if len(t_clip.samples) != len(l_clip.samples):
        raise ValueError("pair must be aligned before chunking")
    sr = t_clip.sample_rate
    chunk_samps = int(round(chunk_len * sr))
    if chunk_samps <= 0:
        raise ValueError(f"chunk_len {chunk_len} is shorter than one sample")
    total = len(t_clip.samples)
    n_chunks = max(1, math.ceil(total / chunk_samps))

    chunks = []
    for i in range(n_chunks):
        lo, hi = i * chunk_samps, (i + 1) * chunk_samps
        t_seg = t_clip.samples[lo:hi]
        l_seg = l_clip.samples[lo:hi]
        if len(t_seg) < chunk_samps:
            pad = chunk_samps - len(t_seg)
            t_seg = np.concatenate([t_seg, np.zeros(pad)])
            l_seg = np.concatenate([l_seg, np.zeros(pad)])
        t0, t1 = lo / sr, hi / sr
        anns = []
        for ann in pair.annotations:
            s, e = max(ann.start, t0), min(ann.end, t1)
            if e > s:
                anns.append(replace(ann, start=s - t0, end=e - t0))
        chunks.append(
            RecordingPair(
                teacher=Recording(AudioClip(t_seg, sr), pair.teacher.meta),
                learner=Recording(AudioClip(l_seg, sr), pair.learner.meta),
                annotations=anns,
            )
        )
    return chunks


def chunk_valid_duration(
    total_duration: float, chunk_len: float, chunk_index: int
) -> float:
    """Seconds of real (unpadded) audio in the given chunk."""
    remain = total_duration - chunk_index * chunk_len
    return float(min(max(remain, 0.0), chunk_len))


@dataclass
class FrameLabels:
    """Per-class binary frame vectors on a shared hop grid."""

    labels: dict[str, np.ndarray]
    hop: float
    n_frames: int

    def __post_init__(self) -> None:
        for cls, vec in self.labels.items():
            vec = np.asarray(vec, dtype=np.uint8)
            if vec.shape != (self.n_frames,):
                raise ValueError(
                    f"class {cls!r} vector has shape {vec.shape}, "
                    f"expected ({self.n_frames},)"
                )
            self.labels[cls] = vec

    def stacked(self, classes: tuple[str, ...]) -> np.ndarray:
        """(len(classes), n_frames) matrix in the given class order."""
        return np.stack([self.labels[c] for c in classes])


def _interval_to_frames(start: float, end: float, hop: float, n_frames: int):
    # Frame i fires iff its center (i + 0.5) * hop lies in [start, end).
    i0 = math.ceil(start / hop - 0.5 - _TIME_EPS)
    i1 = math.ceil(end / hop - 0.5 - _TIME_EPS)
    return max(i0, 0), min(i1, n_frames)


def annotations_to_frame_labels(
    annotations: list[MistakeAnnotation],
    hop: float,
    n_frames: int,
    classes: tuple[str, ...] = MISTAKE_CLASSES,
) -> FrameLabels:
    """Rasterize annotation intervals onto a frame grid, one vector per class.

    Membership is decided by the frame center, so a frame straddling an
    interval edge belongs to whichever side holds its midpoint. Classes are
    independent: overlapping intervals of different classes each set their
    own vector.
    """
    if hop <= 0:
        raise ValueError(f"hop must be positive, got {hop}")
    if n_frames < 0:
        raise ValueError(f"n_frames must be >= 0, got {n_frames}")
    labels = {c: np.zeros(n_frames, dtype=np.uint8) for c in classes}
    for ann in annotations:
        if ann.label not in labels:
            continue
        i0, i1 = _interval_to_frames(ann.start, ann.end, hop, n_frames)
        if i1 > i0:
            labels[ann.label][i0:i1] = 1
    return FrameLabels(labels=labels, hop=hop, n_frames=n_frames)


def valid_frame_mask(n_frames: int, hop: float, valid_duration: float) -> np.ndarray:
    """True for frames whose center falls inside the real (unpadded) audio."""
    n_valid = math.ceil(valid_duration / hop - 0.5 - _TIME_EPS)
    n_valid = min(max(n_valid, 0), n_frames)
    mask = np.zeros(n_frames, dtype=bool)
    mask[:n_valid] = True
    return mask
