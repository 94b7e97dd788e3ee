"""Offline detection of pitch and loudness mistakes in sung imitation lessons.

A learner's take is compared frame by frame against the time-synchronized
teacher rendition of the same lesson. The package covers corpus ingestion,
pitch/energy/chroma features, note segmentation and augmentation, rule-based
and neural detectors, and frame/event evaluation with collar tolerance.
"""

from .annotations import MISTAKE_CLASSES, MistakeAnnotation, parse_annotations, write_annotations
from .audio import AudioClip, load_wav, save_wav
from .corpus import DatasetIndex, RecordingMeta, build_index
from .errors import DataError, NumericalError
from .estimators import NeuralDetector, RuleBasedDetector
from .evaluation import FrameCounts, Metrics, frame_eval, metrics_from_counts
from .events import Event, event_eval, frames_to_events
from .features import log_compress, rms_energy, tonic_normalize
from .frames import UNVOICED, FrameSeries, resample_frames
from .pairs import RecordingPair, align_pair, chunk_pair, load_pair
from .pipeline import evaluate_probs, pair_features, prepare_chunks
from .pitch import extract_pitch
from .splits import SplitPlan, make_splits
from .standardize import Standardizer

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "DataError",
    "DatasetIndex",
    "Event",
    "FrameCounts",
    "FrameSeries",
    "Metrics",
    "MISTAKE_CLASSES",
    "MistakeAnnotation",
    "NeuralDetector",
    "NumericalError",
    "RecordingMeta",
    "RecordingPair",
    "RuleBasedDetector",
    "SplitPlan",
    "Standardizer",
    "UNVOICED",
    "align_pair",
    "build_index",
    "chunk_pair",
    "evaluate_probs",
    "event_eval",
    "extract_pitch",
    "frame_eval",
    "frames_to_events",
    "load_pair",
    "load_wav",
    "log_compress",
    "make_splits",
    "metrics_from_counts",
    "pair_features",
    "parse_annotations",
    "prepare_chunks",
    "resample_frames",
    "rms_energy",
    "save_wav",
    "tonic_normalize",
    "write_annotations",
]
