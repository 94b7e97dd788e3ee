"""Deterministic synthetic teacher/learner renderer.

Renders a note sequence as a 3-partial harmonic tone and derives the
learner take by applying pitch and gain faults to the teacher's frequency
and envelope curves. With no faults the two renders are bit-identical,
which makes synthetic pairs usable as exact end-to-end oracles.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .annotations import MistakeAnnotation, write_annotations
from .audio import AudioClip, save_wav
from .corpus import RecordingMeta, write_meta
from .errors import DataError
from .pairs import Recording, RecordingPair

PARTIAL_WEIGHTS = (1.0, 0.5, 0.25)
RAMP_SECONDS = 0.010


@dataclass(frozen=True)
class SynthNote:
    """One rendered note; midi None means a rest."""

    midi: float | None
    duration: float

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError(f"note duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class Fault:
    """An injected mistake: pitch offset in cents (F) or linear gain (A).

    ``annotated`` lets a recipe carry deliberate unannotated deviations,
    useful for corpora where only some deviations count as mistakes.
    """

    start: float
    end: float
    label: str
    cents: float = 0.0
    gain: float = 1.0
    annotated: bool = True

    def __post_init__(self) -> None:
        if self.label not in ("F", "A"):
            raise ValueError(f"fault class must be F or A, got {self.label!r}")
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad fault interval [{self.start}, {self.end})")
        if self.label == "A" and self.gain <= 0:
            raise ValueError(f"gain must be positive, got {self.gain}")


@dataclass
class SynthRecipe:
    notes: list[SynthNote]
    tonic: float
    faults: list[Fault] = field(default_factory=list)
    sample_rate: int = 22050
    amplitude: float = 0.1
    bpm: float = 80.0
    tala_name: str = "adi"
    lesson_id: str = "synth"
    learner_id: str = "synth-learner"
    # peak of a slow sinusoidal pitch wander on the learner, 0 disables
    jitter_cents: float = 0.0

    @property
    def duration(self) -> float:
        return sum(n.duration for n in self.notes)


def midi_to_hz(midi: float) -> float:
    return 440.0 * 2.0 ** ((midi - 69.0) / 12.0)


def _curves(recipe: SynthRecipe) -> tuple[np.ndarray, np.ndarray]:
    """Instantaneous frequency and amplitude-envelope curves, per sample."""
    sr = recipe.sample_rate
    ramp = int(round(RAMP_SECONDS * sr))
    freq_parts, env_parts = [], []
    for note in recipe.notes:
        n = int(round(note.duration * sr))
        if note.midi is None:
            freq_parts.append(np.zeros(n))
            env_parts.append(np.zeros(n))
            continue
        freq_parts.append(np.full(n, midi_to_hz(note.midi)))
        env = np.ones(n)
        r = min(ramp, n // 2)
        if r > 0:
            env[:r] = np.linspace(0.0, 1.0, r, endpoint=False)
            env[n - r :] = np.linspace(1.0, 0.0, r + 1)[1:]
        env_parts.append(env)
    return np.concatenate(freq_parts), np.concatenate(env_parts)


def _fault_span(fault: Fault, sr: int, n_total: int) -> tuple[int, int]:
    i0 = int(round(fault.start * sr))
    i1 = int(round(fault.end * sr))
    if i0 >= n_total or i1 > n_total:
        raise DataError(
            f"fault interval [{fault.start}, {fault.end}) lies outside the "
            f"{n_total / sr:.3f} s clip"
        )
    return i0, i1


def _render(freq: np.ndarray, env: np.ndarray, recipe: SynthRecipe) -> np.ndarray:
    phase = 2.0 * math.pi * np.cumsum(freq) / recipe.sample_rate
    scale = recipe.amplitude / sum(PARTIAL_WEIGHTS)
    wave = np.zeros(len(freq))
    for k, weight in enumerate(PARTIAL_WEIGHTS, start=1):
        wave += weight * np.sin(k * phase)
    return scale * env * wave


def _jitter_curve(n: int, sr: int, peak_cents: float, seed: int) -> np.ndarray:
    """Slow pitch wander bounded by +-peak_cents, in cents per sample."""
    rng = np.random.default_rng(seed)
    rates = rng.uniform(0.2, 1.2, size=3)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=3)
    t = np.arange(n) / sr
    curve = np.zeros(n)
    for weight, rate, phase in zip((0.5, 0.3, 0.2), rates, phases):
        curve += weight * np.sin(2.0 * math.pi * rate * t + phase)
    return peak_cents * curve


def synth_pair(recipe: SynthRecipe, seed: int = 0) -> RecordingPair:
    """Render a teacher clip and its faulted learner counterpart.

    Annotations list exactly the faults marked ``annotated``, sorted by
    time. With zero faults and zero jitter the learner render is
    bit-identical to the teacher; the seed only shapes the jitter wander.
    """
    freq, env = _curves(recipe)
    sr = recipe.sample_rate
    teacher_samples = _render(freq, env, recipe)

    l_freq, l_env = freq.copy(), env.copy()
    for fault in recipe.faults:
        i0, i1 = _fault_span(fault, sr, len(freq))
        if fault.label == "F":
            l_freq[i0:i1] *= 2.0 ** (fault.cents / 1200.0)
        else:
            l_env[i0:i1] *= fault.gain
    if recipe.jitter_cents > 0:
        jitter = _jitter_curve(len(l_freq), sr, recipe.jitter_cents, seed)
        l_freq = l_freq * 2.0 ** (jitter / 1200.0)
    learner_samples = _render(l_freq, l_env, recipe)

    annotations = sorted(
        (
            MistakeAnnotation(start=f.start, end=f.end, label=f.label)
            for f in recipe.faults
            if f.annotated
        ),
        key=lambda a: (a.start, a.end, a.label),
    )
    teacher_meta = RecordingMeta(
        tonic=recipe.tonic,
        bpm=recipe.bpm,
        tala_name=recipe.tala_name,
        lesson_id=recipe.lesson_id,
        role="teacher",
    )
    learner_meta = RecordingMeta(
        tonic=recipe.tonic,
        bpm=recipe.bpm,
        tala_name=recipe.tala_name,
        lesson_id=recipe.lesson_id,
        role="learner",
        reference_lesson=recipe.lesson_id,
    )
    return RecordingPair(
        teacher=Recording(AudioClip(teacher_samples, sr), teacher_meta),
        learner=Recording(AudioClip(learner_samples, sr), learner_meta),
        annotations=annotations,
    )


def _notes_from_json(items) -> list[SynthNote]:
    notes = []
    for item in items:
        midi, dur = item
        notes.append(SynthNote(midi=None if midi is None else float(midi), duration=float(dur)))
    return notes


def _fault_from_json(obj: dict) -> Fault:
    return Fault(
        start=float(obj["start"]),
        end=float(obj["end"]),
        label=str(obj["class"]),
        cents=float(obj.get("cents", 0.0)),
        gain=float(obj.get("gain", 1.0)),
        annotated=bool(obj.get("annotated", True)),
    )


def load_corpus_recipe(path: str | Path) -> dict:
    """Parse a JSON corpus recipe; see ``write_synth_corpus`` for the shape."""
    path = Path(path)
    try:
        spec = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{path}: no such recipe file")
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})")
    for key in ("lessons", "takes"):
        if key not in spec:
            raise DataError(f"{path}: recipe missing {key!r} list")
    return spec


def write_synth_corpus(root: str | Path, spec: dict, seed: int = 0) -> list[Path]:
    """Materialize a recipe as an on-disk corpus in the standard layout.

    Recipe shape::

        {
          "sample_rate": 22050, "amplitude": 0.1,
          "lessons": [{"id": ..., "tonic_hz": ..., "bpm": ..., "tala": ...,
                       "notes": [[midi-or-null, seconds], ...]}],
          "takes": [{"learner": ..., "lesson": ..., "jitter_cents": 0.0,
                     "faults": [{"start":, "end":, "class": "F"|"A",
                                 "cents":, "gain":, "annotated":}, ...]}]
        }

    Returns the directories written. Byte-identical across runs with the
    same recipe and seed.
    """
    root = Path(root)
    sr = int(spec.get("sample_rate", 22050))
    amplitude = float(spec.get("amplitude", 0.1))
    lessons = {str(lesson["id"]): lesson for lesson in spec["lessons"]}
    written = []

    recipes: dict[str, SynthRecipe] = {}
    for lesson_id, lesson in lessons.items():
        recipes[lesson_id] = SynthRecipe(
            notes=_notes_from_json(lesson["notes"]),
            tonic=float(lesson["tonic_hz"]),
            sample_rate=sr,
            amplitude=amplitude,
            bpm=float(lesson.get("bpm", 80.0)),
            tala_name=str(lesson.get("tala", "adi")),
            lesson_id=lesson_id,
        )
        pair = synth_pair(recipes[lesson_id], seed=seed)
        lesson_dir = root / "teachers" / lesson_id
        lesson_dir.mkdir(parents=True, exist_ok=True)
        save_wav(lesson_dir / "audio.wav", pair.teacher.clip)
        write_meta(lesson_dir / "meta.cfg", pair.teacher.meta)
        written.append(lesson_dir)

    for take in spec["takes"]:
        lesson_id = str(take["lesson"])
        if lesson_id not in recipes:
            raise DataError(f"take references unknown lesson {lesson_id!r}")
        recipe = replace(
            recipes[lesson_id],
            faults=[_fault_from_json(f) for f in take.get("faults", [])],
            learner_id=str(take["learner"]),
            jitter_cents=float(take.get("jitter_cents", 0.0)),
        )
        take_key = f"{recipe.learner_id}/{lesson_id}"
        pair = synth_pair(recipe, seed=seed + (zlib.crc32(take_key.encode()) & 0xFFFF))
        take_dir = root / "learners" / recipe.learner_id / lesson_id
        take_dir.mkdir(parents=True, exist_ok=True)
        save_wav(take_dir / "audio.wav", pair.learner.clip)
        write_meta(take_dir / "meta.cfg", pair.learner.meta)
        write_annotations(take_dir / "annotations.txt", pair.annotations)
        written.append(take_dir)
    return written
