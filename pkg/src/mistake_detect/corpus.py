"""On-disk corpus layout and ingestion.

A corpus root holds one teacher's lessons and the learner takes recorded
against them::

    <root>/teachers/<lesson_id>/{audio.wav, meta.cfg}
    <root>/learners/<learner_id>/<lesson_id>/{audio.wav, meta.cfg, annotations.txt}

``meta.cfg`` is line-oriented ``key = value`` text. Teacher files carry
``tonic_hz``, ``bpm``, ``tala``, ``lesson``; learner files add
``reference_lesson`` and may add ``sama_onset_s`` and ``note_sequence``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

AUDIO_NAME = "audio.wav"
META_NAME = "meta.cfg"
ANNOTATIONS_NAME = "annotations.txt"


@dataclass
class RecordingMeta:
    """Metadata attached to one teacher or learner recording."""

    tonic: float
    bpm: float
    tala_name: str
    lesson_id: str
    role: str
    reference_lesson: str | None = None
    sama_onset: float | None = None
    note_sequence: str | None = None

    def __post_init__(self) -> None:
        if self.role not in ("teacher", "learner"):
            raise ValueError(f"role must be 'teacher' or 'learner', got {self.role!r}")
        if self.tonic <= 0:
            raise ValueError(f"tonic must be positive, got {self.tonic}")
        if self.bpm <= 0:
            raise ValueError(f"bpm must be positive, got {self.bpm}")
        if self.role == "learner":
            if not self.reference_lesson:
                raise ValueError("learner metadata must name a reference_lesson")
            if self.sama_onset is not None and self.sama_onset < 0:
                raise ValueError(f"sama_onset must be >= 0, got {self.sama_onset}")
        else:
            if (
                self.reference_lesson is not None
                or self.sama_onset is not None
                or self.note_sequence is not None
            ):
                raise ValueError("teacher metadata must not carry learner-only fields")


def parse_config_text(text: str) -> dict[str, str]:
    """Parse line-oriented ``key = value`` text. '#' starts a comment line."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DataError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        out[key.strip()] = value.strip()
    return out


def parse_meta(path: str | Path, role: str) -> RecordingMeta:
    path = Path(path)
    try:
        fields = parse_config_text(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{path}: no such file")
    except DataError as exc:
        raise DataError(f"{path}: {exc}")

    def _require(key: str) -> str:
        if key not in fields:
            raise DataError(f"{path}: missing required key {key!r}")
        return fields[key]

    def _as_float(key: str, value: str) -> float:
        try:
            return float(value)
        except ValueError:
            raise DataError(f"{path}: key {key!r} must be numeric, got {value!r}")

    try:
        return RecordingMeta(
            tonic=_as_float("tonic_hz", _require("tonic_hz")),
            bpm=_as_float("bpm", _require("bpm")),
            tala_name=_require("tala"),
            lesson_id=_require("lesson"),
            role=role,
            reference_lesson=fields.get("reference_lesson"),
            sama_onset=(
                _as_float("sama_onset_s", fields["sama_onset_s"])
                if "sama_onset_s" in fields
                else None
            ),
            note_sequence=fields.get("note_sequence"),
        )
    except ValueError as exc:
        raise DataError(f"{path}: {exc}")


def format_meta(meta: RecordingMeta) -> str:
    lines = [
        f"tonic_hz = {meta.tonic}",
        f"bpm = {meta.bpm}",
        f"tala = {meta.tala_name}",
        f"lesson = {meta.lesson_id}",
    ]
    if meta.reference_lesson is not None:
        lines.append(f"reference_lesson = {meta.reference_lesson}")
    if meta.sama_onset is not None:
        lines.append(f"sama_onset_s = {meta.sama_onset}")
    if meta.note_sequence is not None:
        lines.append(f"note_sequence = {meta.note_sequence}")
    return "".join(line + "\n" for line in lines)


def write_meta(path: str | Path, meta: RecordingMeta) -> None:
    Path(path).write_text(format_meta(meta), encoding="utf-8", newline="\n")


@dataclass
class TeacherEntry:
    lesson_id: str
    audio_path: Path
    meta: RecordingMeta


@dataclass
class LearnerEntry:
    learner_id: str
    lesson_id: str
    audio_path: Path
    meta: RecordingMeta
    annotations_path: Path | None


@dataclass
class DatasetIndex:
    """Paired view of one corpus root.

    ``pairing`` maps each learner key ``(learner_id, lesson_id)`` to the
    teacher lesson it was recorded against.
    """

    root: Path
    teachers: dict[str, TeacherEntry] = field(default_factory=dict)
    learners: dict[tuple[str, str], LearnerEntry] = field(default_factory=dict)
    pairing: dict[tuple[str, str], str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def pair_keys(self) -> list[tuple[str, str]]:
        return sorted(self.learners)

    def learner_ids(self) -> list[str]:
        return sorted({k[0] for k in self.learners})

    def __len__(self) -> int:
        return len(self.learners)


def _sorted_subdirs(path: Path) -> list[Path]:
    if not path.is_dir():
        return []
    return sorted((p for p in path.iterdir() if p.is_dir()), key=lambda p: p.name)


def build_index(root: str | Path) -> DatasetIndex:
    """Scan a corpus root and pair every learner take with its teacher lesson.

    Incomplete recording directories are skipped with a warning. A learner
    whose metadata names a teacher lesson that does not exist is an error.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"corpus root {root} is not a directory")
    index = DatasetIndex(root=root)

    for lesson_dir in _sorted_subdirs(root / "teachers"):
        audio = lesson_dir / AUDIO_NAME
        meta_path = lesson_dir / META_NAME
        if not audio.is_file() or not meta_path.is_file():
            index.warnings.append(f"teacher {lesson_dir.name}: incomplete, skipped")
            continue
        meta = parse_meta(meta_path, role="teacher")
        index.teachers[lesson_dir.name] = TeacherEntry(
            lesson_id=lesson_dir.name, audio_path=audio, meta=meta
        )

    for learner_dir in _sorted_subdirs(root / "learners"):
        for lesson_dir in _sorted_subdirs(learner_dir):
            key = (learner_dir.name, lesson_dir.name)
            audio = lesson_dir / AUDIO_NAME
            meta_path = lesson_dir / META_NAME
            if not audio.is_file() or not meta_path.is_file():
                index.warnings.append(
                    f"learner {key[0]}/{key[1]}: incomplete, skipped"
                )
                continue
            meta = parse_meta(meta_path, role="learner")
            reference = meta.reference_lesson
            if reference not in index.teachers:
                raise DataError(
                    f"learner {key[0]}/{key[1]} references unknown teacher lesson "
                    f"{reference!r}"
                )
            ann_path = lesson_dir / ANNOTATIONS_NAME
            if not ann_path.is_file():
                index.warnings.append(
                    f"learner {key[0]}/{key[1]}: no annotations.txt, treated as empty"
                )
                ann_path = None
            index.learners[key] = LearnerEntry(
                learner_id=key[0],
                lesson_id=key[1],
                audio_path=audio,
                meta=meta,
                annotations_path=ann_path,
            )
            index.pairing[key] = reference

    return index
