"""Time-stamped mistake annotations and their text file format.

Annotation files are UTF-8 text with LF line endings, one interval per
line: ``start<TAB>end<TAB>label``. Times are seconds with at least two
decimals. The label field starts with the class letter; anything after the
first whitespace is a free-form description (used by class O and by the
augmentation tool).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

#: Annotated mistake classes: frequency, amplitude, pronunciation, timing, other.
MISTAKE_CLASSES = ("F", "A", "P", "T", "O")


@dataclass(frozen=True)
class MistakeAnnotation:
    """One annotated mistake interval ``[start, end)`` in seconds."""

    start: float
    end: float
    label: str
    description: str = ""

    def __post_init__(self) -> None:
        if self.label not in MISTAKE_CLASSES:
            raise ValueError(f"unknown mistake class {self.label!r}")
        if not (0 <= self.start < self.end):
            raise ValueError(
                f"invalid interval [{self.start}, {self.end}): need 0 <= start < end"
            )


def _fmt_seconds(x: float) -> str:
    """Format seconds with >= 2 decimals while preserving the exact value."""
    s = repr(float(x))
    if "e" in s or "E" in s:
        s = np.format_float_positional(float(x), unique=True, trim="0")
    if "." not in s:
        s += ".0"
    head, frac = s.split(".")
    return f"{head}.{frac.ljust(2, '0')}"


def parse_annotation_line(line: str, lineno: int = 0) -> MistakeAnnotation:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 3:
        raise DataError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
    try:
        start = float(parts[0])
        end = float(parts[1])
    except ValueError:
        raise DataError(f"line {lineno}: times must be numeric: {line.rstrip()!r}")
    label_field = parts[2].strip()
    if not label_field:
        raise DataError(f"line {lineno}: empty label field")
    label, _, description = label_field.partition(" ")
    if label not in MISTAKE_CLASSES:
        raise DataError(f"line {lineno}: unknown mistake class {label!r}")
    if start < 0:
        raise DataError(f"line {lineno}: negative start time {start}")
    if end <= start:
        raise DataError(f"line {lineno}: negative-duration interval [{start}, {end})")
    return MistakeAnnotation(start=start, end=end, label=label, description=description.strip())


def parse_annotations(path: str | Path) -> list[MistakeAnnotation]:
    """Parse an annotation file, sorted by start time."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"{path}: no such file")
    except UnicodeDecodeError:
        raise DataError(f"{path}: not valid UTF-8")
    anns = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            anns.append(parse_annotation_line(line, lineno))
        except DataError as exc:
            raise DataError(f"{path}: {exc}")
    anns.sort(key=lambda a: (a.start, a.end, a.label))
    return anns


def format_annotations(annotations: list[MistakeAnnotation]) -> str:
    lines = []
    for ann in sorted(annotations, key=lambda a: (a.start, a.end, a.label)):
        label_field = ann.label if not ann.description else f"{ann.label} {ann.description}"
        lines.append(f"{_fmt_seconds(ann.start)}\t{_fmt_seconds(ann.end)}\t{label_field}\n")
    return "".join(lines)


def write_annotations(path: str | Path, annotations: list[MistakeAnnotation]) -> None:
    Path(path).write_text(format_annotations(annotations), encoding="utf-8", newline="\n")
