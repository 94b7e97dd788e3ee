"""Deterministic plain-text and CSV metric reports plus the run manifest.

Outputs carry no timestamps or environment fingerprints, so a rerun with
the same inputs reproduces every byte.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

METRIC_FAMILIES = ("no-collar", "collar", "event")
_COLUMNS = ("model", "scenario", "family", "f1", "precision", "recall")


@dataclass(frozen=True)
class ReportRow:
    model: str
    scenario: str
    family: str
    f1: float
    precision: float
    recall: float

    def as_strings(self) -> tuple[str, ...]:
        return (
            self.model,
            self.scenario,
            self.family,
            f"{self.f1:.4f}",
            f"{self.precision:.4f}",
            f"{self.recall:.4f}",
        )


def rows_from_report(model: str, scenario: str, report) -> list[ReportRow]:
    """Expand an EvaluationReport into one row per metric family."""
    rows = []
    for family, metrics in report.families().items():
        rows.append(
            ReportRow(
                model=model,
                scenario=scenario,
                family=family,
                f1=metrics.f1,
                precision=metrics.precision,
                recall=metrics.recall,
            )
        )
    return rows


def render_text_report(rows: list[ReportRow]) -> str:
    """One aligned table per metric family, families in fixed order."""
    out = []
    for family in METRIC_FAMILIES:
        members = [r for r in rows if r.family == family]
        out.append(f"[{family}]")
        table = [("model", "scenario", "f1", "precision", "recall")]
        for r in members:
            s = r.as_strings()
            table.append((s[0], s[1], s[3], s[4], s[5]))
        widths = [max(len(row[i]) for row in table) for i in range(5)]
        for row in table:
            out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        out.append("")
    return "".join(line + "\n" for line in out)


def render_csv_report(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_COLUMNS)
    for r in rows:
        writer.writerow(r.as_strings())
    return buf.getvalue()


def parse_csv_report(text: str) -> list[ReportRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != _COLUMNS:
        raise ValueError(f"expected header {_COLUMNS}, got {header}")
    return [
        ReportRow(
            model=row[0],
            scenario=row[1],
            family=row[2],
            f1=float(row[3]),
            precision=float(row[4]),
            recall=float(row[5]),
        )
        for row in reader
    ]


def render_manifest(entries: dict) -> str:
    """Sorted `key = value` lines; nested dicts flatten with dots."""
    flat: dict[str, object] = {}

    def flatten(prefix: str, value) -> None:
        if isinstance(value, dict):
            for k in sorted(value):
                flatten(f"{prefix}.{k}" if prefix else str(k), value[k])
        else:
            flat[prefix] = value

    flatten("", entries)
    return "".join(f"{k} = {flat[k]}\n" for k in sorted(flat))
