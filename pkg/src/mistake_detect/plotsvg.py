"""Dependency-free SVG rendering of contours and detected regions."""

from __future__ import annotations

import numpy as np

from .frames import UNVOICED, FrameSeries

WIDTH = 960
HEIGHT = 320
MARGIN = 40


def _scale(t: float, duration: float) -> float:
    return MARGIN + (WIDTH - 2 * MARGIN) * (t / duration if duration else 0.0)


def _contour_paths(series: FrameSeries, lo: float, hi: float) -> list[str]:
    """Polyline point strings, split wherever the contour is unvoiced."""
    values = np.asarray(series.values, dtype=np.float64)
    duration = series.duration
    span = hi - lo if hi > lo else 1.0
    paths, points = [], []
    for i, v in enumerate(values):
        if v == UNVOICED or v == 0.0:
            if len(points) > 1:
                paths.append(" ".join(points))
            points = []
            continue
        x = _scale((i + 0.5) * series.hop, duration)
        y = HEIGHT - MARGIN - (HEIGHT - 2 * MARGIN) * ((v - lo) / span)
        points.append(f"{x:.2f},{y:.2f}")
    if len(points) > 1:
        paths.append(" ".join(points))
    return paths


def plot_detection(
    teacher: FrameSeries,
    learner: FrameSeries,
    pred_events,
    gt_events=None,
    title: str = "",
) -> str:
    """SVG with both contours and shaded predicted/ground-truth regions."""
    t_vals = np.asarray(teacher.values, dtype=np.float64)
    l_vals = np.asarray(learner.values, dtype=np.float64)
    voiced = np.concatenate(
        [t_vals[(t_vals != UNVOICED) & (t_vals != 0.0)],
         l_vals[(l_vals != UNVOICED) & (l_vals != 0.0)]]
    )
    lo = float(voiced.min()) if voiced.size else 0.0
    hi = float(voiced.max()) if voiced.size else 1.0
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    duration = teacher.duration

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{MARGIN}" y="{MARGIN - 14}" font-size="14" '
            f'font-family="sans-serif">{title}</text>'
        )
    for ev in gt_events or []:
        x0, x1 = _scale(ev.start, duration), _scale(ev.end, duration)
        parts.append(
            f'<rect x="{x0:.2f}" y="{MARGIN}" width="{x1 - x0:.2f}" '
            f'height="{HEIGHT - 2 * MARGIN}" fill="#bbbbbb" opacity="0.5"/>'
        )
    for ev in pred_events:
        x0, x1 = _scale(ev.start, duration), _scale(ev.end, duration)
        parts.append(
            f'<rect x="{x0:.2f}" y="{MARGIN}" width="{x1 - x0:.2f}" '
            f'height="{HEIGHT - 2 * MARGIN}" fill="#d62728" opacity="0.3"/>'
        )
    for path in _contour_paths(teacher, lo, hi):
        parts.append(
            f'<polyline points="{path}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
        )
    for path in _contour_paths(learner, lo, hi):
        parts.append(
            f'<polyline points="{path}" fill="none" stroke="#ff7f0e" stroke-width="1.5"/>'
        )
    parts.append(
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black" stroke-width="1"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
