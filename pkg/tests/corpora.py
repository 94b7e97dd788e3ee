"""Synthetic corpus recipes used by the end-to-end tests.

Both builders return recipe dicts for ``write_synth_corpus``. Degrees are
chosen away from the octave boundary so absolute distance on the wrapped
pitch axis never jumps, and faults sit strictly inside single notes so
their annotations never cover rests.
"""

import numpy as np

TONIC = 220.0
TONIC_MIDI = 57  # 220 Hz
DEGREES = (2, 3, 4, 5, 7, 9, 10)


def _lesson_notes(rng, target_seconds, long_range=(0.5, 0.9), rest_every=5):
    """[[midi, dur], ...] summing to roughly target_seconds."""
    notes = []
    total = 0.0
    i = 0
    while total < target_seconds:
        if rest_every and i and i % rest_every == 0:
            dur = 0.2
            notes.append([None, dur])
        else:
            dur = float(rng.uniform(*long_range))
            midi = TONIC_MIDI + int(rng.choice(DEGREES))
            notes.append([midi, round(dur, 3)])
        total += dur
        i += 1
    return notes


def _note_spans(notes):
    """(start, end, midi) for every non-rest note."""
    spans = []
    t = 0.0
    for midi, dur in notes:
        if midi is not None:
            spans.append((t, t + dur, midi))
        t += dur
    return spans


def rb_corpus_recipe(seed=0):
    """Thirty pairs with well-separated faults and bounded natural wander.

    Pitch faults are 30..55 cents (some exactly 30), gain faults at least
    12.6 dB, and the learner wander peaks at 7 cents, so a threshold
    sweep has a clean plateau between the wander and the fault floor.
    """
    rng = np.random.default_rng(seed)
    lessons = []
    for li in range(5):
        lessons.append(
            {
                "id": f"lesson{li + 1:02d}",
                "tonic_hz": TONIC,
                "bpm": 80,
                "tala": "adi",
                "notes": _lesson_notes(rng, 9.0),
            }
        )

    cents_pool = [30.0, -30.0, 34.0, -38.0, 45.0, -45.0, 55.0]
    takes = []
    for learner in [f"learner{k}" for k in range(1, 7)]:
        for lesson in lessons:
            spans = [s for s in _note_spans(lesson["notes"]) if s[1] - s[0] >= 0.5]
            picks = rng.choice(len(spans), size=min(3, len(spans)), replace=False)
            faults = []
            for j, pick in enumerate(sorted(picks)):
                s, e, _ = spans[pick]
                span = (round(s + 0.06, 3), round(e - 0.06, 3))
                if j % 2 == 0:
                    faults.append(
                        {
                            "start": span[0],
                            "end": span[1],
                            "class": "F",
                            "cents": float(rng.choice(cents_pool)),
                        }
                    )
                else:
                    sign = 1.0 if rng.random() < 0.5 else -1.0
                    faults.append(
                        {
                            "start": span[0],
                            "end": span[1],
                            "class": "A",
                            "gain": float(2.0 ** (sign * rng.uniform(2.1, 2.8))),
                        }
                    )
            takes.append(
                {
                    "learner": learner,
                    "lesson": lesson["id"],
                    "jitter_cents": 7.0,
                    "faults": faults,
                }
            )
    return {"sample_rate": 22050, "amplitude": 0.1, "lessons": lessons, "takes": takes}


def _context_lesson_notes(rng, target_seconds=15.5, cap_seconds=15.9):
    """Alternating long notes and runs of short notes.

    Total duration lands in [target_seconds, cap_seconds) so every take
    chunks into exactly four 4 s windows.
    """
    notes = []
    total = 0.0
    while total < target_seconds:
        dur = float(rng.uniform(1.3, 1.9))
        if total + dur > cap_seconds:
            break
        midi = TONIC_MIDI + int(rng.choice(DEGREES))
        notes.append([midi, round(dur, 3)])
        total += dur
        for _ in range(int(rng.integers(3, 6))):
            if total >= target_seconds:
                break
            dur = float(rng.uniform(0.22, 0.30))
            midi = TONIC_MIDI + int(rng.choice(DEGREES))
            notes.append([midi, round(dur, 3)])
            total += dur
        if total < target_seconds:
            notes.append([None, 0.25])
            total += 0.25
    while total < target_seconds:
        dur = float(rng.uniform(0.22, 0.30))
        midi = TONIC_MIDI + int(rng.choice(DEGREES))
        notes.append([midi, round(dur, 3)])
        total += dur
    return notes


def nn_corpus_recipe(seed=1):
    """Fifty ~16 s pairs where the same pitch offset is a mistake only in
    context: annotated on held notes, unannotated on short passing notes.

    A frame-local threshold cannot separate the two; temporal context can.
    """
    rng = np.random.default_rng(seed)
    lessons = []
    for li in range(10):
        lessons.append(
            {
                "id": f"lesson{li + 1:02d}",
                "tonic_hz": TONIC,
                "bpm": 80,
                "tala": "adi",
                "notes": _context_lesson_notes(rng),
            }
        )

    takes = []
    for learner in [f"learner{k}" for k in range(1, 6)]:
        for lesson in lessons:
            spans = _note_spans(lesson["notes"])
            long_spans = [s for s in spans if s[1] - s[0] >= 1.0]
            short_spans = [s for s in spans if s[1] - s[0] <= 0.35]
            n_long = min(int(rng.integers(2, 4)), len(long_spans))
            n_short = min(int(rng.integers(3, 6)), len(short_spans))
            faults = []
            for pick in rng.choice(len(long_spans), size=n_long, replace=False):
                s, e, _ = long_spans[pick]
                sign = 1.0 if rng.random() < 0.5 else -1.0
                faults.append(
                    {
                        "start": round(s + 0.10, 3),
                        "end": round(e - 0.10, 3),
                        "class": "F",
                        "cents": float(sign * rng.uniform(45.0, 75.0)),
                    }
                )
            for pick in rng.choice(len(short_spans), size=n_short, replace=False):
                s, e, _ = short_spans[pick]
                sign = 1.0 if rng.random() < 0.5 else -1.0
                faults.append(
                    {
                        "start": round(s + 0.02, 3),
                        "end": round(e - 0.02, 3),
                        "class": "F",
                        "cents": float(sign * rng.uniform(45.0, 75.0)),
                        "annotated": False,
                    }
                )
            takes.append(
                {
                    "learner": learner,
                    "lesson": lesson["id"],
                    "jitter_cents": 3.0,
                    "faults": faults,
                }
            )
    return {"sample_rate": 22050, "amplitude": 0.1, "lessons": lessons, "takes": takes}
