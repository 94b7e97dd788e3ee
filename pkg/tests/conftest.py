import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpora import nn_corpus_recipe, rb_corpus_recipe

from mistake_detect.corpus import build_index
from mistake_detect.synth import SynthNote, SynthRecipe, write_synth_corpus

# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rb_corpus(tmp_path_factory):
    """Rendered 30-pair corpus with separable faults; returns its index."""
    root = tmp_path_factory.mktemp("rb_corpus")
    write_synth_corpus(root, rb_corpus_recipe(seed=0), seed=0)
    return build_index(root)


@pytest.fixture(scope="session")
def nn_corpus(tmp_path_factory):
    """Rendered 50-pair corpus with context-dependent faults."""
    root = tmp_path_factory.mktemp("nn_corpus")
    write_synth_corpus(root, nn_corpus_recipe(seed=1), seed=0)
    return build_index(root)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Tiny 2-lesson, 2-learner corpus for CLI and dataset tests."""
    rng = np.random.default_rng(5)
    lessons = []
    for li in range(2):
        notes = []
        for n in range(6):
            notes.append([59 + int(rng.integers(0, 9)), 0.6])
            if n == 2:
                notes.append([None, 0.2])
        lessons.append(
            {"id": f"l{li + 1}", "tonic_hz": 220.0, "bpm": 80, "tala": "adi", "notes": notes}
        )
    takes = []
    for learner in ("uma", "vani"):
        for li in range(2):
            takes.append(
                {
                    "learner": learner,
                    "lesson": f"l{li + 1}",
                    "faults": [
                        {"start": 0.7, "end": 1.1, "class": "F", "cents": 60.0},
                        {"start": 2.1, "end": 2.5, "class": "A", "gain": 0.25},
                    ],
                }
            )
    spec = {"sample_rate": 22050, "amplitude": 0.1, "lessons": lessons, "takes": takes}
    root = tmp_path_factory.mktemp("small_corpus")
    write_synth_corpus(root, spec, seed=0)
    return build_index(root)


@pytest.fixture
def tone_recipe():
    """Single held note, handy for feature-level tests."""
    return SynthRecipe(notes=[SynthNote(62, 2.0)], tonic=220.0)
