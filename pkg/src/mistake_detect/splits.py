"""Train/validation/test split scenarios over a dataset index.

Scenario 1 shuffles recording pairs freely. Scenario 2 keeps each learner
inside a single split. Scenarios 3 and 4 cut each learner's lessons
chronologically: 3 trains on the earliest lessons, 4 on the latest.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .corpus import DatasetIndex
from .errors import DataError

TRAIN_FRACTION = 0.70
TEST_FRACTION = 0.15

PairKey = tuple[str, str]


def natural_key(text: str):
    """Sort key treating digit runs as numbers, so lesson2 < lesson10."""
    parts = re.split(r"(\d+)", text)
    return tuple(
        (0, int(p)) if p.isdigit() else (1, p) for p in parts if p != ""
    )


def split_counts(n: int) -> tuple[int, int, int]:
    """(train, val, test) counts for n items at a 70:15:15 ratio.

    Rounds half away from zero; validation absorbs the remainder so the
    three always sum to n.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    n_train = int(np.floor(TRAIN_FRACTION * n + 0.5))
    n_test = int(np.floor(TEST_FRACTION * n + 0.5))
    n_val = n - n_train - n_test
    if n_val < 0:
        n_test += n_val
        n_val = 0
    return n_train, n_val, n_test


@dataclass
class SplitPlan:
    scenario: int
    seed: int
    train: list[PairKey] = field(default_factory=list)
    val: list[PairKey] = field(default_factory=list)
    test: list[PairKey] = field(default_factory=list)

    def all_keys(self) -> list[PairKey]:
        return sorted(self.train + self.val + self.test)

    def digest(self) -> str:
        payload = json.dumps(
            {
                "scenario": self.scenario,
                "seed": self.seed,
                "train": sorted(self.train),
                "val": sorted(self.val),
                "test": sorted(self.test),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _cut(keys: list[PairKey]) -> tuple[list[PairKey], list[PairKey], list[PairKey]]:
    n_train, n_val, _ = split_counts(len(keys))
    return (
        keys[:n_train],
        keys[n_train : n_train + n_val],
        keys[n_train + n_val :],
    )


def _scenario_random(keys: list[PairKey], rng: np.random.Generator):
    order = rng.permutation(len(keys))
    return _cut([keys[i] for i in order])


def _scenario_learner_disjoint(index: DatasetIndex, rng: np.random.Generator):
    learners = index.learner_ids()
    if len(learners) < 3:
        raise DataError(
            f"learner-disjoint split needs at least 3 learners, found {len(learners)}"
        )
    by_learner = {lid: [] for lid in learners}
    for key in index.pair_keys():
        by_learner[key[0]].append(key)

    order = [learners[i] for i in rng.permutation(len(learners))]
    n_train, n_val, _ = split_counts(len(index))
    train: list[PairKey] = []
    val: list[PairKey] = []
    test: list[PairKey] = []
    for pos, learner in enumerate(order):
        left_after = len(order) - pos - 1
        if len(train) < n_train and left_after >= 2:
            train.extend(by_learner[learner])
        elif len(val) < max(n_val, 1) and left_after >= 1:
            val.extend(by_learner[learner])
        else:
            test.extend(by_learner[learner])
    return train, val, test


def _scenario_chronological(index: DatasetIndex, latest_first: bool):
    train: list[PairKey] = []
    val: list[PairKey] = []
    test: list[PairKey] = []
    by_learner: dict[str, list[PairKey]] = {}
    for key in index.pair_keys():
        by_learner.setdefault(key[0], []).append(key)
    for learner in sorted(by_learner):
        keys = sorted(by_learner[learner], key=lambda k: natural_key(k[1]))
        if latest_first:
            keys = keys[::-1]
        tr, va, te = _cut(keys)
        train.extend(tr)
        val.extend(va)
        test.extend(te)
    return train, val, test


def make_splits(index: DatasetIndex, scenario: int, seed: int = 0) -> SplitPlan:
    """Partition every pair in the index into train/val/test."""
    if len(index) == 0:
        raise DataError("cannot split an empty index")
    rng = np.random.default_rng(seed)
    keys = index.pair_keys()
    if scenario == 1:
        train, val, test = _scenario_random(keys, rng)
    elif scenario == 2:
        train, val, test = _scenario_learner_disjoint(index, rng)
    elif scenario == 3:
        train, val, test = _scenario_chronological(index, latest_first=False)
    elif scenario == 4:
        train, val, test = _scenario_chronological(index, latest_first=True)
    else:
        raise ValueError(f"scenario must be 1..4, got {scenario}")
    return SplitPlan(scenario=scenario, seed=seed, train=train, val=val, test=test)
