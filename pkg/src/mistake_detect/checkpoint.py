"""Self-describing model checkpoints."""

from __future__ import annotations

import json
import zipfile
from pathlib import Path

import numpy as np

from .errors import DataError
from .nn import NeuralModel, build_cnn, build_tcn
from .standardize import StandardizationStats

CHECKPOINT_VERSION = 1
_BUILDERS = {"cnn": build_cnn, "tcn": build_tcn}


def save_checkpoint(
    path: str | Path,
    model: NeuralModel,
    stats: StandardizationStats | None = None,
    extra: dict | None = None,
) -> None:
    header = {
        "version": CHECKPOINT_VERSION,
        "arch": model.arch,
        "in_channels": model.in_channels,
        "has_stats": stats is not None,
        "extra": extra or {},
    }
    arrays = {f"state_{k}": v for k, v in model.state_arrays().items()}
    if stats is not None:
        arrays["std_mean"] = stats.mean
        arrays["std_std"] = stats.std
    arrays["header"] = np.frombuffer(
        json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(
    path: str | Path, expect_arch: str | None = None
) -> tuple[NeuralModel, StandardizationStats | None, dict]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such checkpoint")
    try:
        data = np.load(path)
    except (ValueError, OSError, zipfile.BadZipFile) as exc:
        raise DataError(f"{path}: not a readable checkpoint ({exc})")
    with data:
        try:
            header = json.loads(bytes(data["header"]).decode("utf-8"))
        except (KeyError, ValueError):
            raise DataError(f"{path}: missing or corrupt checkpoint header")
        arch = header.get("arch")
        if arch not in _BUILDERS:
            raise DataError(f"{path}: unknown architecture tag {arch!r}")
        if expect_arch is not None and arch != expect_arch:
            raise DataError(
                f"{path}: checkpoint is for {arch!r}, expected {expect_arch!r}"
            )
        model = _BUILDERS[arch](int(header["in_channels"]))
        state = {
            k[len("state_") :]: data[k] for k in data.files if k.startswith("state_")
        }
        try:
            model.load_state(state)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}")
        stats = None
        if header.get("has_stats"):
            stats = StandardizationStats(
                mean=data["std_mean"].copy(), std=data["std_std"].copy()
            )
    return model, stats, header.get("extra", {})
