"""Bit-exact on-disk cache for extracted frame features.

One ``.npz`` container per recording. Each named series stores its value
array plus hop/window, and a JSON header records the extractor version so
stale caches can be detected.
"""

from __future__ import annotations

import json
import zipfile
from pathlib import Path

import numpy as np

from .errors import DataError
from .frames import FrameSeries

FEATURE_VERSION = 1


def save_features(
    path: str | Path, features: dict[str, FrameSeries], extra: dict | None = None
) -> None:
    header = {
        "version": FEATURE_VERSION,
        "series": {
            name: {"hop": fs.hop, "window": fs.window} for name, fs in features.items()
        },
        "extra": extra or {},
    }
    arrays = {f"values_{name}": fs.values for name, fs in features.items()}
    arrays["header"] = np.frombuffer(
        json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_features(path: str | Path) -> tuple[dict[str, FrameSeries], dict]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such feature cache")
    try:
        archive = np.load(path)
    except (ValueError, OSError, zipfile.BadZipFile) as exc:
        raise DataError(f"{path}: not a readable feature cache ({exc})")
    with archive as data:
        try:
            header = json.loads(bytes(data["header"]).decode("utf-8"))
        except (KeyError, ValueError):
            raise DataError(f"{path}: missing or corrupt feature-cache header")
        if header.get("version") != FEATURE_VERSION:
            raise DataError(
                f"{path}: cache version {header.get('version')} != {FEATURE_VERSION}"
            )
        features = {}
        for name, meta in header["series"].items():
            key = f"values_{name}"
            if key not in data:
                raise DataError(f"{path}: header names series {name!r} but array is missing")
            features[name] = FrameSeries(
                values=data[key], hop=meta["hop"], window=meta["window"]
            )
    return features, header.get("extra", {})
