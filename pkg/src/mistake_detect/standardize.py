"""Per-channel feature standardization fitted on a training split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

STD_FLOOR = 1e-6


@dataclass(frozen=True)
class StandardizationStats:
    """Per-channel mean/std. Immutable once fitted."""

    mean: np.ndarray
    std: np.ndarray


def _as_2d(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 1:
        return arr[None, :]
    if arr.ndim == 2:
        return arr
    raise ValueError(f"expected a (T,) or (C, T) array, got shape {arr.shape}")


class Standardizer(TransformerMixin, BaseEstimator):
    """Zero-mean unit-variance scaling of (C, T) feature arrays.

    ``sentinel`` marks a categorical placeholder value (the unvoiced pitch
    marker): entries equal to it are excluded when fitting and emitted
    unchanged when transforming. Standard deviations are floored at 1e-6 so
    constant channels scale to zero rather than exploding.

    Parameters
    ----------
    sentinel : float or None
        Value to treat as out-of-distribution, or None to use every entry.
    """

    def __init__(self, sentinel: float | None = None):
        self.sentinel = sentinel

    def fit(self, X, y=None):
        """Fit per-channel stats over a list of (C, T) arrays or one array."""
        arrays = [X] if isinstance(X, np.ndarray) else list(X)
        if not arrays:
            raise ValueError("cannot fit a standardizer on an empty collection")
        arrays = [_as_2d(a) for a in arrays]
        n_channels = arrays[0].shape[0]
        for a in arrays:
            if a.shape[0] != n_channels:
                raise ValueError("all arrays must share a channel count")
        mean = np.zeros(n_channels)
        std = np.zeros(n_channels)
        for c in range(n_channels):
            chans = [a[c] for a in arrays]
            if self.sentinel is not None:
                chans = [v[v != self.sentinel] for v in chans]
            pooled = np.concatenate(chans) if chans else np.array([])
            if pooled.size == 0:
                mean[c], std[c] = 0.0, 1.0
            else:
                mean[c] = pooled.mean()
                std[c] = max(pooled.std(), STD_FLOOR)
        self.stats_ = StandardizationStats(mean=mean, std=std)
        return self

    def transform(self, X):
        """Scale one array or a list of arrays; sentinels pass through."""
        if not hasattr(self, "stats_"):
            raise ValueError("standardizer is not fitted")
        if isinstance(X, np.ndarray):
            return self._transform_one(X)
        return [self._transform_one(a) for a in X]

    def _transform_one(self, arr: np.ndarray) -> np.ndarray:
        orig_1d = np.asarray(arr).ndim == 1
        arr = _as_2d(arr)
        stats = self.stats_
        out = (arr - stats.mean[:, None]) / stats.std[:, None]
        if self.sentinel is not None:
            keep = arr == self.sentinel
            out[keep] = self.sentinel
        return out[0] if orig_1d else out


def fit_standardizer(train_features, sentinel: float | None = None) -> StandardizationStats:
    return Standardizer(sentinel=sentinel).fit(train_features).stats_


def apply_standardizer(
    stats: StandardizationStats, features: np.ndarray, sentinel: float | None = None
) -> np.ndarray:
    scaler = Standardizer(sentinel=sentinel)
    scaler.stats_ = stats
    return scaler.transform(features)
