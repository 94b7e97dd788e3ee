"""Estimator-style front ends for the two detector families.

Both follow the fit/predict convention: X is a list of stacked (C, T)
teacher+learner feature arrays, y a list of (T,) binary label vectors,
and masks mark which frames count.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .nn import build_cnn, build_tcn
from .rules import detect_with_threshold, grid_search_threshold
from .standardize import Standardizer
from .training import (
    TrainConfig,
    compute_class_weights,
    predict as nn_predict,
    threshold_frames,
    train,
)


class RuleBasedDetector(BaseEstimator):
    """Per-frame thresholding with the threshold grid-searched at fit time.

    Expects (2, T) inputs: channel 0 teacher, channel 1 learner, in
    tonic-normalized pitch for class F or log energy for class A.
    """

    def __init__(
        self,
        mistake_class: str = "F",
        grid=None,
        collar_c: int = 8,
        distance: str = "abs",
    ):
        self.mistake_class = mistake_class
        self.grid = grid
        self.collar_c = collar_c
        self.distance = distance

    def fit(self, X, y, mask=None):
        samples = []
        for i, x in enumerate(X):
            x = np.asarray(x)
            if x.ndim != 2 or x.shape[0] != 2:
                raise ValueError(f"expected (2, T) features, got {x.shape}")
            m = None if mask is None else mask[i]
            samples.append((x[0], x[1], np.asarray(y[i]), m))
        self.threshold_, self.train_f1_ = grid_search_threshold(
            samples,
            self.mistake_class,
            grid=self.grid,
            collar_c=self.collar_c,
            distance=self.distance,
        )
        return self

    def predict_one(self, x: np.ndarray) -> np.ndarray:
        if not hasattr(self, "threshold_"):
            raise ValueError("detector is not fitted")
        x = np.asarray(x)
        return detect_with_threshold(
            x[0], x[1], self.mistake_class, self.threshold_, distance=self.distance
        )

    def predict(self, X) -> list[np.ndarray]:
        return [self.predict_one(x) for x in X]

    def predict_proba(self, X) -> list[np.ndarray]:
        # Hard decisions double as degenerate probabilities.
        return [p.astype(np.float64) for p in self.predict(X)]


class NeuralDetector(BaseEstimator):
    """Trainable frame classifier over stacked features.

    fit standardizes per channel on the training set (optionally treating
    ``sentinel`` as out-of-distribution), derives inverse-frequency class
    weights, and trains with early stopping against the provided
    validation set; without one, it validates on the training set itself,
    which is the overfit regime used by capacity tests.
    """

    def __init__(
        self,
        arch: str = "tcn",
        learning_rate: float = 0.001,
        batch_size: int = 32,
        max_epochs: int = 100,
        patience: int = 10,
        seed: int = 0,
        threshold: float = 0.5,
        sentinel: float | None = None,
    ):
        self.arch = arch
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed
        self.threshold = threshold
        self.sentinel = sentinel

    def fit(self, X, y, mask=None, X_val=None, y_val=None, val_mask=None):
        if self.arch not in ("cnn", "tcn"):
            raise ValueError(f"arch must be 'cnn' or 'tcn', got {self.arch!r}")
        X = [np.asarray(x, dtype=np.float64) for x in X]
        if not X:
            raise ValueError("empty training set")
        in_channels = X[0].shape[0]

        self.scaler_ = Standardizer(sentinel=self.sentinel).fit(X)
        x_train = self.scaler_.transform(X)
        if X_val is None:
            x_val, yv, mv = x_train, y, mask
        else:
            x_val = self.scaler_.transform([np.asarray(v, dtype=np.float64) for v in X_val])
            yv, mv = y_val, val_mask

        w0, w1 = compute_class_weights(y, mask)
        builder = build_cnn if self.arch == "cnn" else build_tcn
        model = builder(in_channels, seed=self.seed)
        config = TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            w0=w0,
            w1=w1,
            seed=self.seed,
        )
        train_samples = [
            (x_train[i], y[i], None if mask is None else mask[i])
            for i in range(len(x_train))
        ]
        val_samples = [
            (x_val[i], yv[i], None if mv is None else mv[i])
            for i in range(len(x_val))
        ]
        self.model_, self.report_ = train(model, train_samples, val_samples, config)
        self.class_weights_ = (w0, w1)
        return self

    def predict_proba(self, X) -> list[np.ndarray]:
        if not hasattr(self, "model_"):
            raise ValueError("detector is not fitted")
        return [
            nn_predict(self.model_, self.scaler_.transform(np.asarray(x, dtype=np.float64)))
            for x in X
        ]

    def predict(self, X) -> list[np.ndarray]:
        return [threshold_frames(p, self.threshold) for p in self.predict_proba(X)]
