"""Mini-batch training loop with Adam and early stopping."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, weighted_bce
from .errors import NumericalError
from .nn import NeuralModel


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    w0: float = 1.0
    w1: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.learning_rate, self.batch_size, self.max_epochs, self.w0, self.w1) <= 0:
            raise ValueError("config values must be positive")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")


@dataclass
class TrainReport:
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    best_val_loss: float = float("inf")

    def format_lines(self) -> str:
        lines = ["epoch\ttrain_loss\tval_loss"]
        for i, (tr, va) in enumerate(zip(self.train_losses, self.val_losses), start=1):
            lines.append(f"{i}\t{tr!r}\t{va!r}")
        lines.append(f"# stopped_epoch={self.stopped_epoch}")
        lines.append(f"# best_epoch={self.best_epoch}")
        lines.append(f"# best_val_loss={self.best_val_loss!r}")
        return "".join(line + "\n" for line in lines)


class Adam:
    def __init__(self, params, lr: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = [p for _, p in params] if params and isinstance(params[0], tuple) else list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1**self.t)
            v_hat = self.v[i] / (1 - self.beta2**self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


def compute_class_weights(labels, masks=None) -> tuple[float, float]:
    """Inverse-frequency weights (w0, w1) from pooled unmasked frames."""
    total, positive = 0.0, 0.0
    for i, y in enumerate(labels):
        y = np.asarray(y, dtype=np.float64)
        m = np.ones_like(y) if masks is None or masks[i] is None else np.asarray(
            masks[i], dtype=np.float64
        )
        total += m.sum()
        positive += (y * m).sum()
    if total == 0:
        raise ValueError("no unmasked frames to weight")
    freq1 = min(max(positive / total, 1e-6), 1.0 - 1e-6)
    return 1.0 / (1.0 - freq1), 1.0 / freq1


def _normalize_samples(samples):
    out = []
    for item in samples:
        x, y = np.asarray(item[0], dtype=np.float64), np.asarray(item[1], dtype=np.float64)
        m = None
        if len(item) > 2 and item[2] is not None:
            m = np.asarray(item[2], dtype=np.float64)
        if m is None:
            m = np.ones_like(y)
        if x.ndim != 2 or y.ndim != 1 or x.shape[1] != y.shape[0] or m.shape != y.shape:
            raise ValueError(
                f"sample shapes disagree: x {x.shape}, y {y.shape}, mask {m.shape}"
            )
        out.append((x, y, m))
    return out


def _content_digest(sample) -> str:
    h = hashlib.sha256()
    for arr in sample:
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def _batch_loss(model: NeuralModel, batch, w0, w1, training: bool) -> Tensor:
    xs = np.stack([s[0] for s in batch])
    ys = np.stack([s[1] for s in batch])
    ms = np.stack([s[2] for s in batch])
    probs = model.forward(Tensor(xs), training=training)
    return weighted_bce(probs, ys, w0, w1, ms)


def evaluate_loss(model: NeuralModel, samples, w0: float, w1: float,
                  batch_size: int = 32) -> float:
    """Weighted BCE over a sample set with the model in inference mode."""
    samples = _normalize_samples(samples)
    total, weight = 0.0, 0.0
    for b in range(0, len(samples), batch_size):
        batch = samples[b : b + batch_size]
        n_valid = sum(float(s[2].sum()) for s in batch)
        if n_valid == 0:
            continue
        loss = float(_batch_loss(model, batch, w0, w1, training=False).data)
        total += loss * n_valid
        weight += n_valid
    if weight == 0:
        raise ValueError("no unmasked frames to evaluate")
    return total / weight


def train(
    model: NeuralModel,
    train_samples,
    val_samples,
    config: TrainConfig,
) -> tuple[NeuralModel, TrainReport]:
    """Optimize in place; the returned model carries the best-validation
    parameters, not the final ones.

    Samples are (features (C, T), labels (T,), optional mask (T,)) tuples.
    Batch order is reshuffled each epoch from the config seed alone; the
    incoming sample order is canonicalized by content digest first, so two
    permutations of the same training set train identically.
    """
    train_set = _normalize_samples(train_samples)
    val_set = _normalize_samples(val_samples)
    if not train_set or not val_set:
        raise ValueError("train and validation sets must both be non-empty")
    lengths = {s[0].shape[1] for s in train_set} | {s[0].shape[1] for s in val_set}
    if len(lengths) > 1:
        raise ValueError(f"all samples must share a frame count, got {sorted(lengths)}")

    train_set = sorted(train_set, key=_content_digest)
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(model.parameters(), lr=config.learning_rate)

    report = TrainReport()
    best_state = model.state_arrays()
    epochs_since_best = 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train_set))
        batch_losses = []
        for bi, b in enumerate(range(0, len(order), config.batch_size)):
            batch = [train_set[i] for i in order[b : b + config.batch_size]]
            optimizer.zero_grad()
            try:
                loss = _batch_loss(model, batch, config.w0, config.w1, training=True)
            except NumericalError as exc:
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch {bi}"
                ) from exc
            loss.backward()
            optimizer.step()
            batch_losses.append(float(loss.data))
        report.train_losses.append(float(np.mean(batch_losses)))

        val_loss = evaluate_loss(model, val_set, config.w0, config.w1, config.batch_size)
        report.val_losses.append(val_loss)
        if val_loss < report.best_val_loss:
            report.best_val_loss = val_loss
            report.best_epoch = epoch
            best_state = model.state_arrays()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
        report.stopped_epoch = epoch
        if epochs_since_best >= config.patience:
            break

    model.load_state(best_state)
    return model, report


def predict(model: NeuralModel, features: np.ndarray) -> np.ndarray:
    """(C, T) features -> (T,) frame probabilities, inference mode."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError(f"expected (C, T) features, got shape {features.shape}")
    return model.forward(features[None], training=False).data[0]


def threshold_frames(probs: np.ndarray, tau: float = 0.5) -> np.ndarray:
    return (np.asarray(probs) >= tau).astype(np.uint8)
