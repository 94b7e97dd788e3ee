"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just enough machinery for 1-D convolutional frame classifiers: tensors
record their parents and a backward closure, and ``Tensor.backward`` walks
the tape in reverse topological order. Everything is float64; shapes
follow the (batch, channels, time) convention.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError

PROB_CLAMP = 1e-7


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() starts from a scalar loss")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p for p in parents if p.requires_grad)
        out._backward_fn = backward_fn
    return out


def _accumulate(t: Tensor, grad: np.ndarray) -> None:
    if not t.requires_grad:
        return
    t.grad = grad if t.grad is None else t.grad + grad


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    # Sum gradient over axes the forward pass broadcast.
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data + b.data

    def backward(gy):
        _accumulate(a, _unbroadcast(gy, a.data.shape))
        _accumulate(b, _unbroadcast(gy, b.data.shape))

    return _make(out_data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data * b.data

    def backward(gy):
        _accumulate(a, _unbroadcast(gy * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(gy * a.data, b.data.shape))

    return _make(out_data, (a, b), backward)


def reshape(x: Tensor, shape) -> Tensor:
    x = _as_tensor(x)
    old_shape = x.data.shape

    def backward(gy):
        _accumulate(x, gy.reshape(old_shape))

    return _make(x.data.reshape(shape), (x,), backward)


def relu(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    active = x.data > 0

    def backward(gy):
        _accumulate(x, gy * active)

    return _make(np.where(active, x.data, 0.0), (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    y = np.empty_like(x.data)
    pos = x.data >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
    ex = np.exp(x.data[~pos])
    y[~pos] = ex / (1.0 + ex)

    def backward(gy):
        _accumulate(x, gy * y * (1.0 - y))

    return _make(y, (x,), backward)


def conv1d(x: Tensor, weight: Tensor, bias: Tensor, dilation: int = 1) -> Tensor:
    """Same-padded 1-D convolution: (B, C_in, T) -> (B, C_out, T).

    weight is (C_out, C_in, K); zero padding of dilation*(K-1)/2 on both
    sides keeps the frame count, so K must be odd.
    """
    x, weight, bias = _as_tensor(x), _as_tensor(weight), _as_tensor(bias)
    c_out, c_in, k = weight.data.shape
    if k % 2 == 0:
        raise ValueError(f"kernel size must be odd for same padding, got {k}")
    if x.data.ndim != 3 or x.data.shape[1] != c_in:
        raise ValueError(
            f"input shape {x.data.shape} incompatible with weight {weight.data.shape}"
        )
    b_sz, _, t = x.data.shape
    pad = dilation * (k - 1) // 2
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad)))
    out = np.broadcast_to(bias.data[None, :, None], (b_sz, c_out, t)).copy()
    for tap in range(k):
        seg = xp[:, :, tap * dilation : tap * dilation + t]
        out += np.einsum("oi,bit->bot", weight.data[:, :, tap], seg)

    def backward(gy):
        if weight.requires_grad or bias.requires_grad:
            gw = np.empty_like(weight.data)
            for tap in range(k):
                seg = xp[:, :, tap * dilation : tap * dilation + t]
                gw[:, :, tap] = np.einsum("bot,bit->oi", gy, seg)
            _accumulate(weight, gw)
            _accumulate(bias, gy.sum(axis=(0, 2)))
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for tap in range(k):
                gxp[:, :, tap * dilation : tap * dilation + t] += np.einsum(
                    "oi,bot->bit", weight.data[:, :, tap], gy
                )
            _accumulate(x, gxp[:, :, pad : pad + t] if pad else gxp)

    return _make(out, (x, weight, bias), backward)


def maxpool1d(x: Tensor, size: int, stride: int, same_pad: bool = False) -> Tensor:
    """Max pooling along time. same_pad keeps T (stride must be 1); without
    it T must divide evenly by the stride."""
    x = _as_tensor(x)
    b_sz, c, t = x.data.shape
    if same_pad:
        if stride != 1 or size % 2 == 0:
            raise ValueError("same-padded pooling needs stride 1 and odd size")
        pad = (size - 1) // 2
        xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad)), constant_values=-np.inf)
    else:
        pad = 0
        if t % stride != 0:
            raise ValueError(f"length {t} not divisible by pool stride {stride}")
        xp = x.data
    windows = np.lib.stride_tricks.sliding_window_view(xp, size, axis=2)[:, :, ::stride, :]
    win_arg = windows.argmax(axis=3)
    out = np.take_along_axis(windows, win_arg[..., None], axis=3)[..., 0]
    t_out = out.shape[2]
    src = np.arange(t_out)[None, None, :] * stride + win_arg - pad

    def backward(gy):
        gx = np.zeros((b_sz * c, t))
        rows = np.repeat(np.arange(b_sz * c), t_out)
        np.add.at(gx, (rows, src.reshape(-1)), gy.reshape(-1))
        _accumulate(x, gx.reshape(b_sz, c, t))

    return _make(np.ascontiguousarray(out), (x,), backward)


def upsample2(x: Tensor) -> Tensor:
    """Nearest-neighbor time upsampling by 2."""
    x = _as_tensor(x)
    b_sz, c, t = x.data.shape

    def backward(gy):
        _accumulate(x, gy.reshape(b_sz, c, t, 2).sum(axis=3))

    return _make(np.repeat(x.data, 2, axis=2), (x,), backward)


def batchnorm_train(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5):
    """Batch-statistics normalization over (B, T) per channel.

    Returns (out, batch_mean, batch_var); the stats are plain arrays for
    the caller's running-average buffers and sit outside the tape.
    """
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    b_sz, c, t = x.data.shape
    n = b_sz * t
    mean = x.data.mean(axis=(0, 2))
    var = x.data.var(axis=(0, 2))
    inv_std = 1.0 / np.sqrt(var + eps)
    xmu = x.data - mean[None, :, None]
    xhat = xmu * inv_std[None, :, None]
    out = gamma.data[None, :, None] * xhat + beta.data[None, :, None]

    def backward(gy):
        _accumulate(beta, gy.sum(axis=(0, 2)))
        _accumulate(gamma, (gy * xhat).sum(axis=(0, 2)))
        if x.requires_grad:
            dxhat = gy * gamma.data[None, :, None]
            dvar = (dxhat * xmu).sum(axis=(0, 2)) * -0.5 * inv_std**3
            dmean = -(dxhat.sum(axis=(0, 2)) * inv_std) + dvar * -2.0 * xmu.sum(
                axis=(0, 2)
            ) / n
            gx = (
                dxhat * inv_std[None, :, None]
                + (dvar * 2.0 / n)[None, :, None] * xmu
                + (dmean / n)[None, :, None]
            )
            _accumulate(x, gx)

    return _make(out, (x, gamma, beta), backward), mean, var


def batchnorm_infer(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    eps: float = 1e-5,
) -> Tensor:
    inv_std = 1.0 / np.sqrt(running_var + eps)
    c = len(running_mean)
    shifted = add(x, Tensor(-running_mean[None, :, None]))
    scaled = mul(shifted, Tensor(inv_std[None, :, None]))
    return add(
        mul(scaled, reshape(gamma, (1, c, 1))), reshape(beta, (1, c, 1))
    )


def weighted_bce(
    probs: Tensor,
    targets: np.ndarray,
    w0: float,
    w1: float,
    mask: np.ndarray | None = None,
) -> Tensor:
    """Class-weighted binary cross-entropy, averaged over unmasked frames.

    Probabilities are clamped to [1e-7, 1 - 1e-7]; clamped entries get zero
    gradient. Masked-out frames contribute neither to the sum nor to the
    averaging denominator.
    """
    probs = _as_tensor(probs)
    y = np.asarray(targets, dtype=np.float64)
    if probs.data.shape != y.shape:
        raise ValueError(f"shape mismatch: probs {probs.data.shape}, targets {y.shape}")
    if mask is None:
        m = np.ones_like(y)
    else:
        m = np.asarray(mask, dtype=np.float64)
        if m.shape != y.shape:
            raise ValueError(f"mask shape {m.shape} != {y.shape}")
    n_valid = m.sum()
    if n_valid == 0:
        raise ValueError("all frames are masked out")

    p = np.clip(probs.data, PROB_CLAMP, 1.0 - PROB_CLAMP)
    terms = -(w1 * y * np.log(p) + w0 * (1.0 - y) * np.log1p(-p))
    loss = float((terms * m).sum() / n_valid)
    if not np.isfinite(loss):
        raise NumericalError("non-finite loss value")

    def backward(gy):
        g = -(w1 * y / p - w0 * (1.0 - y) / (1.0 - p)) * m / n_valid
        g = np.where(probs.data == p, g, 0.0)
        _accumulate(probs, gy * g)

    return _make(np.float64(loss), (probs,), backward)
