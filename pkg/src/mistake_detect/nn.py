"""Neural frame classifiers assembled from the autodiff ops.

Two architectures, both mapping (B, C, T) feature stacks to (B, T) frame
probabilities: a plain convolutional stack whose stride-1 pooling keeps
frame resolution, and an encoder/decoder with dilated convolutions whose
pooling halves time three times before nearest-neighbor upsampling
restores it.
"""

from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

CNN_FILTERS = (8, 16, 32, 32, 8)
TCN_ENCODER = ((8, 1), (16, 2), (32, 4))
TCN_DECODER = ((32, 4), (16, 2), (8, 1))
KERNEL = 3
BN_MOMENTUM = 0.9
BN_EPS = 1e-5
VALID_CHANNELS = (2, 24)
# Encoder halves time 3x, so inputs are padded to a multiple of this.
TCN_TIME_MULTIPLE = 8


class Conv1d:
    def __init__(self, c_in: int, c_out: int, kernel: int, dilation: int, rng):
        bound = 1.0 / math.sqrt(c_in * kernel)
        self.weight = Tensor(
            rng.uniform(-bound, bound, (c_out, c_in, kernel)), requires_grad=True
        )
        self.bias = Tensor(rng.uniform(-bound, bound, c_out), requires_grad=True)
        self.dilation = dilation

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return ad.conv1d(x, self.weight, self.bias, self.dilation)

    def parameters(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def buffers(self):
        return []


class BatchNorm1d:
    def __init__(self, channels: int, momentum: float = BN_MOMENTUM, eps: float = BN_EPS):
        self.gamma = Tensor(np.ones(channels), requires_grad=True)
        self.beta = Tensor(np.zeros(channels), requires_grad=True)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        if training:
            out, mean, var = ad.batchnorm_train(x, self.gamma, self.beta, self.eps)
            self.running_mean = self.momentum * self.running_mean + (1 - self.momentum) * mean
            self.running_var = self.momentum * self.running_var + (1 - self.momentum) * var
            return out
        return ad.batchnorm_infer(
            x, self.gamma, self.beta, self.running_mean, self.running_var, self.eps
        )

    def parameters(self):
        return [("gamma", self.gamma), ("beta", self.beta)]

    def buffers(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        setattr(self, name, np.asarray(value, dtype=np.float64))


class ReLU:
    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return ad.relu(x)

    def parameters(self):
        return []

    def buffers(self):
        return []


class Sigmoid:
    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return ad.sigmoid(x)

    def parameters(self):
        return []

    def buffers(self):
        return []


class MaxPool1d:
    def __init__(self, size: int, stride: int, same_pad: bool):
        self.size = size
        self.stride = stride
        self.same_pad = same_pad

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return ad.maxpool1d(x, self.size, self.stride, self.same_pad)

    def parameters(self):
        return []

    def buffers(self):
        return []


class Upsample2:
    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return ad.upsample2(x)

    def parameters(self):
        return []

    def buffers(self):
        return []


class NeuralModel:
    """Ordered layer stack with named parameters and an architecture tag."""

    def __init__(self, arch: str, in_channels: int, layers: list[tuple[str, object]]):
        self.arch = arch
        self.in_channels = in_channels
        self.layers = layers

    def forward(self, x, training: bool = False) -> Tensor:
        """(B, C, T) features -> (B, T) probabilities in (0, 1)."""
        data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
        if data.ndim != 3 or data.shape[1] != self.in_channels:
            raise ValueError(
                f"expected (B, {self.in_channels}, T) input, got {data.shape}"
            )
        t_in = data.shape[2]
        if self.arch == "tcn":
            short = (-t_in) % TCN_TIME_MULTIPLE
            if short:
                data = np.pad(data, ((0, 0), (0, 0), (0, short)))
        h = x if isinstance(x, Tensor) and data.shape[2] == t_in else Tensor(data)
        for _, layer in self.layers:
            h = layer(h, training)
        out = ad.reshape(h, (h.shape[0], h.shape[2]))
        if out.shape[1] != t_in:
            # Drop the frames produced by internal padding.
            full = out
            out = Tensor(full.data[:, :t_in])
            if full.requires_grad:
                out.requires_grad = True
                out._parents = (full,)

                def backward(gy, full=full, t_in=t_in):
                    g = np.zeros_like(full.data)
                    g[:, :t_in] = gy
                    full.grad = g if full.grad is None else full.grad + g

                out._backward_fn = backward
        return out

    def parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for name, layer in self.layers:
            for pname, param in layer.parameters():
                out.append((f"{name}.{pname}", param))
        return out

    def zero_grad(self) -> None:
        for _, p in self.parameters():
            p.zero_grad()

    def state_arrays(self) -> dict[str, np.ndarray]:
        state = {name: p.data.copy() for name, p in self.parameters()}
        for name, layer in self.layers:
            for bname, buf in layer.buffers():
                state[f"{name}.{bname}"] = buf.copy()
        return state

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        expected = set(self.state_arrays())
        given = set(state)
        if expected != given:
            missing = sorted(expected - given)
            surplus = sorted(given - expected)
            raise ValueError(
                f"state mismatch: missing {missing or 'none'}, unexpected {surplus or 'none'}"
            )
        params = dict(self.parameters())
        buffer_owners = {
            f"{name}.{bname}": (layer, bname)
            for name, layer in self.layers
            for bname, _ in layer.buffers()
        }
        for key, value in state.items():
            if key in params:
                if params[key].data.shape != value.shape:
                    raise ValueError(f"shape mismatch for {key}")
                params[key].data = np.asarray(value, dtype=np.float64).copy()
            else:
                layer, bname = buffer_owners[key]
                layer.set_buffer(bname, value.copy())


def _check_channels(in_channels: int) -> None:
    if in_channels not in VALID_CHANNELS:
        raise ValueError(
            f"in_channels must be one of {VALID_CHANNELS}, got {in_channels}"
        )


def build_cnn(in_channels: int, seed: int = 0) -> NeuralModel:
    """Five conv+BN+ReLU+pool blocks at full frame resolution, sigmoid head."""
    _check_channels(in_channels)
    rng = np.random.default_rng(seed)
    layers: list[tuple[str, object]] = []
    c = in_channels
    for i, filters in enumerate(CNN_FILTERS):
        layers.append((f"block{i}_conv", Conv1d(c, filters, KERNEL, 1, rng)))
        layers.append((f"block{i}_bn", BatchNorm1d(filters)))
        layers.append((f"block{i}_relu", ReLU()))
        layers.append((f"block{i}_pool", MaxPool1d(3, 1, same_pad=True)))
        c = filters
    layers.append(("head_conv", Conv1d(c, 1, 1, 1, rng)))
    layers.append(("head_sigmoid", Sigmoid()))
    return NeuralModel("cnn", in_channels, layers)


def build_tcn(in_channels: int, seed: int = 0) -> NeuralModel:
    """Dilated encoder, pooled 3x, mirrored decoder with upsampling."""
    _check_channels(in_channels)
    rng = np.random.default_rng(seed)
    layers: list[tuple[str, object]] = []
    c = in_channels
    for i, (filters, dilation) in enumerate(TCN_ENCODER):
        layers.append((f"enc{i}_conv", Conv1d(c, filters, KERNEL, dilation, rng)))
        layers.append((f"enc{i}_bn", BatchNorm1d(filters)))
        layers.append((f"enc{i}_relu", ReLU()))
        layers.append((f"enc{i}_pool", MaxPool1d(2, 2, same_pad=False)))
        c = filters
    for i, (filters, dilation) in enumerate(TCN_DECODER):
        layers.append((f"dec{i}_up", Upsample2()))
        layers.append((f"dec{i}_conv", Conv1d(c, filters, KERNEL, dilation, rng)))
        layers.append((f"dec{i}_bn", BatchNorm1d(filters)))
        layers.append((f"dec{i}_relu", ReLU()))
        c = filters
    layers.append(("head_conv", Conv1d(c, 1, 1, 1, rng)))
    layers.append(("head_sigmoid", Sigmoid()))
    return NeuralModel("tcn", in_channels, layers)


def receptive_field(model: NeuralModel) -> int:
    """Frames of input influencing one output frame."""
    rf = 1
    jump = 1.0
    for _, layer in model.layers:
        if isinstance(layer, Conv1d):
            k = layer.weight.shape[2]
            rf += (k - 1) * layer.dilation * jump
        elif isinstance(layer, MaxPool1d):
            rf += (layer.size - 1) * jump
            jump *= layer.stride
        elif isinstance(layer, Upsample2):
            jump /= 2.0
    return int(round(rf))
