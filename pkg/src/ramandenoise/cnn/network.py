"""Parallel (two-branch) and serial convolutional regression networks.

Each branch is ``depth`` repetitions of conv -> batchnorm -> relu -> maxpool.
Branch outputs are concatenated along channels, flattened and mapped by one
fully connected layer to a full-length spectrum estimate.

Parameter order, used for flat weight vectors and checkpoints: branches in
order, layers in order within a branch (conv weight, conv bias, batchnorm
gamma, batchnorm beta), then the dense weight and bias.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ShapeMismatch
from .layers import BatchNorm1d, Conv1d, Dense, MaxPool, ReLU

TOPOLOGIES = ("parallel", "serial")


def pooled_length(n: int, depth: int) -> int:
    for _ in range(depth):
        n = (n + 1) // 2
    return n


@dataclass(frozen=True)
class NetworkConfig:
    topology: str = "parallel"
    branch_depth: int = 3
    filters_per_layer: int = 16
    kernel_len: int = 15
    input_len: int = 2051
    bn_momentum: float = 0.1

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")
        if min(self.branch_depth, self.filters_per_layer, self.kernel_len) < 1:
            raise ValueError("depth, filters and kernel length must be positive")
        if pooled_length(self.input_len, self.branch_depth - 1) < 2:
            raise ValueError(f"input_len {self.input_len} too short for {self.branch_depth} pooling stages")

    @property
    def branch_kernels(self) -> tuple[int, ...]:
        if self.topology == "serial":
            return (self.kernel_len,)
        return (self.kernel_len, max(1, self.kernel_len // 2))

    @property
    def branch_output_len(self) -> int:
        return pooled_length(self.input_len, self.branch_depth)

    @property
    def fc_in_dim(self) -> int:
        return len(self.branch_kernels) * self.filters_per_layer * self.branch_output_len

    def parameter_count(self) -> int:
        F = self.filters_per_layer
        total = 0
        for k in self.branch_kernels:
            c_in = 1
            for _ in range(self.branch_depth):
                total += F * c_in * k + F + 2 * F
                c_in = F
        return total + self.fc_in_dim * self.input_len + self.input_len

    def to_dict(self) -> dict:
        return asdict(self)


PRESETS = {
    "desk": NetworkConfig("parallel", branch_depth=3, filters_per_layer=16, kernel_len=15),
    "paper": NetworkConfig("parallel", branch_depth=7, filters_per_layer=100, kernel_len=100),
}


class Network:
    def __init__(self, config: NetworkConfig):
        self.config = config
        F = config.filters_per_layer
        self.branches: list[list] = []
        for k in config.branch_kernels:
            layers, c_in = [], 1
            for _ in range(config.branch_depth):
                layers += [Conv1d(c_in, F, k), BatchNorm1d(F, config.bn_momentum), ReLU(), MaxPool()]
                c_in = F
            self.branches.append(layers)
        self.fc = Dense(config.fc_in_dim, config.input_len)
        self.input_mean = np.zeros(config.input_len)
        self._branch_shape = None
        # every parameter array is a view into one flat buffer
        self.flat = np.zeros(config.parameter_count())
        pos = 0
        for _, layer in self.named_layers():
            for name, arr in layer.params.items():
                view = self.flat[pos:pos + arr.size].reshape(arr.shape)
                view[...] = arr
                layer.params[name] = view
                pos += arr.size

    # -- parameters --------------------------------------------------------

    def named_layers(self):
        for b, layers in enumerate(self.branches):
            for i, layer in enumerate(layers):
                if layer.params:
                    yield f"branch{b}.{i}.{layer.kind}", layer
        yield "fc", self.fc

    def named_parameters(self):
        for prefix, layer in self.named_layers():
            for name, arr in layer.params.items():
                yield f"{prefix}.{name}", arr

    def named_gradients(self):
        for prefix, layer in self.named_layers():
            for name in layer.params:
                yield f"{prefix}.{name}", layer.grads[name]

    def batchnorms(self):
        return [layer for layers in self.branches for layer in layers
                if isinstance(layer, BatchNorm1d)]

    def get_flat(self) -> np.ndarray:
        return self.flat.copy()

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != self.flat.shape:
            raise ShapeMismatch(f"expected {self.flat.size} weights, got {flat.size}")
        self.flat[...] = flat

    def flat_gradient(self) -> np.ndarray:
        return np.concatenate([g.ravel() for _, g in self.named_gradients()])

    def init(self, rng: np.random.Generator) -> "Network":
        """Xavier-uniform weights, zero biases, identity batchnorm."""
        for _, layer in self.named_layers():
            layer.init(rng)
        return self

    # -- passes -----------------------------------------------------------

    def forward(self, x, train: bool = False) -> np.ndarray:
        """Raw spectra (B, L) -> estimates (B, L). Subtracts the stored input means."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 3 and x.shape[1] == 1:
            x = x[:, 0, :]
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.config.input_len:
            raise ShapeMismatch(f"network expects (B, {self.config.input_len}), got {x.shape}")
        h0 = (x - self.input_mean)[:, None, :]
        outs = []
        for layers in self.branches:
            h = h0
            for layer in layers:
                h = layer.forward(h, train)
            outs.append(h)
        cat = np.concatenate(outs, axis=1)
        self._branch_shape = outs[0].shape
        return self.fc.forward(cat.reshape(cat.shape[0], -1), train)

    def backward(self, grad_out: np.ndarray) -> None:
        """Backpropagate d(loss)/d(output); fills every layer's ``grads``."""
        g = self.fc.backward(grad_out)
        B, F, M = self._branch_shape
        g = g.reshape(B, len(self.branches) * F, M)
        for b, layers in enumerate(self.branches):
            gb = g[:, b * F:(b + 1) * F, :]
            for layer in reversed(layers):
                gb = layer.backward(gb)

    def predict(self, x, batch_size: int = 64) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.concatenate([self.forward(x[i:i + batch_size]) for i in range(0, len(x), batch_size)])


def forward(net: Network, x, train: bool = False) -> np.ndarray:
    return net.forward(x, train)


def backward(net: Network, x, target) -> dict[str, np.ndarray]:
    """Gradients of :func:`mse_loss` at ``(x, target)`` for every parameter.

    Runs a training-mode forward pass first (batch statistics).
    """
    from .training import mse_loss_grad

    pred = net.forward(x, train=True)
    net.backward(mse_loss_grad(pred, np.atleast_2d(target)))
    return dict(net.named_gradients())
