"""Layer primitives for the 1-D denoising network.

Activations are float64 arrays shaped ``(batch, channels, length)``. Each layer
keeps whatever its backward pass needs from the most recent forward call.
"""

from __future__ import annotations

import numpy as np

from ..errors import MissingForwardCache, ShapeMismatch


def same_padding(kernel_len: int) -> tuple[int, int]:
    """(left, right) padding for a stride-1 'same' convolution; extra goes right."""
    left = (kernel_len - 1) // 2
    return left, kernel_len - 1 - left


def _columns(x: np.ndarray, K: int) -> np.ndarray:
    """im2col: (B, C, L) -> (B * L, C * K) windows of the same-padded input."""
    B, C, L = x.shape
    left, right = same_padding(K)
    xp = np.pad(x, ((0, 0), (0, 0), (left, right)))
    win = np.lib.stride_tricks.sliding_window_view(xp, K, axis=2)  # (B, C, L, K)
    return win.transpose(0, 2, 1, 3).reshape(B * L, C * K)


def conv1d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None,
                   cols: np.ndarray | None = None) -> np.ndarray:
    """Same-padded, stride-1 cross-correlation.

    ``x``: (B, C_in, L); ``weight``: (C_out, C_in, K); returns (B, C_out, L).
    """
    if x.ndim != 3 or weight.ndim != 3 or x.shape[1] != weight.shape[1]:
        raise ShapeMismatch(f"conv input {x.shape} incompatible with weight {weight.shape}")
    B, _, L = x.shape
    O, C, K = weight.shape
    if cols is None:
        cols = _columns(x, K)
    y = cols @ weight.reshape(O, C * K).T
    if bias is not None:
        y += bias
    return y.reshape(B, L, O).transpose(0, 2, 1)


def conv1d_backward(x: np.ndarray, weight: np.ndarray, grad: np.ndarray,
                    cols: np.ndarray | None = None):
    """Gradients (dx, dweight, dbias) of a same-padded convolution."""
    B, C, L = x.shape
    O, _, K = weight.shape
    left, _ = same_padding(K)
    if cols is None:
        cols = _columns(x, K)
    g2 = grad.transpose(0, 2, 1).reshape(B * L, O)
    dw = (g2.T @ cols).reshape(O, C, K)
    dcols = np.matmul(weight.reshape(O, C * K).T, grad).reshape(B, C, K, L)
    dxp = np.zeros((B, C, L + K - 1))
    for k in range(K):
        dxp[:, :, k:k + L] += dcols[:, :, k, :]
    return dxp[:, :, left:left + L], dw, g2.sum(axis=0)


def maxpool_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Window 2, stride 2, ceil mode. Returns pooled values and the absolute
    argmax index of each window (ties go to the earlier sample)."""
    B, C, L = x.shape
    if L < 2:
        raise ShapeMismatch("maxpool needs length >= 2")
    out_len = (L + 1) // 2
    if L % 2:
        x = np.concatenate([x, np.full((B, C, 1), -np.inf)], axis=2)
    pairs = x.reshape(B, C, out_len, 2)
    second = pairs[..., 1] > pairs[..., 0]
    y = np.where(second, pairs[..., 1], pairs[..., 0])
    idx = 2 * np.arange(out_len)[None, None, :] + second
    return y, idx


def maxpool_backward(grad: np.ndarray, idx: np.ndarray, in_len: int) -> np.ndarray:
    B, C, M = grad.shape
    dx = np.zeros((B, C, in_len + (in_len % 2)))
    np.put_along_axis(dx, idx, grad, axis=2)
    return dx[:, :, :in_len]


def batchnorm_forward(x, gamma, beta, running_mean, running_var, train: bool,
                      momentum: float = 0.1, eps: float = 1e-5):
    """Per-channel normalisation over batch and length.

    In train mode the running statistics are updated in place as
    ``running = (1 - momentum) * running + momentum * batch`` using the biased
    batch variance. Returns ``(y, cache)``; cache is None in inference mode.
    """
    if train:
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
    y = gamma[None, :, None] * xhat + beta[None, :, None]
    return y, ((xhat, inv_std) if train else None)


def batchnorm_backward(grad, gamma, cache):
    xhat, inv_std = cache
    m = grad.shape[0] * grad.shape[2]
    dgamma = np.sum(grad * xhat, axis=(0, 2))
    dbeta = grad.sum(axis=(0, 2))
    dxhat = grad * gamma[None, :, None]
    dx = (inv_std[None, :, None] / m) * (
        m * dxhat
        - dxhat.sum(axis=(0, 2))[None, :, None]
        - xhat * np.sum(dxhat * xhat, axis=(0, 2))[None, :, None]
    )
    return dx, dgamma, dbeta


def relu_forward(x):
    return np.maximum(x, 0.0)


def relu_backward(grad, x):
    return grad * (x > 0)


def xavier_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    """Parameters live in ``params``; gradients from the last backward in ``grads``."""

    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def _take_cache(self):
        if self._cache is None:
            raise MissingForwardCache(f"{self.kind}: backward called before a training forward pass")
        cache, self._cache = self._cache, None
        return cache


class Conv1d(Layer):
    kind = "conv"

    def __init__(self, in_ch: int, out_ch: int, kernel_len: int):
        super().__init__()
        self.in_ch, self.out_ch, self.kernel_len = in_ch, out_ch, kernel_len
        self.params["weight"] = np.zeros((out_ch, in_ch, kernel_len))
        self.params["bias"] = np.zeros(out_ch)

    def init(self, rng):
        k = self.kernel_len
        self.params["weight"][...] = xavier_uniform(
            rng, self.params["weight"].shape, self.in_ch * k, self.out_ch * k)
        self.params["bias"][...] = 0.0

    def forward(self, x, train=False):
        cols = _columns(x, self.kernel_len)
        if train:
            self._cache = (x, cols)
        return conv1d_forward(x, self.params["weight"], self.params["bias"], cols)

    def backward(self, grad):
        x, cols = self._take_cache()
        dx, dw, db = conv1d_backward(x, self.params["weight"], grad, cols)
        self.grads = {"weight": dw, "bias": db}
        return dx


class BatchNorm1d(Layer):
    kind = "batchnorm"

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.channels, self.momentum, self.eps = channels, momentum, eps
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)

    def init(self, rng):
        self.params["gamma"][...] = 1.0
        self.params["beta"][...] = 0.0
        self.running_mean[...] = 0.0
        self.running_var[...] = 1.0

    def forward(self, x, train=False):
        y, cache = batchnorm_forward(x, self.params["gamma"], self.params["beta"],
                                     self.running_mean, self.running_var, train,
                                     self.momentum, self.eps)
        if train:
            self._cache = cache
        return y

    def backward(self, grad):
        dx, dg, db = batchnorm_backward(grad, self.params["gamma"], self._take_cache())
        self.grads = {"gamma": dg, "beta": db}
        return dx


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train=False):
        if train:
            self._cache = x
        return relu_forward(x)

    def backward(self, grad):
        return relu_backward(grad, self._take_cache())


class MaxPool(Layer):
    kind = "maxpool"

    def forward(self, x, train=False):
        y, idx = maxpool_forward(x)
        if train:
            self._cache = (idx, x.shape[2])
        return y

    def backward(self, grad):
        idx, n = self._take_cache()
        return maxpool_backward(grad, idx, n)


class Dense(Layer):
    """Fully connected layer on flattened features: (B, in_dim) -> (B, out_dim)."""

    kind = "fully_connected"

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.in_dim, self.out_dim = in_dim, out_dim
        self.params["weight"] = np.zeros((out_dim, in_dim))
        self.params["bias"] = np.zeros(out_dim)

    def init(self, rng):
        self.params["weight"][...] = xavier_uniform(
            rng, self.params["weight"].shape, self.in_dim, self.out_dim)
        self.params["bias"][...] = 0.0

    def forward(self, x, train=False):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeMismatch(f"dense layer expects (B, {self.in_dim}), got {x.shape}")
        if train:
            self._cache = x
        return x @ self.params["weight"].T + self.params["bias"]

    def backward(self, grad):
        x = self._take_cache()
        self.grads = {"weight": grad.T @ x, "bias": grad.sum(axis=0)}
        return grad @ self.params["weight"]
