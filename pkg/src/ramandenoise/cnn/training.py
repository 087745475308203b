"""Loss, Adam and the mini-batch training loop."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..baseline import AirplsConfig, correct_many
from ..core import Dataset, Spectrum, as_array
from ..errors import EmptyDataset, LengthMismatch, ShapeMismatch
from ..synthgen import derive_seed
from .network import Network, NetworkConfig

log = logging.getLogger(__name__)

_INIT_STREAM, _SHUFFLE_STREAM, _AUGMENT_STREAM = 1, 2, 3


def mse_loss(pred, target) -> float:
    """Per-spectrum sum of squared errors, averaged over the batch."""
    pred, target = np.atleast_2d(pred), np.atleast_2d(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction {pred.shape} vs target {target.shape}")
    return float(np.sum((pred - target) ** 2) / pred.shape[0])


def mse_loss_grad(pred, target) -> np.ndarray:
    pred, target = np.atleast_2d(pred), np.atleast_2d(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction {pred.shape} vs target {target.shape}")
    return 2.0 * (pred - target) / pred.shape[0]


@dataclass(frozen=True)
class TrainHyper:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 600
    batch_size: int = 50
    seed: int = 0
    augment: bool = False  # random circular shift + reversal of each training pair
    weight_average: float = 0.0  # per-step decay of a weight moving average; 0 disables

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.epsilon > 0):
            raise ValueError("learning rate and epsilon must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("betas must lie in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not 0.0 <= self.weight_average < 1.0:
            raise ValueError("weight_average must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


HYPER_PRESETS = {
    "desk": TrainHyper(learning_rate=1e-2, epochs=50, batch_size=50, augment=True, weight_average=0.95),
    "paper": TrainHyper(learning_rate=1e-4, epochs=600, batch_size=50),
}


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(weights: np.ndarray, grads: np.ndarray, state: AdamState,
              hyper: TrainHyper) -> np.ndarray:
    """One bias-corrected Adam update. Updates ``weights`` and ``state`` in place."""
    if weights.shape != grads.shape or weights.shape != state.m.shape:
        raise ShapeMismatch("weights, gradients and Adam moments must have equal shapes")
    state.step += 1
    b1, b2 = hyper.beta1, hyper.beta2
    m, v = state.m, state.v
    m *= b1
    m += (1.0 - b1) * grads
    v *= b2
    g2 = np.square(grads)
    g2 *= 1.0 - b2
    v += g2
    # w -= lr * mhat / (sqrt(vhat) + eps), with the bias corrections folded in
    denom = np.sqrt(v, out=g2)
    denom *= 1.0 / math.sqrt(1.0 - b2**state.step)
    denom += hyper.epsilon
    step = np.divide(m, denom, out=denom)
    step *= hyper.learning_rate / (1.0 - b1**state.step)
    weights -= step
    return weights


@dataclass
class Checkpoint:
    config: NetworkConfig
    hyper: TrainHyper
    weights: np.ndarray
    adam: AdamState
    input_mean: np.ndarray
    bn_running_mean: list[np.ndarray] = field(default_factory=list)
    bn_running_var: list[np.ndarray] = field(default_factory=list)
    train_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        n = self.config.parameter_count()
        if self.weights.size != n:
            raise ShapeMismatch(f"checkpoint holds {self.weights.size} weights, config implies {n}")

    def network(self) -> Network:
        net = Network(self.config)
        net.set_flat(self.weights)
        net.input_mean = np.array(self.input_mean, dtype=np.float64)
        for bn, rm, rv in zip(net.batchnorms(), self.bn_running_mean, self.bn_running_var):
            bn.running_mean[...] = rm
            bn.running_var[...] = rv
        return net

    @classmethod
    def from_network(cls, net: Network, hyper: TrainHyper, adam: AdamState | None = None,
                     history=()) -> "Checkpoint":
        flat = net.get_flat()
        return cls(
            config=net.config,
            hyper=hyper,
            weights=flat,
            adam=adam or AdamState.zeros(flat.size),
            input_mean=net.input_mean.copy(),
            bn_running_mean=[bn.running_mean.copy() for bn in net.batchnorms()],
            bn_running_var=[bn.running_var.copy() for bn in net.batchnorms()],
            train_history=list(history),
        )


def augment_indices(rng: np.random.Generator, batch: int, length: int) -> np.ndarray:
    """Per-row gather indices applying a random circular shift and, half the time, a reversal."""
    idx = (np.arange(length)[None, :] + rng.integers(0, length, size=(batch, 1))) % length
    flip = rng.random(batch) < 0.5
    idx[flip] = idx[flip, ::-1]
    return idx


def preprocess_inputs(noisy_rows, airpls: AirplsConfig | None = AirplsConfig()) -> np.ndarray:
    """Baseline-correct each noisy spectrum (no-op when ``airpls`` is None)."""
    rows = np.atleast_2d(np.asarray(noisy_rows, dtype=np.float64))
    return rows.copy() if airpls is None else correct_many(rows, airpls)


def init_network(config: NetworkConfig, seed: int) -> Network:
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, _INIT_STREAM)))
    return Network(config).init(rng)


def fit(net: Network, inputs: np.ndarray, targets: np.ndarray, hyper: TrainHyper,
        adam: AdamState | None = None, progress=None) -> tuple[AdamState, list[float]]:
    """Train ``net`` in place on preprocessed arrays. Returns the Adam state and per-epoch mean loss.

    ``inputs`` are raw (not zero-centred); the network subtracts ``net.input_mean``.
    With ``hyper.weight_average`` set, the net ends up holding the moving average
    of its weights rather than the last iterate; the Adam state tracks the iterate.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if len(inputs) == 0:
        raise EmptyDataset("no training pairs")
    if inputs.shape != targets.shape:
        raise LengthMismatch(f"inputs {inputs.shape} vs targets {targets.shape}")
    flat = net.flat
    adam = adam or AdamState.zeros(flat.size)
    avg = flat.copy() if hyper.weight_average else None
    history = []
    n = len(inputs)
    for epoch in range(hyper.epochs):
        rng = np.random.Generator(np.random.PCG64(derive_seed(hyper.seed, _SHUFFLE_STREAM, epoch)))
        order = rng.permutation(n)
        aug_rng = np.random.Generator(np.random.PCG64(derive_seed(hyper.seed, _AUGMENT_STREAM, epoch)))
        total = 0.0
        for start in range(0, n, hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            x, y = inputs[idx], targets[idx]
            if hyper.augment:
                cols = augment_indices(aug_rng, len(idx), inputs.shape[1])
                rows = np.arange(len(idx))[:, None]
                x, y = x[rows, cols], y[rows, cols]
            pred = net.forward(x, train=True)
            total += mse_loss(pred, y) * len(idx)
            net.backward(mse_loss_grad(pred, y))
            adam_step(flat, net.flat_gradient(), adam, hyper)
            if avg is not None:
                avg *= hyper.weight_average
                avg += (1.0 - hyper.weight_average) * flat
        history.append(total / n)
        if not math.isfinite(history[-1]):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
        log.info("epoch %d/%d loss %.6g", epoch + 1, hyper.epochs, history[-1])
        if progress is not None:
            progress(epoch, history[-1])
    if avg is not None:
        flat[...] = avg
    return adam, history


def train(config: NetworkConfig, data, hyper: TrainHyper,
          airpls: AirplsConfig | None = AirplsConfig(), progress=None) -> tuple[Checkpoint, list[float]]:
    """Initialise, zero-centre and train a network.

    ``data`` is a :class:`Dataset` (noisy inputs get baseline-corrected with
    ``airpls``) or an ``(inputs, targets)`` pair of already-prepared arrays.
    """
    if isinstance(data, Dataset):
        if len(data) == 0:
            raise EmptyDataset("training dataset is empty")
        inputs = preprocess_inputs(data.noisy_matrix(), airpls)
        targets = data.clean_matrix()
    else:
        inputs, targets = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in data)
        if inputs.size == 0:
            raise EmptyDataset("training dataset is empty")
    if inputs.shape[1] != config.input_len:
        raise LengthMismatch(f"spectra have length {inputs.shape[1]}, network expects {config.input_len}")
    net = init_network(config, hyper.seed)
    net.input_mean = inputs.mean(axis=0)
    adam, history = fit(net, inputs, targets, hyper, progress=progress)
    return Checkpoint.from_network(net, hyper, adam, history), history


def denoise(ckpt: Checkpoint | Network, x) -> Spectrum:
    """Inference-mode pass on one (already baseline-corrected) spectrum."""
    net = ckpt if isinstance(ckpt, Network) else ckpt.network()
    arr = as_array(x)
    if arr.size != net.config.input_len:
        raise LengthMismatch(f"spectrum length {arr.size} != network input length {net.config.input_len}")
    out = net.forward(arr[None, :])[0]
    return x.with_values(out) if isinstance(x, Spectrum) else Spectrum(out)
