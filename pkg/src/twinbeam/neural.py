"""Position-to-beam MLP classifier: ReLU hidden layers, softmax output, Adam."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, NormStats, featurize, fit_norm_stats
from .geometry import Position

HIDDEN = (256, 256)
FEATURE_SETS = {"both": [0, 1, 2, 3], "cartesian": [0, 1], "polar": [2, 3]}


class MLPParams:
    """Weights ``(fan_in, fan_out)`` and biases per affine layer.

    All arrays are views into one contiguous ``flat`` buffer so optimizer
    updates run as a handful of vector operations.
    """

    def __init__(self, layer_dims, flat: np.ndarray | None = None):
        self.layer_dims = [int(d) for d in layer_dims]
        shapes = []
        for fan_in, fan_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
            shapes += [(fan_in, fan_out), (fan_out,)]
        total = sum(math.prod(s) for s in shapes)
        self.flat = np.zeros(total) if flat is None else np.asarray(flat, dtype=float)
        if self.flat.shape != (total,):
            raise ValueError(f"expected {total} parameters, got {self.flat.size}")
        views, at = [], 0
        for s in shapes:
            n = math.prod(s)
            views.append(self.flat[at:at + n].reshape(s))
            at += n
        self.weights = views[0::2]
        self.biases = views[1::2]

    @classmethod
    def from_arrays(cls, weights, biases) -> "MLPParams":
        dims = [weights[0].shape[0]] + [w.shape[1] for w in weights]
        p = cls(dims)
        for dst, src in zip(p.weights + p.biases, list(weights) + list(biases)):
            if dst.shape != np.shape(src):
                raise ValueError("inconsistent layer shapes")
            dst[...] = src
        return p

    def zeros_like(self) -> "MLPParams":
        return MLPParams(self.layer_dims)

    def copy(self) -> "MLPParams":
        return MLPParams(self.layer_dims, self.flat.copy())


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    scratch: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def zeros_like(cls, params: MLPParams) -> "AdamState":
        return cls(np.zeros_like(params.flat), np.zeros_like(params.flat))


# Moments of dead units decay geometrically into subnormal floats, which are
# several times slower to process. Anything this small moves no parameter.
_FLUSH_EVERY = 256
_TINY = 1e-200


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 80
    batch_size: int = 32
    rng_seed: int = 0
    mode: str = "train"
    lr_decay: bool = False  # x0.2 every 20 epochs when enabled
    hidden: tuple[int, ...] = HIDDEN
    features: str = "both"
    min_steps: int = 0  # stretch epochs on small datasets to reach this many updates

    def schedule(self, n: int) -> tuple[int, int]:
        """(epochs, decay period in epochs) for an ``n``-point dataset."""
        per_epoch = math.ceil(n / min(self.batch_size, n))
        epochs = max(self.epochs, math.ceil(self.min_steps / per_epoch))
        return epochs, max(1, round(20 * epochs / self.epochs))

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.min_steps < 0:
            raise ValueError("min_steps must be >= 0")
        if self.mode not in ("train", "finetune"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.features not in FEATURE_SETS:
            raise ValueError(f"unknown feature set {self.features!r}")

    @classmethod
    def training(cls, rng_seed: int = 0, **kw) -> "TrainConfig":
        return cls(**{"learning_rate": 1e-2, "epochs": 80, "batch_size": 32, "rng_seed": rng_seed, "mode": "train", **kw})

    @classmethod
    def finetuning(cls, rng_seed: int = 0, **kw) -> "TrainConfig":
        return cls(**{"learning_rate": 1e-4, "epochs": 40, "batch_size": 8, "rng_seed": rng_seed, "mode": "finetune", **kw})


def init_params(seed: int, layer_dims) -> MLPParams:
    """He-uniform weights (bound sqrt(6/fan_in)) and zero biases."""
    rng = np.random.default_rng(seed)
    params = MLPParams(layer_dims)
    for w in params.weights:
        bound = math.sqrt(6.0 / w.shape[0])
        w[...] = rng.uniform(-bound, bound, size=w.shape)
    return params


def _check_input(params: MLPParams, x: np.ndarray) -> None:
    if x.shape[-1] != params.weights[0].shape[0]:
        raise ValueError(f"feature length {x.shape[-1]} does not match input dim {params.weights[0].shape[0]}")


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def logits(params: MLPParams, x: np.ndarray) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    _check_input(params, a)
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ w + b
        if i < last:
            a = np.maximum(a, 0.0)
    return a


def forward(params: MLPParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one feature vector or a batch."""
    return np.exp(_log_softmax(logits(params, x)))


def loss_and_gradient(params: MLPParams, x: np.ndarray, labels: np.ndarray) -> tuple[float, MLPParams]:
    """Mean cross-entropy of the true labels and its gradient by backprop."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    labels = np.asarray(labels, dtype=int).reshape(-1)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    _check_input(params, x)
    n = x.shape[0]
    acts = [x]
    a = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ w + b
        if i < last:
            a = np.maximum(a, 0.0)
        acts.append(a)
    logp = _log_softmax(acts[-1])
    loss = -float(np.mean(logp[np.arange(n), labels]))

    delta = np.exp(logp)
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grads = params.zeros_like()
    for i in range(last, -1, -1):
        np.matmul(acts[i].T, delta, out=grads.weights[i])
        np.sum(delta, axis=0, out=grads.biases[i])
        if i > 0:
            delta = (delta @ params.weights[i].T) * (acts[i] > 0)
    return loss, grads


def adam_step(params: MLPParams, grads: MLPParams, state: AdamState, lr: float) -> tuple[MLPParams, AdamState]:
    """One bias-corrected Adam update, applied in place; returns ``(params, state)``."""
    if grads.flat.shape != params.flat.shape or state.m.shape != params.flat.shape:
        raise ValueError("gradient shapes do not match parameters")
    g, m, v = grads.flat, state.m, state.v
    if state.scratch is None or state.scratch.shape != m.shape:
        state.scratch = np.empty_like(m)
    tmp = state.scratch
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    m *= b1
    np.multiply(g, 1 - b1, out=tmp)
    m += tmp
    v *= b2
    np.multiply(g, g, out=tmp)
    tmp *= 1 - b2
    v += tmp
    if t % _FLUSH_EVERY == 0:
        m[np.abs(m) < _TINY] = 0.0
        v[v < _TINY] = 0.0
    np.divide(v, 1 - b2**t, out=tmp)
    np.sqrt(tmp, out=tmp)
    tmp += state.eps
    np.divide(m, tmp, out=tmp)
    tmp *= lr / (1 - b1**t)
    params.flat -= tmp
    return params, state


@dataclass
class Model:
    """Trained parameters plus the input normalization they expect."""

    params: MLPParams
    stats: NormStats
    origin: Position = Position(0.0, 0.0)
    features: str = "both"

    def featurize(self, positions) -> np.ndarray:
        f = featurize(positions, self.stats, self.origin)
        return f[..., FEATURE_SETS[self.features]]

    def predict_proba(self, positions) -> np.ndarray:
        return forward(self.params, self.featurize(positions))

    def rank(self, positions) -> np.ndarray:
        """Beam indices ordered by descending confidence, one row per position."""
        return np.argsort(-self.predict_proba(positions), axis=-1, kind="stable")

    def to_dict(self) -> dict:
        return {
            "layer_dims": self.params.layer_dims,
            "weights": [w.tolist() for w in self.params.weights],
            "biases": [b.tolist() for b in self.params.biases],
            "norm_stats": {"max_distance": self.stats.max_distance, "max_abs_xy": self.stats.max_abs_xy},
            "origin": list(self.origin),
            "features": self.features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        params = MLPParams.from_arrays(
            [np.array(w, dtype=float) for w in d["weights"]],
            [np.array(b, dtype=float) for b in d["biases"]],
        )
        if params.layer_dims != list(d["layer_dims"]):
            raise ValueError("checkpoint layer_dims do not match stored weights")
        stats = NormStats(**d["norm_stats"])
        return cls(params, stats, Position(*d.get("origin", (0.0, 0.0))), d.get("features", "both"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Model":
        return cls.from_dict(json.loads(Path(path).read_text()))


def predict_topk(params: MLPParams, features: np.ndarray, k: int) -> np.ndarray:
    """Top-k beam indices by descending probability (ties to the lowest index)."""
    q = params.layer_dims[-1]
    if not 1 <= k <= q:
        raise ValueError(f"k must be in [1, {q}], got {k}")
    return np.argsort(-forward(params, features), axis=-1, kind="stable")[..., :k]


def train(dataset: Dataset, cfg: TrainConfig, init: Model | None = None) -> tuple[Model, list[float]]:
    """Minibatch Adam on mean cross-entropy.

    ``mode='train'`` starts from fresh weights and fits normalization on
    ``dataset``; ``mode='finetune'`` continues from ``init`` and keeps its
    normalization. Returns the model and the per-epoch mean training loss.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if cfg.mode == "finetune":
        if init is None:
            raise ValueError("fine-tuning needs an initial model")
        model = Model(init.params.copy(), init.stats, init.origin, init.features)
    else:
        stats = fit_norm_stats(dataset)
        dims = [len(FEATURE_SETS[cfg.features]), *cfg.hidden, dataset.codebook_size]
        model = Model(init_params(cfg.rng_seed, dims), stats, dataset.origin, cfg.features)
    if model.params.layer_dims[-1] != dataset.codebook_size:
        raise ValueError("model output size does not match the dataset codebook size")

    x = model.featurize(dataset.positions)
    y = dataset.labels
    n = len(dataset)
    bs = min(cfg.batch_size, n)
    rng = np.random.default_rng(cfg.rng_seed)
    params = model.params
    state = AdamState.zeros_like(params)
    history = []
    epochs, period = cfg.schedule(n)
    for epoch in range(epochs):
        lr = cfg.learning_rate * (0.2 ** (epoch // period) if cfg.lr_decay else 1.0)
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss, grads = loss_and_gradient(params, x[idx], y[idx])
            params, state = adam_step(params, grads, state, lr)
            total += loss * len(idx)
        history.append(total / n)
    model.params = params
    return model, history
