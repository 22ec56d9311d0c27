"""MLP classifier over fixed sentence embeddings.

Architecture: H in {0, 1, 2} ReLU hidden layers of width h, then a
softmax output over C classes. Inverted dropout is applied to the
representation feeding the output layer (the last hidden activation,
or the raw embedding when H == 0), so evaluation runs the network
unchanged. Training is full-batch gradient descent for exactly T
steps with a linearly decaying learning rate; one "iteration" is one
full pass over the training split, which keeps runs deterministic for
a fixed seed.

Defaults are the pivot configuration: one 512-unit hidden layer,
dropout 0.75, SGD at 0.7 with linear decay, 500 iterations.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from ._kernels import get_backend
from .errors import DivergenceError, FsiError, UsageError

OPTIMIZERS = ("sgd", "adam")
SGD_DEFAULT_LR = 0.7
ADAM_DEFAULT_LR = 4e-4
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_MASK64 = (1 << 64) - 1
_CKPT_MAGIC = b"FSIM"
_CKPT_VERSION = 1


@dataclass(frozen=True)
class MlpConfig:
    """Training configuration; defaults are the pivot setting."""

    hidden_layers: int = 1
    hidden_dim: int = 512
    dropout_rate: float = 0.75
    optimizer: str = "sgd"
    initial_lr: float | None = None  # optimizer default when None: sgd 0.7, adam 4e-4
    iterations: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.hidden_layers not in (0, 1, 2):
            raise UsageError(f"hidden_layers must be 0, 1 or 2, got {self.hidden_layers}")
        if self.hidden_dim < 1:
            raise UsageError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise UsageError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.optimizer not in OPTIMIZERS:
            raise UsageError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.iterations < 0:
            raise UsageError(f"iterations must be >= 0, got {self.iterations}")
        if self.initial_lr is not None and not self.initial_lr > 0:
            raise UsageError(f"initial_lr must be positive, got {self.initial_lr}")

    @property
    def lr0(self) -> float:
        if self.initial_lr is not None:
            return self.initial_lr
        return SGD_DEFAULT_LR if self.optimizer == "sgd" else ADAM_DEFAULT_LR

    def to_dict(self) -> dict:
        return {
            "hidden_layers": self.hidden_layers,
            "hidden_dim": self.hidden_dim,
            "dropout_rate": self.dropout_rate,
            "optimizer": self.optimizer,
            "initial_lr": self.initial_lr,
            "iterations": self.iterations,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MlpConfig":
        return cls(**{k: obj[k] for k in cls.__dataclass_fields__ if k in obj})


@dataclass
class MlpModel:
    """Weights W_1..W_{H+1} and biases; shape chain input_dim -> h (xH) -> C."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_dim: int
    num_classes: int
    config: MlpConfig

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    def copy(self) -> "MlpModel":
        return MlpModel(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            input_dim=self.input_dim,
            num_classes=self.num_classes,
            config=self.config,
        )

    def astype(self, dtype) -> "MlpModel":
        return MlpModel(
            weights=[w.astype(dtype) for w in self.weights],
            biases=[b.astype(dtype) for b in self.biases],
            input_dim=self.input_dim,
            num_classes=self.num_classes,
            config=self.config,
        )

    def parameters(self) -> Iterable[np.ndarray]:
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b


@dataclass(frozen=True)
class TrainHistory:
    """Per-iteration training loss and the learning rate applied at that step."""

    losses: tuple[float, ...]
    lrs: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.losses)


def _seed_rng(seed: int, stream: int) -> np.random.Generator:
    # Separate spawn keys keep the init stream and the dropout stream independent.
    return np.random.default_rng(np.random.SeedSequence(seed & _MASK64, spawn_key=(stream,)))


def _layer_dims(input_dim: int, num_classes: int, config: MlpConfig) -> list[tuple[int, int]]:
    dims = [input_dim] + [config.hidden_dim] * config.hidden_layers + [num_classes]
    return list(zip(dims[:-1], dims[1:]))


def init_model(
    input_dim: int, num_classes: int, config: MlpConfig, dtype=np.float32
) -> MlpModel:
    """He-uniform weights, zero biases, deterministic for a given config.seed."""
    if input_dim < 1:
        raise UsageError(f"input_dim must be >= 1, got {input_dim}")
    if num_classes < 2:
        raise UsageError(f"num_classes must be >= 2, got {num_classes}")
    rng = _seed_rng(config.seed, stream=0)
    weights, biases = [], []
    for fan_in, fan_out in _layer_dims(input_dim, num_classes, config):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return MlpModel(
        weights=weights,
        biases=biases,
        input_dim=input_dim,
        num_classes=num_classes,
        config=config,
    )


def _make_dropout_mask(
    rng: np.random.Generator, shape: tuple[int, int], rate: float, dtype
) -> np.ndarray:
    # Inverted dropout: keep with probability 1-rate, scale kept units by 1/(1-rate).
    keep = rng.random(shape) >= rate
    scale = dtype.type(1.0 / (1.0 - rate))
    return keep.astype(dtype) * scale


def _forward_cached(
    model: MlpModel,
    x: np.ndarray,
    mode: str,
    rng: np.random.Generator | None,
    backend,
) -> tuple[np.ndarray, dict]:
    """Forward pass returning probabilities and the caches backprop needs."""
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise FsiError(
            f"input has shape {x.shape}, expected (*, {model.input_dim})"
        )
    if mode not in ("train", "eval"):
        raise UsageError(f"mode must be 'train' or 'eval', got {mode!r}")
    rate = model.config.dropout_rate
    use_dropout = mode == "train" and rate > 0.0
    if use_dropout and rng is None:
        raise UsageError("train-mode forward with dropout needs an rng")

    h_layers = model.config.hidden_layers
    activations = [x]  # pre-dropout activation entering each layer
    pre_acts = []
    a = x
    for layer in range(h_layers):
        z = a @ model.weights[layer] + model.biases[layer]
        pre_acts.append(z)
        if layer == h_layers - 1 and use_dropout:
            mask = _make_dropout_mask(rng, z.shape, rate, z.dtype)
            a = backend.relu_dropout(z, mask)
        else:
            mask = None
            a = backend.relu(z)
        activations.append(a)
    if h_layers == 0:
        if use_dropout:
            mask = _make_dropout_mask(rng, x.shape, rate, x.dtype)
            a = backend.apply_mask(x, mask)
        else:
            mask = None
            a = x

    logits = a @ model.weights[-1] + model.biases[-1]
    probs = backend.softmax(logits)
    cache = {
        "activations": activations,
        "pre_acts": pre_acts,
        "dropped": a,
        "mask": mask,
        "probs": probs,
    }
    return probs, cache


def forward(
    model: MlpModel,
    x: np.ndarray,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Class probabilities, one row per input; rows sum to 1.

    Train mode applies inverted dropout to the output of the last
    non-output layer; eval mode is deterministic and rng-independent.
    """
    probs, _ = _forward_cached(model, x, mode, rng, get_backend())
    return probs


def loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy against integer labels, probabilities clamped at 1e-12."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= probs.shape[1]:
        raise FsiError(f"labels outside [0, {probs.shape[1]})")
    return get_backend().nll_loss(probs, labels)


def lr_schedule(config: MlpConfig, t: int) -> float:
    """Linear decay lr(t) = lr0 * (1 - t/T); lr(0) = lr0, never reaching 0."""
    if not 0 <= t < config.iterations:
        raise UsageError(f"iteration index {t} outside 0..{config.iterations - 1}")
    return config.lr0 * (1.0 - t / config.iterations)


def _backward(
    model: MlpModel, cache: dict, y: np.ndarray, backend
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of the mean cross-entropy w.r.t. every weight and bias."""
    h_layers = model.config.hidden_layers
    d_logits = backend.softmax_xent_backward(cache["probs"], y)
    grads_w: list[np.ndarray] = [None] * (h_layers + 1)
    grads_b: list[np.ndarray] = [None] * (h_layers + 1)

    dropped = cache["dropped"]
    grads_w[-1] = dropped.T @ d_logits
    grads_b[-1] = d_logits.sum(axis=0)
    d_a = d_logits @ model.weights[-1].T

    mask = cache["mask"]
    for layer in range(h_layers - 1, -1, -1):
        z = cache["pre_acts"][layer]
        if layer == h_layers - 1 and mask is not None:
            d_z = backend.relu_dropout_backward(d_a, z, mask)
        else:
            d_z = backend.relu_backward(d_a, z)
        grads_w[layer] = cache["activations"][layer].T @ d_z
        grads_b[layer] = d_z.sum(axis=0)
        if layer > 0:
            d_a = d_z @ model.weights[layer].T
    return grads_w, grads_b


def train(
    model: MlpModel, x: np.ndarray, y: np.ndarray, config: MlpConfig | None = None
) -> tuple[MlpModel, TrainHistory]:
    """Run exactly T full-batch steps; returns a new model and its history.

    Each step: train-mode forward, cross-entropy gradient, backprop,
    parameter update at lr_schedule(t). Any non-finite loss or
    parameter aborts with a DivergenceError naming the iteration.
    The input model is not modified.
    """
    config = config or model.config
    backend = get_backend()
    y = np.ascontiguousarray(y, dtype=np.int64)
    if x.shape[0] != y.shape[0]:
        raise FsiError(f"{x.shape[0]} feature rows vs {y.shape[0]} labels")
    if x.shape[0] == 0:
        raise FsiError("cannot train on an empty split")
    x = np.ascontiguousarray(x, dtype=model.dtype)

    trained = model.copy()
    trained.config = config
    rng = _seed_rng(config.seed, stream=1)

    use_adam = config.optimizer == "adam"
    if use_adam:
        adam_m = [np.zeros_like(p) for p in trained.parameters()]
        adam_v = [np.zeros_like(p) for p in trained.parameters()]

    losses: list[float] = []
    lrs: list[float] = []
    for t in range(config.iterations):
        probs, cache = _forward_cached(trained, x, "train", rng, backend)
        step_loss = backend.nll_loss(probs, y)
        if not np.isfinite(step_loss):
            raise DivergenceError(
                f"training diverged at iteration {t}: loss is {step_loss}", iteration=t
            )
        grads_w, grads_b = _backward(trained, cache, y, backend)
        lr = lr_schedule(config, t)
        params = list(trained.parameters())
        grads = [g for pair in zip(grads_w, grads_b) for g in pair]
        for i, (p, g) in enumerate(zip(params, grads)):
            if use_adam:
                backend.adam_step(
                    p, g, adam_m[i], adam_v[i], lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, t + 1
                )
            else:
                backend.sgd_step(p, g, lr)
        for p in params:
            if not np.isfinite(p).all():
                raise DivergenceError(
                    f"training diverged at iteration {t}: non-finite parameter",
                    iteration=t,
                )
        losses.append(step_loss)
        lrs.append(lr)
    return trained, TrainHistory(losses=tuple(losses), lrs=tuple(lrs))


def predict(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Argmax class ids from an eval-mode forward; ties break to the lowest id."""
    probs = forward(model, x, mode="eval")
    return np.argmax(probs, axis=1)


def evaluate(model: MlpModel, x: np.ndarray, y: np.ndarray) -> float:
    """Exact-match accuracy in [0, 1]."""
    y = np.asarray(y)
    return float(np.mean(predict(model, x) == y))


def gradient_check(
    model: MlpModel, x: np.ndarray, y: np.ndarray, epsilon: float = 1e-4
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs in float64 with dropout disabled; intended for small models and
    batches. Relative error is |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
    """
    backend = get_backend()
    m = model.astype(np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)

    _, cache = _forward_cached(m, x, "eval", None, backend)
    grads_w, grads_b = _backward(m, cache, y, backend)
    analytic = [g for pair in zip(grads_w, grads_b) for g in pair]

    def loss_at() -> float:
        probs, _ = _forward_cached(m, x, "eval", None, backend)
        return backend.nll_loss(probs, y)

    worst = 0.0
    for param, grad in zip(m.parameters(), analytic):
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.shape[0]):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = loss_at()
            flat[i] = orig - epsilon
            down = loss_at()
            flat[i] = orig
            numeric = (up - down) / (2.0 * epsilon)
            denom = max(abs(gflat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


def save_model(model: MlpModel, path: str | Path) -> None:
    """Versioned binary checkpoint; parameters as float32 LE, round-trip exact."""
    header = json.dumps(
        {
            "config": model.config.to_dict(),
            "input_dim": model.input_dim,
            "num_classes": model.num_classes,
            "shapes": [list(p.shape) for p in model.parameters()],
        }
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<II", _CKPT_VERSION, len(header)))
        f.write(header)
        for p in model.parameters():
            f.write(np.ascontiguousarray(p, dtype="<f4").tobytes())


def load_model(path: str | Path) -> MlpModel:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != _CKPT_MAGIC:
        raise FsiError(f"{path}: not a model checkpoint")
    version, header_len = struct.unpack_from("<II", data, 4)
    if version != _CKPT_VERSION:
        raise FsiError(f"{path}: unsupported checkpoint version {version}")
    try:
        header = json.loads(data[12 : 12 + header_len].decode("utf-8"))
        config = MlpConfig.from_dict(header["config"])
        shapes = [tuple(s) for s in header["shapes"]]
        input_dim = int(header["input_dim"])
        num_classes = int(header["num_classes"])
    except (json.JSONDecodeError, KeyError, ValueError, UnicodeDecodeError) as exc:
        raise FsiError(f"{path}: malformed checkpoint header: {exc}") from exc

    offset = 12 + header_len
    params = []
    for shape in shapes:
        n = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=offset)
        params.append(arr.reshape(shape).astype(np.float32, copy=True))
        offset += n * 4
    if offset != len(data):
        raise FsiError(f"{path}: trailing bytes in checkpoint")
    weights = params[0::2]
    biases = params[1::2]
    return MlpModel(
        weights=weights,
        biases=biases,
        input_dim=input_dim,
        num_classes=num_classes,
        config=config,
    )


def pivot_config(seed: int = 0, iterations: int = 500) -> MlpConfig:
    """The base configuration every sweep varies one factor from."""
    return MlpConfig(seed=seed, iterations=iterations)


def config_with_seed(config: MlpConfig, seed: int) -> MlpConfig:
    return replace(config, seed=seed)
