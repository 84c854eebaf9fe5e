"""Feed-forward regression network written directly on numpy.

Hidden layers use ReLU and the output unit is linear. Loss is the batch
MSE with an optional L1 or L2 weight penalty scaled by lambda/(2M);
biases are never penalized. Parameters are updated either by plain
gradient descent or by Adam.

Arrays are batch-first: inputs have shape (M, n_in), and
``weights[l]`` has shape (dims[l+1], dims[l]).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

REGULARIZATIONS = ("none", "l1", "l2")
OPTIMIZERS = ("adam", "plain_gd")
DEFAULT_DIMS = (8, 100, 100, 1)
HISTORY_STRIDE = 100
_TINY = np.finfo(float).tiny


class DivergenceError(FloatingPointError):
    """Raised when a forward pass or loss becomes non-finite."""


@dataclass
class Mlp:
    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    norm_mean: Optional[np.ndarray] = None
    norm_std: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("number of layers does not match layer_dims")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_dims[l + 1], self.layer_dims[l]):
                raise ValueError(f"weight {l} has shape {w.shape}")
            if b.shape != (self.layer_dims[l + 1],):
                raise ValueError(f"bias {l} has shape {b.shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise DivergenceError(f"layer {l} has non-finite parameters")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def with_params(self, weights: list[np.ndarray], biases: list[np.ndarray]) -> "Mlp":
        return replace(self, weights=weights, biases=biases)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    reg_lambda: float = 5e-4
    batch_size: int = 10
    regularization: str = "none"
    optimizer: str = "adam"
    epochs: int = 10
    seed: int = 0
    hidden: tuple[int, ...] = (100, 100)
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    standardize: bool = False
    early_stopping_patience: Optional[int] = None
    history_stride: int = HISTORY_STRIDE

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not self.reg_lambda >= 0:
            raise ValueError("reg_lambda must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.regularization not in REGULARIZATIONS:
            raise ValueError(f"regularization must be one of {REGULARIZATIONS}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.history_stride < 1:
            raise ValueError("history_stride must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(**d)


@dataclass
class GradientSet:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    deltas: list[np.ndarray]  # deltas[l] has shape (M, dims[l+1])
    batch_size: int


@dataclass
class AdamState:
    step: int
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]

    @classmethod
    def zeros(cls, m: Mlp) -> "AdamState":
        return cls(
            0,
            [np.zeros_like(w) for w in m.weights],
            [np.zeros_like(w) for w in m.weights],
            [np.zeros_like(b) for b in m.biases],
            [np.zeros_like(b) for b in m.biases],
        )


def xavier_init(layer_dims: Sequence[int], seed: int) -> Mlp:
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2 or min(dims) < 1:
        raise ValueError(f"invalid layer_dims {layer_dims!r}")
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(dims, weights, biases)


def _prepare_input(m: Mlp, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != m.layer_dims[0]:
        raise ValueError(f"expected {m.layer_dims[0]} input features, got {x.shape[1]}")
    if m.norm_mean is not None:
        x = (x - m.norm_mean) / m.norm_std
    return x


def forward(m: Mlp, x) -> tuple[np.ndarray, dict]:
    """Run the network on one sample or a batch.

    Returns the raw (unclipped) output of shape (M,) and a cache holding
    every pre-activation ``z`` and activation ``a`` (``a[0]`` is the input).
    """
    a = _prepare_input(m, x)
    acts, pre = [a], []
    last = m.n_layers - 1
    # overflow is reported below as divergence rather than as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for l, (w, b) in enumerate(zip(m.weights, m.biases)):
            z = a @ w.T + b
            a = z if l == last else np.maximum(z, 0.0)
            pre.append(z)
            acts.append(a)
    if not np.all(np.isfinite(a)):
        raise DivergenceError("non-finite network output")
    return a[:, 0], {"a": acts, "z": pre}


def _penalty(m: Mlp, reg: str, lam: float, batch_size: int) -> float:
    if reg == "none" or lam == 0:
        return 0.0
    if reg == "l1":
        total = sum(float(np.abs(w).sum()) for w in m.weights)
    elif reg == "l2":
        total = sum(float((w * w).sum()) for w in m.weights)
    else:
        raise ValueError(f"unknown regularization {reg!r}")
    return lam / (2.0 * batch_size) * total


def loss(m: Mlp, x, labels, reg: str = "none", lam: float = 0.0) -> float:
    labels = np.atleast_1d(np.asarray(labels, dtype=float))
    if labels.size == 0:
        raise ValueError("empty batch")
    y, _ = forward(m, x)
    value = float(np.mean((y - labels) ** 2)) + _penalty(m, reg, lam, labels.size)
    if not math.isfinite(value):
        raise DivergenceError("non-finite loss")
    return value


def backprop(m: Mlp, x, labels) -> GradientSet:
    """Gradients of the batch MSE (no penalty) with respect to W and b."""
    labels = np.atleast_1d(np.asarray(labels, dtype=float))
    y, cache = forward(m, x)
    batch = labels.size
    acts, pre = cache["a"], cache["z"]
    delta = (2.0 * (y - labels))[:, None]
    deltas: list[np.ndarray] = [None] * m.n_layers  # type: ignore[list-item]
    grad_w: list[np.ndarray] = [None] * m.n_layers  # type: ignore[list-item]
    grad_b: list[np.ndarray] = [None] * m.n_layers  # type: ignore[list-item]
    for l in range(m.n_layers - 1, -1, -1):
        deltas[l] = delta
        grad_w[l] = delta.T @ acts[l] / batch
        grad_b[l] = delta.sum(axis=0) / batch
        if l > 0:
            delta = (delta @ m.weights[l]) * (pre[l - 1] > 0)
    return GradientSet(grad_w, grad_b, deltas, batch)


def penalty_gradient(w: np.ndarray, reg: str, lam: float, batch_size: int) -> np.ndarray:
    # sign(0) = 0 keeps the L1 step a plain descent step at the kink
    if reg == "l1":
        return lam / (2.0 * batch_size) * np.sign(w)
    if reg == "l2":
        return lam / batch_size * w
    return np.zeros_like(w)


def loss_gradient(m: Mlp, x, labels, reg: str = "none", lam: float = 0.0) -> GradientSet:
    """Full gradient of ``loss`` including the weight penalty."""
    g = backprop(m, x, labels)
    if reg != "none" and lam != 0:
        g.weights = [gw + penalty_gradient(w, reg, lam, g.batch_size) for gw, w in zip(g.weights, m.weights)]
    return g


def step_plain(m: Mlp, grads: GradientSet, cfg: TrainConfig) -> Mlp:
    lr = cfg.learning_rate
    return m.with_params(
        [w - lr * gw for w, gw in zip(m.weights, grads.weights)],
        [b - lr * gb for b, gb in zip(m.biases, grads.biases)],
    )


def step_l1(m: Mlp, grads: GradientSet, cfg: TrainConfig) -> Mlp:
    lr, shrink = cfg.learning_rate, cfg.learning_rate * cfg.reg_lambda / (2.0 * grads.batch_size)
    return m.with_params(
        [w - lr * gw - shrink * np.sign(w) for w, gw in zip(m.weights, grads.weights)],
        [b - lr * gb for b, gb in zip(m.biases, grads.biases)],
    )


def step_l2(m: Mlp, grads: GradientSet, cfg: TrainConfig) -> Mlp:
    lr = cfg.learning_rate
    decay = 1.0 - lr * cfg.reg_lambda / grads.batch_size
    return m.with_params(
        [decay * w - lr * gw for w, gw in zip(m.weights, grads.weights)],
        [b - lr * gb for b, gb in zip(m.biases, grads.biases)],
    )


def _flush_subnormal(x: np.ndarray) -> np.ndarray:
    # weight decay under Adam shrinks dead units geometrically; subnormal
    # values change no output but make every later matmul many times slower
    return np.where(np.abs(x) < _TINY, 0.0, x)


def step_adam(m: Mlp, grads: GradientSet, state: AdamState, cfg: TrainConfig) -> tuple[Mlp, AdamState]:
    """One Adam update; the weight penalty is folded into the gradient first.

    Parameters and moments that fall into the subnormal range are set to 0.
    """
    b1, b2, eps, lr = cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.learning_rate
    step = state.step + 1
    corr1, corr2 = 1.0 - b1**step, 1.0 - b2**step

    def update(p, g, mom, vel):
        mom = b1 * mom + (1.0 - b1) * g
        vel = b2 * vel + (1.0 - b2) * g * g
        p = p - lr * (mom / corr1) / (np.sqrt(vel / corr2) + eps)
        return _flush_subnormal(p), _flush_subnormal(mom), _flush_subnormal(vel)

    new_w, m_w, v_w = [], [], []
    for w, gw, mom, vel in zip(m.weights, grads.weights, state.m_w, state.v_w):
        gw = gw + penalty_gradient(w, cfg.regularization, cfg.reg_lambda, grads.batch_size)
        p, mom, vel = update(w, gw, mom, vel)
        new_w.append(p)
        m_w.append(mom)
        v_w.append(vel)
    new_b, m_b, v_b = [], [], []
    for b, gb, mom, vel in zip(m.biases, grads.biases, state.m_b, state.v_b):
        p, mom, vel = update(b, gb, mom, vel)
        new_b.append(p)
        m_b.append(mom)
        v_b.append(vel)
    return m.with_params(new_w, new_b), AdamState(step, m_w, v_w, m_b, v_b)


_PLAIN_STEPS = {"none": step_plain, "l1": step_l1, "l2": step_l2}


def predict_power(m: Mlp, x, max_power: float) -> np.ndarray:
    """Network output clipped to the feasible power range [0, P_t]."""
    y, _ = forward(m, x)
    return np.clip(y, 0.0, max_power)


def mse(m: Mlp, x, labels, chunk: int = 8192) -> float:
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels, dtype=float)
    total = 0.0
    for i in range(0, len(labels), chunk):
        y, _ = forward(m, x[i : i + chunk])
        total += float(np.sum((y - labels[i : i + chunk]) ** 2))
    return total / len(labels)


@dataclass
class TrainResult:
    model: Mlp
    history: list[tuple[int, float, float]]
    final_train_mse: float
    final_val_mse: float


def train(
    x_train,
    y_train,
    cfg: TrainConfig,
    x_val=None,
    y_val=None,
) -> TrainResult:
    """Mini-batch training.

    Every ``cfg.history_stride`` steps a ``(step, train_mse, val_mse)`` entry
    is recorded, where train_mse is the mean data MSE of the mini-batches
    since the previous entry and val_mse is computed on the full
    validation set (NaN without one).
    """
    x_train = np.asarray(x_train, dtype=float)
    y_train = np.asarray(y_train, dtype=float)
    if x_train.ndim != 2 or len(x_train) != len(y_train) or len(y_train) == 0:
        raise ValueError("training inputs must be a non-empty (n, d) matrix with n labels")
    has_val = x_val is not None and len(x_val) > 0
    dims = (x_train.shape[1], *cfg.hidden, 1)
    model = xavier_init(dims, cfg.seed)
    if cfg.standardize:
        std = x_train.std(axis=0)
        model.norm_mean = x_train.mean(axis=0)
        model.norm_std = np.where(std > 0, std, 1.0)
    rng = np.random.default_rng([cfg.seed & 0xFFFFFFFFFFFFFFFF, 1])
    state = AdamState.zeros(model)
    plain_step = _PLAIN_STEPS[cfg.regularization]

    history: list[tuple[int, float, float]] = []
    window: list[float] = []
    best_val, best_model, stale = math.inf, model, 0
    step = 0
    n = len(y_train)
    stop = False
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            grads = backprop(model, xb, yb)
            # residual is the last-layer delta / 2
            with np.errstate(over="ignore", invalid="ignore"):
                batch_mse = float(np.mean((grads.deltas[-1][:, 0] / 2.0) ** 2))
            if not math.isfinite(batch_mse):
                raise DivergenceError(f"non-finite training loss at step {step}")
            window.append(batch_mse)
            if cfg.optimizer == "adam":
                model, state = step_adam(model, grads, state, cfg)
            else:
                model = plain_step(model, grads, cfg)
            step += 1
            if step % cfg.history_stride == 0:
                val = mse(model, x_val, y_val) if has_val else math.nan
                if has_val and not math.isfinite(val):
                    raise DivergenceError(f"non-finite validation loss at step {step}")
                history.append((step, float(np.mean(window)), val))
                window = []
                if cfg.early_stopping_patience is not None and has_val:
                    if val < best_val:
                        best_val, best_model, stale = val, model, 0
                    else:
                        stale += 1
                        if stale >= cfg.early_stopping_patience:
                            stop = True
                            break
        if stop:
            break
    if cfg.early_stopping_patience is not None and has_val and best_model is not model:
        model = best_model

    final_train = mse(model, x_train, y_train)
    final_val = mse(model, x_val, y_val) if has_val else math.nan
    model.info.update(
        {
            "config": cfg.to_dict(),
            "final_train_mse": final_train,
            "final_val_mse": final_val if math.isfinite(final_val) else None,
            "steps": step,
        }
    )
    return TrainResult(model, history, final_train, final_val)


def model_to_dict(m: Mlp) -> dict:
    doc = {
        "layer_dims": list(m.layer_dims),
        "activation": {"hidden": "relu", "output": "linear"},
        "weights": [w.tolist() for w in m.weights],
        "biases": [b.tolist() for b in m.biases],
        "normalization": None
        if m.norm_mean is None
        else {"mean": m.norm_mean.tolist(), "std": m.norm_std.tolist()},
    }
    for key in sorted(m.info):
        doc[key] = m.info[key]
    return doc


def model_from_dict(doc: dict) -> Mlp:
    reserved = {"layer_dims", "activation", "weights", "biases", "normalization"}
    norm = doc.get("normalization")
    return Mlp(
        tuple(doc["layer_dims"]),
        [np.array(w, dtype=float).reshape(len(w), -1) for w in doc["weights"]],
        [np.array(b, dtype=float) for b in doc["biases"]],
        norm_mean=None if norm is None else np.array(norm["mean"], dtype=float),
        norm_std=None if norm is None else np.array(norm["std"], dtype=float),
        info={k: v for k, v in doc.items() if k not in reserved},
    )


def save_model(m: Mlp, path) -> None:
    # json writes floats via repr, which round-trips doubles exactly
    Path(path).write_text(json.dumps(model_to_dict(m), indent=1, sort_keys=True) + "\n")


def load_model(path) -> Mlp:
    return model_from_dict(json.loads(Path(path).read_text()))
