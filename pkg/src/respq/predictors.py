"""Learned per-segment quality models behind a small predictor contract.

Two reference implementations: a feedforward regressor that predicts the
absolute RR error of one (segment, method) pair from its ten scaled quality
metrics, and a multinomial logistic classifier that picks the method with
the lowest error for a window from the concatenated scaled metrics of all
methods.  Anything with the same ``predict`` / ``predict_best_method``
surface can stand in (tree ensembles later, oracle mocks in tests).

Training is plain seeded mini-batch gradient descent in numpy: deterministic
given (data, config, seed), bit-identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LabelOutOfRange, NonFiniteLoss, ShapeMismatch, TooFewSamples

REGRESSOR_LAYERS = (10, 32, 16, 1)


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 42
    epochs: int = 200
    learning_rate: float = 1e-2
    batch_size: int = 32
    validation_fraction: float = 0.0

    def __post_init__(self):
        if self.epochs <= 0 or self.learning_rate <= 0 or self.batch_size <= 0:
            raise ShapeMismatch(f"training config fields must be positive: {self}")
        if not 0.0 <= self.validation_fraction <= 0.5:
            raise ShapeMismatch(f"validation fraction {self.validation_fraction} not in [0, 0.5]")


@dataclass
class StandardScaler:
    """Column z-scoring with constant columns passed through unscaled."""

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.mean.size:
            raise ShapeMismatch(f"expected {self.mean.size} features, got {x.shape[-1]}")
        return (x - self.mean) / self.std

    def inverse_transform(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std + self.mean


def fit_scaler(features: np.ndarray) -> StandardScaler:
    """Population mean/std per column; zero-std columns are flagged and kept as-is."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise TooFewSamples(f"scaler needs a 2-D matrix with >= 2 rows, got {x.shape}")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    constant = std == 0.0
    safe_std = np.where(constant, 1.0, std)
    return StandardScaler(mean=np.where(constant, 0.0, mean), std=safe_std, constant=constant)


def _init_layers(sizes, rng):
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return weights, biases


@dataclass
class RegressorModel:
    """Rectifier MLP with a linear scalar output."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    meta: dict = field(default_factory=dict)

    def _forward(self, x: np.ndarray):
        a = np.asarray(x, dtype=np.float64).T
        pre = []
        acts = [a]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = w @ a + b[:, None]
            pre.append(z)
            a = np.maximum(z, 0.0) if i < len(self.weights) - 1 else z
            acts.append(a)
        return pre, acts

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.layer_sizes[0]:
            raise ShapeMismatch(f"expected {self.layer_sizes[0]} features, got {x.shape[1]}")
        _, acts = self._forward(x)
        return acts[-1][0].copy()

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        """Mean-squared-error loss and its analytic parameter gradients."""
        pre, acts = self._forward(x)
        pred = acts[-1][0]
        resid = pred - y
        n = y.size
        loss = float(np.mean(resid**2))
        delta = (2.0 / n) * resid[None, :]
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w[i] = delta @ acts[i].T
            grads_b[i] = delta.sum(axis=1)
            if i > 0:
                delta = (self.weights[i].T @ delta) * (pre[i - 1] > 0.0)
        return loss, grads_w, grads_b


def train_regressor(
    features: np.ndarray, targets: np.ndarray, cfg: TrainConfig = TrainConfig()
) -> RegressorModel:
    """Fit the error regressor with seeded mini-batch gradient descent."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ShapeMismatch(f"features {x.shape} vs targets {y.shape}")
    if x.shape[0] < 10:
        raise TooFewSamples(f"need at least 10 samples, got {x.shape[0]}")
    sizes = (x.shape[1],) + REGRESSOR_LAYERS[1:]
    rng = np.random.default_rng(cfg.seed)
    weights, biases = _init_layers(sizes, rng)
    model = RegressorModel(sizes, weights, biases)
    _sgd(model, x, y, cfg, rng)
    final_loss, _, _ = model.loss_and_grads(x, y)
    model.meta = {
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "learning_rate": cfg.learning_rate,
        "batch_size": cfg.batch_size,
        "final_loss": final_loss,
    }
    return model


def _sgd(model, x, y, cfg, rng):
    n = x.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, gw, gb = model.loss_and_grads(x[idx], y[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"training diverged, loss={loss}")
            for i in range(len(model.weights)):
                model.weights[i] -= cfg.learning_rate * gw[i]
                model.biases[i] -= cfg.learning_rate * gb[i]


def predict_mae(model: RegressorModel, features: np.ndarray) -> np.ndarray:
    """Predicted absolute error per row; intentionally unclamped."""
    return model.predict(features)


@dataclass
class ClassifierModel:
    """Multinomial logistic model over concatenated per-method metrics."""

    n_features: int
    n_classes: int
    weights: np.ndarray
    biases: np.ndarray
    meta: dict = field(default_factory=dict)

    def _logits(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected {self.n_features} features, got {x.shape[1]}")
        return x @ self.weights.T + self.biases

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        logits = self._logits(x)
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        return e / e.sum(axis=1, keepdims=True)

    def predict_best_method(self, x: np.ndarray) -> np.ndarray:
        """Most probable class per row; argmax ties resolve to the lowest index."""
        return np.argmax(self.predict_proba(x), axis=1)

    def loss_and_grads(self, x: np.ndarray, labels: np.ndarray):
        """Cross-entropy loss and analytic gradients."""
        proba = self.predict_proba(x)
        n = labels.size
        rows = np.arange(n)
        loss = float(-np.mean(np.log(np.maximum(proba[rows, labels], 1e-300))))
        d = proba
        d[rows, labels] -= 1.0
        d /= n
        grad_w = d.T @ np.atleast_2d(np.asarray(x, dtype=np.float64))
        grad_b = d.sum(axis=0)
        return loss, grad_w, grad_b


def labels_from_errors(errors: np.ndarray) -> np.ndarray:
    """Per-window index of the lowest-error method; ties to the lowest index."""
    return np.argmin(np.asarray(errors, dtype=np.float64), axis=1)


def train_classifier(
    features: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    cfg: TrainConfig = TrainConfig(),
) -> ClassifierModel:
    """Fit the best-method classifier with seeded gradient descent."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ShapeMismatch(f"features {x.shape} vs labels {y.shape}")
    if x.shape[0] < 10:
        raise TooFewSamples(f"need at least 10 windows, got {x.shape[0]}")
    if y.min() < 0 or y.max() >= n_classes:
        raise LabelOutOfRange(f"labels outside [0, {n_classes})")
    rng = np.random.default_rng(cfg.seed)
    model = ClassifierModel(
        n_features=x.shape[1],
        n_classes=n_classes,
        weights=rng.normal(0.0, np.sqrt(1.0 / x.shape[1]), (n_classes, x.shape[1])),
        biases=np.zeros(n_classes),
    )
    n = x.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, gw, gb = model.loss_and_grads(x[idx], y[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"training diverged, loss={loss}")
            model.weights -= cfg.learning_rate * gw
            model.biases -= cfg.learning_rate * gb
    final_loss, _, _ = model.loss_and_grads(x, y)
    model.meta = {
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "learning_rate": cfg.learning_rate,
        "batch_size": cfg.batch_size,
        "final_loss": final_loss,
    }
    return model


# ---------------------------------------------------------------------------
# flat text serialization: key = value lines plus named numeric blocks,
# 17 significant digits so float64 values round-trip bit-exactly
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _write_block(lines: list[str], name: str, arr: np.ndarray) -> None:
    arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    lines.append(f"block {name} {arr.shape[0]} {arr.shape[1]}")
    for row in arr:
        lines.append(" ".join(_fmt(v) for v in row))


def save_model(obj, path) -> None:
    """Serialize a scaler or model to the flat text format."""
    lines: list[str] = ["format = respq-model-v1"]
    if isinstance(obj, StandardScaler):
        lines.append("kind = scaler")
        _write_block(lines, "mean", obj.mean)
        _write_block(lines, "std", obj.std)
        _write_block(lines, "constant", obj.constant.astype(np.float64))
    elif isinstance(obj, RegressorModel):
        lines.append("kind = regressor")
        lines.append("layer_sizes = " + " ".join(str(s) for s in obj.layer_sizes))
        for key, val in obj.meta.items():
            lines.append(f"{key} = {_fmt(val) if isinstance(val, float) else val}")
        for i, (w, b) in enumerate(zip(obj.weights, obj.biases)):
            _write_block(lines, f"W{i}", w)
            _write_block(lines, f"b{i}", b)
    elif isinstance(obj, ClassifierModel):
        lines.append("kind = classifier")
        lines.append(f"n_features = {obj.n_features}")
        lines.append(f"n_classes = {obj.n_classes}")
        for key, val in obj.meta.items():
            lines.append(f"{key} = {_fmt(val) if isinstance(val, float) else val}")
        _write_block(lines, "W", obj.weights)
        _write_block(lines, "b", obj.biases)
    else:
        raise ShapeMismatch(f"cannot serialize {type(obj).__name__}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse(path):
    keys: dict[str, str] = {}
    blocks: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line.startswith("block "):
            _, name, rows, cols = line.split()
            rows, cols = int(rows), int(cols)
            data = []
            for _ in range(rows):
                data.append([float(v) for v in lines[i].split()])
                i += 1
            blocks[name] = np.array(data, dtype=np.float64).reshape(rows, cols)
        elif "=" in line:
            key, _, val = line.partition("=")
            keys[key.strip()] = val.strip()
    return keys, blocks


def load_model(path):
    """Inverse of save_model; returns a scaler, regressor, or classifier."""
    keys, blocks = _parse(path)
    kind = keys.get("kind", "")
    meta_keys = ("seed", "epochs", "learning_rate", "batch_size", "final_loss")
    if kind == "scaler":
        return StandardScaler(
            mean=blocks["mean"][0],
            std=blocks["std"][0],
            constant=blocks["constant"][0].astype(bool),
        )
    if kind == "regressor":
        sizes = tuple(int(s) for s in keys["layer_sizes"].split())
        weights = []
        biases = []
        for i in range(len(sizes) - 1):
            weights.append(blocks[f"W{i}"])
            biases.append(blocks[f"b{i}"][0])
        meta = {k: _meta_value(k, keys[k]) for k in meta_keys if k in keys}
        return RegressorModel(sizes, weights, biases, meta)
    if kind == "classifier":
        meta = {k: _meta_value(k, keys[k]) for k in meta_keys if k in keys}
        return ClassifierModel(
            n_features=int(keys["n_features"]),
            n_classes=int(keys["n_classes"]),
            weights=blocks["W"],
            biases=blocks["b"][0],
            meta=meta,
        )
    raise ShapeMismatch(f"unknown model kind {kind!r} in {path}")


def _meta_value(key: str, raw: str):
    if key in ("seed", "epochs", "batch_size"):
        return int(raw)
    return float(raw)
