"""Minimal reference trainer for small ReLU classifiers.

Produces per-epoch weight checkpoints on synthetic 2-D datasets so the
census/tessellation tools have deterministic inputs to chew on. Hidden ReLU
layers go into ``epoch_{k:04}.rcw``; the linear softmax head is stored in a
``.head.rcw`` sidecar (same container format, one layer) and is excluded
from code extraction.

Training is deliberately plain: Xavier-uniform weights, zero biases, SGD
with a fixed seeded shuffle sequence. Identical configs give bit-identical
checkpoints.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    PreconditionError,
    TrainingDivergedError,
    ValidationError,
)
from .network import AffineLayer, ReluNetwork, relu, save_network

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

GRAD_SAMPLE_MIN = 50
GRAD_REL_FLOOR = 1e-3  # denominator floor; below this, gradients drown in fd noise
KINK_TOL = 1e-4


# ---------------------------------------------------------------------------
# synthetic datasets


def two_moons(n: int = 2000, noise: float = 0.1, seed: int = 0):
    """Two interleaved half-circles with Gaussian jitter. Labels 0/1."""
    if n < 2:
        raise ValidationError(f"two_moons needs n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    n_out = n // 2
    n_in = n - n_out
    t_out = np.linspace(0.0, math.pi, n_out)
    t_in = np.linspace(0.0, math.pi, n_in)
    X = np.concatenate(
        [
            np.column_stack([np.cos(t_out), np.sin(t_out)]),
            np.column_stack([1.0 - np.cos(t_in), 0.5 - np.sin(t_in)]),
        ]
    )
    X += rng.normal(scale=noise, size=X.shape)
    y = np.concatenate([np.zeros(n_out, dtype=np.int64), np.ones(n_in, dtype=np.int64)])
    perm = rng.permutation(n)
    return X[perm], y[perm]


def gaussian_blobs(
    n: int = 1500,
    noise: float = 0.5,
    seed: int = 0,
    centers=((-2.0, -2.0), (2.0, -2.0), (0.0, 2.0)),
):
    """Isotropic Gaussian clusters, one label per center."""
    centers = np.asarray(centers, dtype=np.float64)
    if n < len(centers):
        raise ValidationError(f"need at least {len(centers)} points, got {n}")
    rng = np.random.default_rng(seed)
    counts = [n // len(centers)] * len(centers)
    for i in range(n - sum(counts)):
        counts[i] += 1
    X = np.concatenate(
        [rng.normal(scale=noise, size=(cnt, centers.shape[1])) + c
         for cnt, c in zip(counts, centers)]
    )
    y = np.concatenate(
        [np.full(cnt, lab, dtype=np.int64) for lab, cnt in enumerate(counts)]
    )
    perm = rng.permutation(n)
    return X[perm], y[perm]


DATASETS = {"two_moons": two_moons, "gaussian_blobs": gaussian_blobs}


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "two_moons"
    size: int = 2000
    noise: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DATASETS:
            raise ValidationError(
                f"unknown dataset {self.kind!r}; available: {sorted(DATASETS)}"
            )
        if self.size < 2:
            raise ValidationError(f"dataset size must be >= 2, got {self.size}")

    def generate(self):
        return DATASETS[self.kind](self.size, self.noise, self.seed)


@dataclass(frozen=True)
class TrainConfig:
    architecture: tuple
    learning_rate: float
    epochs: int
    checkpoint_dir: Path
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "architecture", tuple(int(w) for w in self.architecture))
        object.__setattr__(self, "checkpoint_dir", Path(self.checkpoint_dir))
        if not self.architecture or any(w < 1 for w in self.architecture):
            raise ValidationError(
                f"architecture must be positive widths, got {list(self.architecture)}"
            )
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")


def load_train_config(path) -> TrainConfig:
    """Read a TOML or JSON config mirroring the TrainConfig fields."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix == ".json" or text.lstrip()[:1] == b"{":
        obj = json.loads(text.decode("utf-8"))
    else:
        obj = tomllib.loads(text.decode("utf-8"))
    ds = obj.pop("dataset", {})
    if isinstance(ds, str):
        ds = {"kind": ds}
    known = {"architecture", "learning_rate", "epochs", "checkpoint_dir",
             "batch_size", "seed"}
    unknown = set(obj) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    if "checkpoint_dir" in obj and not Path(obj["checkpoint_dir"]).is_absolute():
        obj["checkpoint_dir"] = path.parent / obj["checkpoint_dir"]
    try:
        return TrainConfig(dataset=DatasetSpec(**ds), **obj)
    except TypeError as exc:
        raise ValidationError(f"bad config: {exc}") from None


# ---------------------------------------------------------------------------
# model


class MlpClassifier:
    """Mutable MLP: hidden ReLU layers plus a linear softmax head.

    Weight matrices are (fan_out, fan_in), matching the checkpoint layout.
    """

    def __init__(self, weights, biases, head_weight, head_bias):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.head_weight = np.asarray(head_weight, dtype=np.float64)
        self.head_bias = np.asarray(head_bias, dtype=np.float64)

    @classmethod
    def init(cls, input_dim: int, hidden_widths, n_classes: int, rng) -> "MlpClassifier":
        """Xavier-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases."""
        if isinstance(rng, (int, np.integer)):
            rng = np.random.default_rng(rng)
        dims = [input_dim, *hidden_widths, n_classes]
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(weights[:-1], biases[:-1], weights[-1], biases[-1])

    @property
    def input_dim(self) -> int:
        first = self.weights[0] if self.weights else self.head_weight
        return first.shape[1]

    @property
    def n_classes(self) -> int:
        return self.head_weight.shape[0]

    def parameters(self):
        return [*self.weights, *self.biases, self.head_weight, self.head_bias]

    def forward(self, X):
        """Returns (hidden pre-activation list, hidden activation list, logits)."""
        X = np.asarray(X, dtype=np.float64)
        h = X
        pres, acts = [], []
        for W, b in zip(self.weights, self.biases):
            z = h @ W.T + b
            pres.append(z)
            h = relu(z)
            acts.append(h)
        logits = h @ self.head_weight.T + self.head_bias
        return pres, acts, logits

    def hidden_network(self) -> ReluNetwork:
        layers = tuple(AffineLayer(w, b) for w, b in zip(self.weights, self.biases))
        return ReluNetwork(self.input_dim, layers)

    def head_network(self) -> ReluNetwork:
        # container reuse only; the head is applied without ReLU
        return ReluNetwork(
            self.head_weight.shape[1],
            (AffineLayer(self.head_weight, self.head_bias),),
        )


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _one_hot(y, n_classes: int):
    out = np.zeros((len(y), n_classes))
    out[np.arange(len(y)), y] = 1.0
    return out


def loss_and_grads(model: MlpClassifier, X, y, loss: str = "softmax_ce"):
    """Mean loss over the batch plus gradients in parameters() order."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    pres, acts, logits = model.forward(X)
    n = len(X)
    target = _one_hot(y, model.n_classes)
    if loss == "softmax_ce":
        p = softmax(logits)
        safe = np.clip(p[np.arange(n), y], 1e-300, None)
        value = float(-np.log(safe).mean())
        dlogits = (p - target) / n
    elif loss == "squared":
        diff = logits - target
        value = float(0.5 * (diff * diff).sum() / n)
        dlogits = diff / n
    else:
        raise ValueError(f"unknown loss {loss!r}")

    inputs = [X, *acts[:-1]] if acts else [X]
    d_head_w = dlogits.T @ (acts[-1] if acts else X)
    d_head_b = dlogits.sum(axis=0)
    dh = dlogits @ model.head_weight
    d_ws, d_bs = [], []
    for W, z, inp in zip(
        reversed(model.weights), reversed(pres), reversed(inputs)
    ):
        dz = dh * (z > 0)
        d_ws.append(dz.T @ inp)
        d_bs.append(dz.sum(axis=0))
        dh = dz @ W
    d_ws.reverse()
    d_bs.reverse()
    return value, [*d_ws, *d_bs, d_head_w, d_head_b]


def evaluate(model: MlpClassifier, X, y):
    """(mean cross-entropy, accuracy) over a dataset."""
    _, _, logits = model.forward(X)
    p = softmax(logits)
    y = np.asarray(y, dtype=np.int64)
    safe = np.clip(p[np.arange(len(y)), y], 1e-300, None)
    loss = float(-np.log(safe).mean())
    acc = float((logits.argmax(axis=1) == y).mean())
    return loss, acc


def predict_with_head(hidden_net: ReluNetwork, head_net: ReluNetwork, X) -> np.ndarray:
    """Class labels from a checkpoint pair (hidden stack + affine head)."""
    X = np.asarray(X, dtype=np.float64)
    h = X
    for layer in hidden_net.layers:
        h = relu(h @ layer.weights.T + layer.bias)
    head = head_net.layers[0]
    logits = h @ head.weights.T + head.bias
    return logits.argmax(axis=1)


# ---------------------------------------------------------------------------
# training loop


@dataclass(frozen=True)
class TrainResult:
    checkpoint_paths: tuple
    head_paths: tuple
    metrics: tuple  # (epoch, loss, accuracy) rows
    metrics_path: Path
    config: TrainConfig


def train(config: TrainConfig, dataset=None) -> TrainResult:
    """Run SGD and write one checkpoint pair plus one metrics row per epoch.

    dataset overrides the generated one (expects (X, y)); the config's
    dataset block still names the provenance. Raises TrainingDivergedError
    as soon as a non-finite loss shows up.
    """
    if dataset is None:
        X, y = config.dataset.generate()
    else:
        X, y = dataset
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
    if X.shape[1] != 2:
        raise ValidationError(f"trainer datasets are 2-D, got {X.shape[1]} columns")
    n_classes = int(y.max()) + 1
    rng = np.random.default_rng(config.seed)
    model = MlpClassifier.init(X.shape[1], config.architecture, n_classes, rng)

    ckpt_dir = config.checkpoint_dir
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    ckpt_paths, head_paths, metrics = [], [], []
    lr = config.learning_rate
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(len(X))
        for start in range(0, len(X), config.batch_size):
            idx = perm[start : start + config.batch_size]
            value, grads = loss_and_grads(model, X[idx], y[idx])
            if not math.isfinite(value):
                raise TrainingDivergedError(
                    f"loss became non-finite at epoch {epoch}", epoch=epoch
                )
            for param, grad in zip(model.parameters(), grads):
                param -= lr * grad
        loss, acc = evaluate(model, X, y)
        if not math.isfinite(loss):
            raise TrainingDivergedError(
                f"loss became non-finite at epoch {epoch}", epoch=epoch
            )
        ckpt = ckpt_dir / f"epoch_{epoch:04}.rcw"
        head = ckpt_dir / f"epoch_{epoch:04}.head.rcw"
        save_network(model.hidden_network(), ckpt, fmt="bin")
        save_network(model.head_network(), head, fmt="bin")
        ckpt_paths.append(ckpt)
        head_paths.append(head)
        metrics.append((epoch, loss, acc))

    metrics_path = ckpt_dir / "metrics.csv"
    with open(metrics_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "train_accuracy"])
        for epoch, loss, acc in metrics:
            writer.writerow([epoch, f"{loss:.10g}", f"{acc:.6g}"])
    return TrainResult(
        tuple(ckpt_paths), tuple(head_paths), tuple(metrics), metrics_path, config
    )


# ---------------------------------------------------------------------------
# gradient check


def min_abs_preactivation(model: MlpClassifier, X) -> float:
    """Smallest hidden |pre-activation| over the batch; 0 distance to a kink."""
    pres, _, _ = model.forward(X)
    if not pres:
        return math.inf
    return min(float(np.abs(z).min()) for z in pres)


def gradient_check(
    model: MlpClassifier,
    X,
    y,
    h: float = 1e-5,
    n_params: int = GRAD_SAMPLE_MIN,
    loss: str = "softmax_ce",
    seed: int = 0,
) -> float:
    """Max relative gap between analytic and central-difference gradients.

    Samples >= n_params parameters (all of them on tiny models). Relative
    error uses a denominator floor so finite-difference roundoff on
    near-zero gradients does not read as failure. Callers wanting the
    advertised 1e-5 accuracy must pass batches clear of ReLU kinks
    (min_abs_preactivation > KINK_TOL); crossing a kink breaks the
    central-difference expansion itself.
    """
    if not h > 0:
        raise PreconditionError(f"step size must be > 0, got {h}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _, analytic = loss_and_grads(model, X, y, loss=loss)
    params = model.parameters()
    sizes = [p.size for p in params]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    k = min(max(n_params, GRAD_SAMPLE_MIN), total)
    chosen = rng.choice(total, size=k, replace=False)

    bounds = np.cumsum([0, *sizes])
    worst = 0.0
    for flat_idx in chosen:
        p_idx = int(np.searchsorted(bounds, flat_idx, side="right") - 1)
        local = int(flat_idx - bounds[p_idx])
        param = params[p_idx]
        flat = param.reshape(-1)
        orig = flat[local]
        flat[local] = orig + h
        up, _ = loss_and_grads(model, X, y, loss=loss)
        flat[local] = orig - h
        down, _ = loss_and_grads(model, X, y, loss=loss)
        flat[local] = orig
        numeric = (up - down) / (2.0 * h)
        ana = float(analytic[p_idx].reshape(-1)[local])
        rel = abs(ana - numeric) / max(abs(ana), abs(numeric), GRAD_REL_FLOOR)
        worst = max(worst, rel)
    return worst


def config_for_run(base: TrainConfig, learning_rate: float, subdir: str) -> TrainConfig:
    """Clone a config with a new learning rate and checkpoint subdirectory."""
    return replace(
        base,
        learning_rate=learning_rate,
        checkpoint_dir=base.checkpoint_dir / subdir,
    )
