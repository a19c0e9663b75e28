"""Reference estimator: a small numpy MLP with sigmoid outputs, manual
backpropagation, SGD/Adam, and the training loop for both heads.

The hierarchical head has one output per hierarchy node and is trained with
the masked loss; the baseline head has one output per labeled class and is
trained with the one-hot loss.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass

import numpy as np

from hierdag import inference, loss
from hierdag.data import Dataset, apply_standardization, fit_standardization
from hierdag.encoding import TargetTable
from hierdag.errors import (
    EmptyDataset,
    InvalidConfig,
    LabelNotInHierarchy,
    ParseError,
    ShapeMismatch,
)
from hierdag.hierarchy import Hierarchy, format_hierarchy, parse_hierarchy
from hierdag.metrics import Checkpoint, RunMetrics

log = logging.getLogger(__name__)

EPS = 1e-7
MODEL_FORMAT = "hierdag-model"
MODEL_VERSION = 1
HEADS = ("hierarchical", "baseline")


def sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class MLP:
    """Dense network ``x -> [tanh(affine)]* -> sigmoid(affine)``.

    ``hidden=()`` gives a linear model. Weights are stored as
    ``(fan_in, fan_out)`` matrices so a batch ``X @ W + b`` works directly.
    """

    def __init__(self, weights, biases):
        if len(weights) != len(biases) or not weights:
            raise ShapeMismatch("need one bias per weight matrix")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if b.shape != (w.shape[1],):
                raise ShapeMismatch(f"layer {i}: bias {b.shape} vs weight {w.shape}")
            if i and weights[i - 1].shape[1] != w.shape[0]:
                raise ShapeMismatch(f"layer {i}: input width {w.shape[0]} != {weights[i - 1].shape[1]}")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]

    @classmethod
    def init(cls, in_dim: int, hidden, out_dim: int, rng) -> "MLP":
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(rng)
        widths = [in_dim, *hidden, out_dim]
        weights, biases = [], []
        for fan_in, fan_out in zip(widths, widths[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def hidden(self) -> tuple[int, ...]:
        return tuple(w.shape[1] for w in self.weights[:-1])

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def _check_input(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeMismatch(f"expected inputs of width {self.in_dim}, got shape {x.shape}")
        return x, single

    def _forward(self, x):
        acts = [x]
        a = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.tanh(a @ w + b)
            acts.append(a)
        raw = sigmoid(a @ self.weights[-1] + self.biases[-1])
        return acts, raw

    def forward(self, x) -> np.ndarray:
        """Outputs in ``[EPS, 1 - EPS]`` for one sample or a batch."""
        x, single = self._check_input(x)
        _, raw = self._forward(x)
        out = np.clip(raw, EPS, 1.0 - EPS)
        return out[0] if single else out

    def backward(self, x, grad_out) -> list[np.ndarray]:
        """Gradients of ``sum(grad_out * forward(x))`` w.r.t. :meth:`params`.

        Components held at the clamp bounds pass no gradient.
        """
        x, single = self._check_input(x)
        g = np.asarray(grad_out, dtype=np.float64)
        if single:
            g = g[None, :]
        if g.shape != (x.shape[0], self.out_dim):
            raise ShapeMismatch(f"grad_out shape {g.shape}, expected {(x.shape[0], self.out_dim)}")
        acts, raw = self._forward(x)
        live = (raw > EPS) & (raw < 1.0 - EPS)
        delta = g * raw * (1.0 - raw) * live
        grads: list[np.ndarray] = []
        for layer in range(len(self.weights) - 1, -1, -1):
            a = acts[layer]
            grads.append(delta.sum(axis=0))
            grads.append(a.T @ delta)
            if layer:
                delta = (delta @ self.weights[layer].T) * (1.0 - a * a)
        grads.reverse()
        return grads


class SGD:
    def __init__(self, lr: float = 0.01):
        self.lr = lr
        self.t = 0

    def step(self, params, grads) -> None:
        if len(params) != len(grads):
            raise ShapeMismatch("parameter and gradient counts differ")
        for p, g in zip(params, grads):
            if p.shape != g.shape:
                raise ShapeMismatch(f"gradient shape {g.shape} vs parameter {p.shape}")
            p -= self.lr * g
        self.t += 1


class Adam:
    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def step(self, params, grads) -> None:
        if len(params) != len(grads):
            raise ShapeMismatch("parameter and gradient counts differ")
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape or m.shape != p.shape:
                raise ShapeMismatch(f"gradient shape {g.shape} vs parameter {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(kind: str, lr: float):
    if kind == "adam":
        return Adam(lr)
    if kind == "sgd":
        return SGD(lr)
    raise InvalidConfig(f"unknown optimizer {kind!r}")


class Classifier:
    """A trained network plus everything needed to predict from raw features."""

    def __init__(self, hierarchy: Hierarchy, head: str, net: MLP, mean=None, scale=None):
        if head not in HEADS:
            raise InvalidConfig(f"head must be one of {HEADS}, got {head!r}")
        width = len(hierarchy) if head == "hierarchical" else len(hierarchy.labeled)
        if net.out_dim != width:
            raise ShapeMismatch(f"{head} head needs {width} outputs, network has {net.out_dim}")
        self.hierarchy = hierarchy
        self.head = head
        self.net = net
        self.mean = np.zeros(net.in_dim) if mean is None else np.asarray(mean, dtype=np.float64)
        self.scale = np.ones(net.in_dim) if scale is None else np.asarray(scale, dtype=np.float64)
        self.classes = np.asarray(hierarchy.labeled, dtype=np.int64)

    def outputs(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        return self.net.forward((x - self.mean) / self.scale)

    def predict_with_scores(self, features, mode="mlnp"):
        """Predicted node ids and scores. ``mode`` is ignored by the baseline
        head, which always picks among the labeled classes."""
        out = self.outputs(features)
        if self.head == "hierarchical":
            return inference.predict_with_scores(self.hierarchy, out, mode)
        # classes are ascending, so argmax ties resolve to the smallest node id
        best = np.argmax(np.atleast_2d(out), axis=1)
        value = np.atleast_2d(out)[np.arange(best.size), best]
        if out.ndim == 1:
            return int(self.classes[best[0]]), float(value[0])
        return self.classes[best], value

    def predict(self, features, mode="mlnp"):
        return self.predict_with_scores(features, mode)[0]

    def accuracy(self, ds: Dataset, mode="mlnp") -> float:
        if len(ds) == 0:
            raise EmptyDataset("cannot score an empty dataset")
        return float(np.mean(self.predict(ds.features, mode) == ds.labels))

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        payload = {
            "head": self.head,
            "architecture": {
                "in_dim": self.net.in_dim,
                "hidden": list(self.net.hidden),
                "out_dim": self.net.out_dim,
                "hidden_activation": "tanh",
                "output_activation": "sigmoid",
            },
            "hierarchy": format_hierarchy(self.hierarchy),
            "nodes": list(self.hierarchy.names),
            "weights": [w.tolist() for w in self.net.weights],
            "biases": [b.tolist() for b in self.net.biases],
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
        }
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "sha256": _checksum(payload),
            "payload": payload,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Classifier":
        if doc.get("format") != MODEL_FORMAT:
            raise ParseError(f"not a {MODEL_FORMAT} file")
        if doc.get("version") != MODEL_VERSION:
            raise ParseError(f"unsupported model version {doc.get('version')!r}")
        payload = doc["payload"]
        if _checksum(payload) != doc.get("sha256"):
            raise ParseError("model checksum mismatch")
        h = parse_hierarchy(payload["hierarchy"])
        net = MLP(
            [np.asarray(w, dtype=np.float64) for w in payload["weights"]],
            [np.asarray(b, dtype=np.float64) for b in payload["biases"]],
        )
        return cls(h, payload["head"], net, payload["mean"], payload["scale"])

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Classifier":
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid model file: {exc}", path=str(path)) from None
        return cls.from_dict(doc)


def _checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 2000
    batch_size: int = 64
    eval_interval: int = 100
    optimizer: str = "adam"
    lr: float = 0.001
    hidden: tuple[int, ...] = ()
    modes: tuple[str, ...] = ("mlnp",)

    def validate(self) -> None:
        if self.steps < 1 or self.batch_size < 1 or self.eval_interval < 1:
            raise InvalidConfig("steps, batch_size and eval_interval must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise InvalidConfig(f"unknown optimizer {self.optimizer!r}")
        if not self.lr > 0:
            raise InvalidConfig(f"lr must be positive, got {self.lr}")
        if any(w < 1 for w in self.hidden):
            raise InvalidConfig(f"hidden widths must be positive, got {self.hidden}")
        for m in self.modes:
            inference.PredictionMode(m)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        d["modes"] = list(self.modes)
        return d


def checkpoint_steps(steps: int, interval: int) -> list[int]:
    grid = list(range(interval, steps + 1, interval))
    if not grid or grid[-1] != steps:
        grid.append(steps)
    return grid


class _Objective:
    """Batch loss and output-gradient for one head."""

    def __init__(self, h: Hierarchy, head: str):
        self.head = head
        self.table = TargetTable.for_hierarchy(h)

    def __call__(self, out, labels):
        rows = self.table.rows(labels)
        if self.head == "hierarchical":
            return loss.hierarchical_loss_batch(self.table.encodings[rows], self.table.masks[rows], out)
        return loss.onehot_loss_batch(rows, out)


def train_epochs(
    config: TrainConfig,
    data: Dataset,
    h: Hierarchy,
    head: str = "hierarchical",
    seed: int = 0,
    val: Dataset | None = None,
) -> tuple[Classifier, list[RunMetrics]]:
    """Train one head from scratch with minibatches drawn from shuffled epochs.

    Features are standardized with the training set's statistics, which are
    stored on the returned classifier. Returns one :class:`RunMetrics` per
    prediction mode (a single ``flat`` run for the baseline head).
    Deterministic in ``seed``.
    """
    config.validate()
    if head not in HEADS:
        raise InvalidConfig(f"head must be one of {HEADS}, got {head!r}")
    if len(data) == 0:
        raise EmptyDataset("training set is empty")
    labeled = set(h.labeled)
    for ds in (data, val):
        if ds is not None:
            bad = [int(y) for y in np.unique(ds.labels) if int(y) not in labeled]
            if bad:
                raise LabelNotInHierarchy(f"labels {bad} are not labeled classes")
            if ds.dim != data.dim:
                raise ShapeMismatch(f"validation width {ds.dim} != training width {data.dim}")

    init_rng, batch_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    mean, scale = fit_standardization(data)
    train_std = apply_standardization(data, mean, scale)
    val_std = apply_standardization(val, mean, scale) if val is not None else None

    out_dim = len(h) if head == "hierarchical" else len(h.labeled)
    net = MLP.init(data.dim, config.hidden, out_dim, init_rng)
    model = Classifier(h, head, net, mean, scale)
    opt = make_optimizer(config.optimizer, config.lr)
    objective = _Objective(h, head)
    params = net.params()

    modes = config.modes if head == "hierarchical" else ("flat",)
    runs = [RunMetrics(head, m, seed) for m in modes]

    def evaluate(ds):
        out = net.forward(ds.features)
        value, _ = objective(out, ds.labels)
        if head == "hierarchical":
            accs = [float(np.mean(inference.predict(h, out, m) == ds.labels)) for m in modes]
        else:
            pred = model.classes[np.argmax(out, axis=1)]
            accs = [float(np.mean(pred == ds.labels))]
        return accs, value

    n = len(train_std)
    bs = min(config.batch_size, n)
    order = batch_rng.permutation(n)
    pos = 0
    grid = set(checkpoint_steps(config.steps, config.eval_interval))
    for step in range(1, config.steps + 1):
        if pos + bs > n:
            order = batch_rng.permutation(n)
            pos = 0
        idx = order[pos : pos + bs]
        pos += bs
        x = train_std.features[idx]
        out = net.forward(x)
        _, grad_out = objective(out, train_std.labels[idx])
        opt.step(params, net.backward(x, grad_out))

        if step in grid:
            tr_acc, tr_loss = evaluate(train_std)
            if val_std is not None and len(val_std):
                va_acc, va_loss = evaluate(val_std)
            else:
                va_acc, va_loss = [None] * len(modes), None
            for run, a, va in zip(runs, tr_acc, va_acc):
                run.checkpoints.append(Checkpoint(step, a, tr_loss, va, va_loss))
            log.debug("%s seed=%d step=%d train=%s val=%s", head, seed, step, tr_acc, va_acc)
    return model, runs
