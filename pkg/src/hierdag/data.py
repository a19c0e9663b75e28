"""Datasets: synthetic hierarchical Gaussian generation, CSV I/O and
per-feature standardization.

Dataset CSV has header ``f0,f1,...,f{d-1},label`` and one sample per row;
the label is a node name that must be a labeled class of the hierarchy.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from hierdag.errors import (
    DimensionMismatch,
    EmptyDataset,
    InvalidConfig,
    LabelNotInHierarchy,
    ParseError,
)
from hierdag.hierarchy import Hierarchy, build

# features whose spread is below this are centered but not rescaled
MIN_STD = 1e-12


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) node ids, all labeled classes
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise DimensionMismatch(
                f"features {self.features.shape} do not match labels {self.labels.shape}"
            )

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return replace(self, features=self.features[idx], labels=self.labels[idx])


@dataclass(frozen=True)
class SynthConfig:
    depth: int = 3
    branching: int = 3
    samples_per_leaf: int = 100
    dim: int = 32
    sigma0: float = 1.0
    level_decay: float = 0.5
    sigma_obs: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.depth < 1:
            raise InvalidConfig(f"depth must be >= 1, got {self.depth}")
        if self.branching < 2:
            raise InvalidConfig(f"branching must be >= 2, got {self.branching}")
        if self.dim < 1:
            raise InvalidConfig(f"dim must be >= 1, got {self.dim}")
        if self.samples_per_leaf < 1:
            raise InvalidConfig(f"samples_per_leaf must be >= 1, got {self.samples_per_leaf}")
        for name in ("sigma0", "level_decay", "sigma_obs"):
            if not getattr(self, name) > 0:
                raise InvalidConfig(f"{name} must be positive, got {getattr(self, name)}")


def complete_tree(depth: int, branching: int) -> Hierarchy:
    """Complete tree with one root named ``root``; the leaves are the labeled
    classes. Node names encode the path, e.g. ``n2.0.1``."""
    names = ["root"]
    edges = []
    level = ["root"]
    for _ in range(depth):
        nxt = []
        for parent in level:
            for b in range(branching):
                child = f"n{b}" if parent == "root" else f"{parent}.{b}"
                names.append(child)
                edges.append((child, parent))
                nxt.append(child)
        level = nxt
    return build(names, edges, level)


def class_means(h: Hierarchy, dim: int, sigma0: float, level_decay: float, rng) -> np.ndarray:
    """Hierarchically correlated means: roots sit at the origin and every
    other node is displaced from the average of its parents' means with
    scale ``sigma0 * level_decay**(depth - 1)``."""
    depths = h.depths()
    means = np.zeros((len(h), dim))
    for s in h.topo_order:
        ps = h.parent_list(s)
        if not ps:
            continue
        base = means[list(ps)].mean(axis=0)
        sigma = sigma0 * level_decay ** (depths[s] - 1)
        means[s] = base + sigma * rng.standard_normal(dim)
    return means


def sample_hierarchical(
    h: Hierarchy,
    samples_per_class: int,
    dim: int,
    *,
    sigma0: float = 1.0,
    level_decay: float = 0.5,
    sigma_obs: float = 1.0,
    rng=None,
) -> Dataset:
    """Gaussian samples around hierarchical means for each labeled class."""
    rng = np.random.default_rng(rng)
    if not h.labeled:
        raise InvalidConfig("hierarchy has no labeled classes")
    means = class_means(h, dim, sigma0, level_decay, rng)
    labels = np.repeat(np.asarray(h.labeled, dtype=np.int64), samples_per_class)
    features = means[labels] + sigma_obs * rng.standard_normal((labels.size, dim))
    return Dataset(features, labels)


def generate_synthetic(cfg: SynthConfig) -> tuple[Hierarchy, Dataset]:
    cfg.validate()
    h = complete_tree(cfg.depth, cfg.branching)
    ds = sample_hierarchical(
        h,
        cfg.samples_per_leaf,
        cfg.dim,
        sigma0=cfg.sigma0,
        level_decay=cfg.level_decay,
        sigma_obs=cfg.sigma_obs,
        rng=np.random.default_rng(cfg.seed),
    )
    return h, ds


def fit_standardization(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and population standard deviation (ddof=0)."""
    if len(ds) == 0:
        raise EmptyDataset("cannot standardize an empty dataset")
    mean = ds.features.mean(axis=0)
    std = ds.features.std(axis=0)
    scale = np.where(std < MIN_STD, 1.0, std)
    return mean, scale


def apply_standardization(ds: Dataset, mean, scale) -> Dataset:
    return replace(ds, features=(ds.features - mean) / scale, mean=np.asarray(mean), scale=np.asarray(scale))


def standardize(ds: Dataset) -> Dataset:
    """Zero mean, unit variance per feature, using this dataset's statistics.

    The statistics are kept on the result so held-out data can be mapped
    with :func:`apply_standardization`.
    """
    mean, scale = fit_standardization(ds)
    return apply_standardization(ds, mean, scale)


def stratified_split(ds: Dataset, val_fraction: float = 0.5, rng=None) -> tuple[Dataset, Dataset]:
    """Exact partition into (train, val), split separately within each class."""
    if not 0.0 <= val_fraction < 1.0:
        raise InvalidConfig(f"val_fraction must be in [0, 1), got {val_fraction}")
    rng = np.random.default_rng(rng)
    train_idx, val_idx = [], []
    for y in np.unique(ds.labels):
        idx = np.flatnonzero(ds.labels == y)
        idx = idx[rng.permutation(idx.size)]
        n_val = int(round(idx.size * val_fraction))
        val_idx.append(idx[:n_val])
        train_idx.append(idx[n_val:])
    tr = np.sort(np.concatenate(train_idx))
    va = np.sort(np.concatenate(val_idx))
    return ds.subset(tr), ds.subset(va)


def parse_dataset(text: str, h: Hierarchy, path=None) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header", 1, path) from None
    d = len(header) - 1
    if d < 1 or header[-1] != "label" or header[:-1] != [f"f{i}" for i in range(d)]:
        raise ParseError("header must be f0,...,f{d-1},label", 1, path)
    labeled = set(h.labeled)
    rows, labels = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != d + 1:
            raise DimensionMismatch(f"expected {d + 1} columns, got {len(row)}", lineno)
        try:
            rows.append([float(v) for v in row[:-1]])
        except ValueError as exc:
            raise ParseError(str(exc), lineno, path) from None
        name = row[-1]
        if name not in h or h.index(name) not in labeled:
            raise LabelNotInHierarchy(f"label {name!r} is not a labeled class", lineno)
        labels.append(h.index(name))
    features = np.asarray(rows, dtype=np.float64).reshape(len(rows), d)
    if not np.isfinite(features).all():
        raise ParseError("non-finite feature value", None, path)
    return Dataset(features, np.asarray(labels, dtype=np.int64))


def load_dataset(path, h: Hierarchy) -> Dataset:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_dataset(fh.read(), h, path=str(path))


def format_dataset(ds: Dataset, h: Hierarchy) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"f{i}" for i in range(ds.dim)] + ["label"])
    for x, y in zip(ds.features, ds.labels):
        w.writerow([repr(float(v)) for v in x] + [h.names[y]])
    return buf.getvalue()


def save_dataset(ds: Dataset, h: Hierarchy, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_dataset(ds, h))
