"""TOML experiment manifests for ``train`` and ``bench``.

Recognized tables and keys (all optional; defaults in brackets)::

    [data]   depth [3], branching [3], samples_per_leaf [100], dim [32],
             sigma0 [1.0], level_decay [0.5], sigma_obs [1.0],
             val_fraction [0.5]
    [train]  steps [1500], batch_size [64], eval_interval [50],
             optimizer ["adam"], lr [0.001], hidden [[]],
             modes [["mlnp", "anp"]]
    [bench]  seeds [[0, 1, 2]]

Unknown tables or keys are rejected.
"""

from __future__ import annotations

import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from hierdag.bench import BenchConfig
from hierdag.data import SynthConfig
from hierdag.errors import InvalidConfig
from hierdag.model import TrainConfig

DATA_KEYS = {"depth", "branching", "samples_per_leaf", "dim", "sigma0", "level_decay", "sigma_obs", "val_fraction"}
TRAIN_KEYS = {"steps", "batch_size", "eval_interval", "optimizer", "lr", "hidden", "modes"}
BENCH_KEYS = {"seeds"}

DEFAULT_TRAIN = TrainConfig(steps=1500, batch_size=64, eval_interval=50, modes=("mlnp", "anp"))


def _check(table: dict, allowed: set, name: str) -> dict:
    extra = set(table) - allowed
    if extra:
        raise InvalidConfig(f"unknown keys in [{name}]: {sorted(extra)}")
    return table


def parse_config(text: str) -> dict:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfig(f"invalid TOML: {exc}") from None
    _check(doc, {"data", "train", "bench"}, "top level")
    return {
        "data": _check(doc.get("data", {}), DATA_KEYS, "data"),
        "train": _check(doc.get("train", {}), TRAIN_KEYS, "train"),
        "bench": _check(doc.get("bench", {}), BENCH_KEYS, "bench"),
    }


def load_config(path) -> dict:
    if path is None:
        return {"data": {}, "train": {}, "bench": {}}
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def train_config(table: dict, **overrides) -> TrainConfig:
    values = {**DEFAULT_TRAIN.as_dict(), **table}
    values.update({k: v for k, v in overrides.items() if v is not None})
    values["hidden"] = tuple(int(w) for w in values["hidden"])
    values["modes"] = tuple(values["modes"])
    try:
        cfg = TrainConfig(**values)
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from None
    try:
        cfg.validate()
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from None
    return cfg


def synth_config(table: dict, **overrides) -> tuple[SynthConfig, float]:
    values = {k: v for k, v in table.items() if k != "val_fraction"}
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = SynthConfig(**values)
    cfg.validate()
    return cfg, float(table.get("val_fraction", 0.5))


def bench_config(doc: dict, seeds=None) -> BenchConfig:
    data, val_fraction = synth_config(doc["data"])
    train = train_config(doc["train"])
    if seeds is None:
        seeds = doc["bench"].get("seeds", [0, 1, 2])
    return BenchConfig(data=data, train=train, val_fraction=val_fraction, seeds=tuple(int(s) for s in seeds))
