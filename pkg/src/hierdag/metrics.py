"""Accuracy-over-steps records and their CSV form.

CSV columns are ``method,seed,step,split,accuracy,loss`` with one row per
(checkpoint, split). Floats are written with ``repr`` so a write/read cycle
is lossless.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

COLUMNS = ["method", "seed", "step", "split", "accuracy", "loss"]


@dataclass(frozen=True)
class Checkpoint:
    step: int
    train_accuracy: float
    train_loss: float
    val_accuracy: float | None = None
    val_loss: float | None = None


@dataclass
class RunMetrics:
    """One training run evaluated on a fixed checkpoint grid.

    ``method`` is ``baseline`` or ``hierarchical``; ``mode`` is the
    prediction mode used for accuracy (``flat`` for the baseline head).
    """

    method: str
    mode: str
    seed: int
    checkpoints: list[Checkpoint] = field(default_factory=list)

    @property
    def tag(self) -> str:
        return self.method if self.method == "baseline" else f"{self.method}-{self.mode}"

    @property
    def steps(self) -> list[int]:
        return [c.step for c in self.checkpoints]

    def accuracy(self, split: str = "val") -> list[float]:
        attr = "val_accuracy" if split == "val" else "train_accuracy"
        values = [getattr(c, attr) for c in self.checkpoints]
        if any(v is None for v in values):
            raise ValueError(f"run {self.tag} has no {split} accuracy")
        return values

    def validate(self) -> None:
        steps = self.steps
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("checkpoint steps must be strictly increasing")
        for c in self.checkpoints:
            for acc in (c.train_accuracy, c.val_accuracy):
                if acc is not None and not 0.0 <= acc <= 1.0:
                    raise ValueError(f"accuracy {acc} outside [0, 1]")


def _split_tag(tag: str) -> tuple[str, str]:
    if tag == "baseline":
        return "baseline", "flat"
    method, _, mode = tag.partition("-")
    return method, mode


def write_metrics(runs, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    for run in runs:
        for c in run.checkpoints:
            w.writerow([run.tag, run.seed, c.step, "train", repr(c.train_accuracy), repr(c.train_loss)])
            if c.val_accuracy is not None:
                w.writerow([run.tag, run.seed, c.step, "val", repr(c.val_accuracy), repr(c.val_loss)])


def metrics_to_csv(runs) -> str:
    buf = io.StringIO()
    write_metrics(runs, buf)
    return buf.getvalue()


def read_metrics(fh) -> list[RunMetrics]:
    rows = list(csv.DictReader(fh))
    runs: dict[tuple[str, int], dict[int, dict]] = {}
    for row in rows:
        key = (row["method"], int(row["seed"]))
        per_step = runs.setdefault(key, {}).setdefault(int(row["step"]), {})
        per_step[row["split"]] = (float(row["accuracy"]), float(row["loss"]))
    out = []
    for (tag, seed), steps in runs.items():
        method, mode = _split_tag(tag)
        run = RunMetrics(method, mode, seed)
        for step in sorted(steps):
            tr = steps[step]["train"]
            va = steps[step].get("val")
            run.checkpoints.append(
                Checkpoint(step, tr[0], tr[1], va[0] if va else None, va[1] if va else None)
            )
        out.append(run)
    return out


def mean_run(runs, seed: int = -1) -> RunMetrics:
    """Pointwise mean of runs sharing one checkpoint grid."""
    runs = list(runs)
    if not runs:
        raise ValueError("no runs to average")
    grid = runs[0].steps
    if any(r.steps != grid for r in runs):
        raise ValueError("runs do not share a checkpoint grid")
    n = len(runs)

    def avg(values):
        if any(v is None for v in values):
            return None
        return sum(values) / n

    out = RunMetrics(runs[0].method, runs[0].mode, seed)
    for i, step in enumerate(grid):
        cs = [r.checkpoints[i] for r in runs]
        out.checkpoints.append(
            Checkpoint(
                step,
                avg([c.train_accuracy for c in cs]),
                avg([c.train_loss for c in cs]),
                avg([c.val_accuracy for c in cs]),
                avg([c.val_loss for c in cs]),
            )
        )
    return out
