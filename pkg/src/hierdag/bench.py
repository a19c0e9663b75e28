"""Baseline-vs-hierarchical comparison runs and training speedup.

Speedup matches accuracies on the shared checkpoint grid, without
interpolation. For each hierarchical checkpoint ``(t, a)`` the matching
baseline step is the first step whose accuracy is at least ``a``; the ratio
is that step divided by ``t``. Initial speedup is the ratio at the first
checkpoint. Overall speedup is the baseline's total steps divided by the
first hierarchical step that reaches the baseline's final accuracy.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hierdag.data import SynthConfig, generate_synthetic, stratified_split
from hierdag.errors import GridMismatch, InvalidConfig
from hierdag.metrics import RunMetrics, mean_run, write_metrics
from hierdag.model import TrainConfig, train_epochs

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckpointMatch:
    step: int
    accuracy: float
    baseline_step: int | None
    ratio: float | None


@dataclass
class SpeedupReport:
    overall_speedup: float | None
    initial_speedup: float | None
    table: list[CheckpointMatch] = field(default_factory=list)
    baseline_final: float | None = None
    hierarchical_final: float | None = None
    overall_step: int | None = None


def _first_reaching(steps, accs, target) -> int | None:
    for s, a in zip(steps, accs):
        if a >= target:
            return s
    return None


def compute_speedup(hier: RunMetrics, base: RunMetrics, split: str = "val") -> SpeedupReport:
    if hier.steps != base.steps:
        raise GridMismatch(f"checkpoint grids differ: {hier.steps[:5]}... vs {base.steps[:5]}...")
    steps = hier.steps
    if not steps:
        raise GridMismatch("empty checkpoint grid")
    h_acc = hier.accuracy(split)
    b_acc = base.accuracy(split)

    table = []
    for t, a in zip(steps, h_acc):
        match = _first_reaching(steps, b_acc, a)
        table.append(CheckpointMatch(t, a, match, None if match is None else match / t))

    overall_step = _first_reaching(steps, h_acc, b_acc[-1])
    overall = None if overall_step is None else steps[-1] / overall_step
    return SpeedupReport(
        overall_speedup=overall,
        initial_speedup=table[0].ratio,
        table=table,
        baseline_final=b_acc[-1],
        hierarchical_final=h_acc[-1],
        overall_step=overall_step,
    )


@dataclass(frozen=True)
class BenchConfig:
    data: SynthConfig = SynthConfig()
    train: TrainConfig = TrainConfig(steps=1500, eval_interval=50, modes=("mlnp", "anp"))
    val_fraction: float = 0.5
    seeds: tuple[int, ...] = (0, 1, 2)


@dataclass
class ComparisonResult:
    runs: list[RunMetrics]
    per_seed: dict[int, SpeedupReport]
    report: SpeedupReport  # on seed-averaged curves
    seeds: tuple[int, ...]
    wall_time: dict[str, float] = field(default_factory=dict)

    def series(self, tag: str) -> list[RunMetrics]:
        return [r for r in self.runs if r.tag == tag]

    @property
    def mean_initial_speedup(self) -> float | None:
        vals = [r.initial_speedup for r in self.per_seed.values()]
        if any(v is None for v in vals):
            return None
        return float(np.mean(vals))


def run_comparison(cfg: BenchConfig, seeds=None) -> ComparisonResult:
    """Train both heads on identical data for each seed and compare.

    Each seed fixes the synthetic data, the split, and the weight
    initialization shared by both heads.
    """
    seeds = tuple(cfg.seeds if seeds is None else seeds)
    if not seeds:
        raise InvalidConfig("need at least one seed")
    train_cfg = cfg.train
    if "mlnp" not in train_cfg.modes:
        raise InvalidConfig("bench needs the mlnp mode for speedup")

    runs: list[RunMetrics] = []
    per_seed: dict[int, SpeedupReport] = {}
    wall = {"baseline": 0.0, "hierarchical": 0.0}
    for seed in seeds:
        data_cfg = SynthConfig(**{**cfg.data.__dict__, "seed": seed})
        h, ds = generate_synthetic(data_cfg)
        train, val = stratified_split(ds, cfg.val_fraction, rng=seed)
        by_tag = {}
        for head in ("baseline", "hierarchical"):
            t0 = time.perf_counter()
            _, head_runs = train_epochs(train_cfg, train, h, head, seed, val)
            wall[head] += time.perf_counter() - t0
            for r in head_runs:
                by_tag[r.tag] = r
                runs.append(r)
        per_seed[seed] = compute_speedup(by_tag["hierarchical-mlnp"], by_tag["baseline"])
        log.info(
            "seed %d: baseline %.4f, hierarchical %.4f, initial speedup %s",
            seed,
            per_seed[seed].baseline_final,
            per_seed[seed].hierarchical_final,
            per_seed[seed].initial_speedup,
        )

    base_mean = mean_run([r for r in runs if r.tag == "baseline"])
    hier_mean = mean_run([r for r in runs if r.tag == "hierarchical-mlnp"])
    report = compute_speedup(hier_mean, base_mean)
    log.info("wall time (informational): %s", {k: round(v, 3) for k, v in wall.items()})
    return ComparisonResult(runs, per_seed, report, seeds, wall)


def _fmt(v, spec=".4f") -> str:
    return "---" if v is None else format(v, spec)


def summary_rows(result: ComparisonResult) -> list[dict]:
    """Rows mirroring a results-overview table: final accuracies and both
    speedups, per seed and for the seed-averaged curves."""
    rows = []
    anp = {r.seed: r for r in result.series("hierarchical-anp")}
    for seed, rep in result.per_seed.items():
        rows.append(_summary_row(str(seed), rep, anp[seed].accuracy()[-1] if seed in anp else None))
    anp_mean = None
    if anp:
        anp_mean = float(np.mean([r.accuracy()[-1] for r in anp.values()]))
    rows.append(_summary_row("mean", result.report, anp_mean))
    return rows


def _summary_row(seed, rep: SpeedupReport, anp_final) -> dict:
    return {
        "seed": seed,
        "accuracy_baseline": rep.baseline_final,
        "accuracy_hierarchy": rep.hierarchical_final,
        "accuracy_hierarchy_anp": anp_final,
        "overall_speedup": rep.overall_speedup,
        "initial_speedup": rep.initial_speedup,
    }


def speedup_csv(result: ComparisonResult) -> str:
    buf = io.StringIO()
    rows = summary_rows(result)
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in row.items()})
    return buf.getvalue()


def checkpoint_csv(report: SpeedupReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "accuracy_hierarchy", "baseline_step", "speedup"])
    for m in report.table:
        w.writerow([m.step, repr(m.accuracy), "" if m.baseline_step is None else m.baseline_step, "" if m.ratio is None else repr(m.ratio)])
    return buf.getvalue()


def render_report(result: ComparisonResult, cfg: BenchConfig) -> str:
    lines = [
        "Hierarchical vs one-hot baseline (validation accuracy)",
        f"data: depth={cfg.data.depth} branching={cfg.data.branching} dim={cfg.data.dim} "
        f"samples_per_leaf={cfg.data.samples_per_leaf} sigma0={cfg.data.sigma0} "
        f"level_decay={cfg.data.level_decay} sigma_obs={cfg.data.sigma_obs}",
        f"train: steps={cfg.train.steps} batch_size={cfg.train.batch_size} "
        f"eval_interval={cfg.train.eval_interval} optimizer={cfg.train.optimizer} "
        f"lr={cfg.train.lr} hidden={list(cfg.train.hidden)}",
        f"seeds: {list(result.seeds)}",
        "",
        f"{'seed':>6}  {'baseline':>9}  {'w/hier':>9}  {'w/hier ANP':>10}  {'overall':>8}  {'initial':>8}",
    ]
    for row in summary_rows(result):
        lines.append(
            f"{row['seed']:>6}  {_fmt(row['accuracy_baseline']):>9}  {_fmt(row['accuracy_hierarchy']):>9}  "
            f"{_fmt(row['accuracy_hierarchy_anp']):>10}  {_fmt(row['overall_speedup'], '.2f'):>8}  "
            f"{_fmt(row['initial_speedup'], '.2f'):>8}"
        )
    lines += ["", "Seed-averaged curves, per checkpoint:", f"{'step':>8}  {'w/hier':>8}  {'baseline step':>13}  {'speedup':>7}"]
    for m in result.report.table:
        lines.append(
            f"{m.step:>8}  {m.accuracy:>8.4f}  {_fmt(m.baseline_step, 'd'):>13}  {_fmt(m.ratio, '.2f'):>7}"
        )
    return "\n".join(lines) + "\n"


def write_outputs(result: ComparisonResult, cfg: BenchConfig, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics": out / "metrics.csv",
        "speedup": out / "speedup.csv",
        "checkpoints": out / "checkpoints.csv",
        "report": out / "report.txt",
    }
    with open(paths["metrics"], "w", encoding="utf-8", newline="") as fh:
        write_metrics(result.runs, fh)
    paths["speedup"].write_text(speedup_csv(result), encoding="utf-8")
    paths["checkpoints"].write_text(checkpoint_csv(result.report), encoding="utf-8")
    paths["report"].write_text(render_report(result, cfg), encoding="utf-8")
    return paths
