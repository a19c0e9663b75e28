"""Command-line entry point: ``hierdag <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
Diagnostics go to stderr; data goes to stdout or the named output files.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from hierdag import bench, config
from hierdag.data import generate_synthetic, load_dataset, save_dataset, stratified_split
from hierdag.encoding import encode_label, loss_mask
from hierdag.errors import HierdagError
from hierdag.hierarchy import load_hierarchy, save_hierarchy
from hierdag.metrics import write_metrics
from hierdag.model import Classifier, train_epochs

log = logging.getLogger("hierdag")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def cmd_validate(args) -> int:
    h = load_hierarchy(args.hierarchy)
    print(f"nodes\t{len(h)}")
    print(f"edges\t{h.num_edges}")
    print(f"labeled\t{len(h.labeled)}")
    print(f"roots\t{len(h.roots)}")
    print(f"leaves\t{len(h.leaves)}")
    return 0


def cmd_closure(args) -> int:
    h = load_hierarchy(args.hierarchy)
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["descendant", "ancestor"])
        for d, a in sorted(h.closure):
            w.writerow([h.names[d], h.names[a]])
    finally:
        if close:
            fh.close()
    return 0


def _dump_vector(h, values) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["name", "value"])
    for name, v in zip(h.names, values):
        w.writerow([name, int(v)])


def cmd_encode(args) -> int:
    h = load_hierarchy(args.hierarchy)
    _dump_vector(h, encode_label(h, h.index(args.label)))
    return 0


def cmd_mask(args) -> int:
    h = load_hierarchy(args.hierarchy)
    _dump_vector(h, loss_mask(h, h.index(args.label)))
    return 0


def cmd_gen(args) -> int:
    doc = config.load_config(args.config)
    cfg, val_fraction = config.synth_config(
        doc["data"],
        depth=args.depth,
        branching=args.branching,
        samples_per_leaf=args.samples_per_leaf,
        dim=args.dim,
        sigma0=args.sigma0,
        level_decay=args.level_decay,
        sigma_obs=args.sigma_obs,
        seed=args.seed,
    )
    if args.val_fraction is not None:
        val_fraction = args.val_fraction
    h, ds = generate_synthetic(cfg)
    train, val = stratified_split(ds, val_fraction, rng=cfg.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_hierarchy(h, out / "hierarchy.tsv")
    save_dataset(train, h, out / "train.csv")
    save_dataset(val, h, out / "val.csv")
    log.info("wrote %d nodes, %d train and %d val samples to %s", len(h), len(train), len(val), out)
    return 0


def cmd_train(args) -> int:
    doc = config.load_config(args.config)
    cfg = config.train_config(
        doc["train"],
        steps=args.steps,
        batch_size=args.batch_size,
        eval_interval=args.eval_interval,
        optimizer=args.optimizer,
        lr=args.lr,
        hidden=args.hidden,
        modes=args.modes,
    )
    h = load_hierarchy(args.hierarchy)
    train = load_dataset(args.train, h)
    val = load_dataset(args.val, h) if args.val else None
    model, runs = train_epochs(cfg, train, h, args.head, args.seed, val)
    model.save(args.model)
    if args.metrics:
        with open(args.metrics, "w", encoding="utf-8", newline="") as fh:
            write_metrics(runs, fh)
    last = runs[0].checkpoints[-1]
    log.info("%s head: final train accuracy %.4f", args.head, last.train_accuracy)
    return 0


def cmd_predict(args) -> int:
    model = Classifier.load(args.model)
    ds = load_dataset(args.data, model.hierarchy)
    pred, score = model.predict_with_scores(ds.features, args.mode) if len(ds) else ([], [])
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "predicted_name", "score"])
        for i, (p, s) in enumerate(zip(pred, score)):
            w.writerow([i, model.hierarchy.names[int(p)], repr(float(s))])
    finally:
        if close:
            fh.close()
    return 0


def cmd_eval(args) -> int:
    model = Classifier.load(args.model)
    ds = load_dataset(args.data, model.hierarchy)
    acc = model.accuracy(ds, args.mode)
    mode = args.mode if model.head == "hierarchical" else "flat"
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["head", "mode", "samples", "accuracy"])
    w.writerow([model.head, mode, len(ds), repr(acc)])
    return 0


def _parse_seeds(text: str) -> list[int]:
    if "," in text:
        return [int(s) for s in text.split(",") if s.strip()]
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("need at least one seed")
    return list(range(n))


def cmd_bench(args) -> int:
    doc = config.load_config(args.config)
    cfg = config.bench_config(doc, seeds=args.seeds)
    result = bench.run_comparison(cfg)
    paths = bench.write_outputs(result, cfg, args.out)
    sys.stdout.write(bench.render_report(result, cfg))
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return 0


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hierdag", description="Hierarchical classification over class DAGs.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check a hierarchy file and print counts")
    s.add_argument("--hierarchy", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("closure", help="list (descendant, ancestor) pairs as CSV")
    s.add_argument("--hierarchy", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_closure)

    for name, func, what in (("encode", cmd_encode, "label encoding"), ("mask", cmd_mask, "loss mask")):
        s = sub.add_parser(name, help=f"print the {what} of a label as CSV")
        s.add_argument("--hierarchy", required=True)
        s.add_argument("--label", required=True)
        s.set_defaults(func=func)

    s = sub.add_parser("gen", help="generate a synthetic hierarchy and train/val split")
    s.add_argument("--config")
    s.add_argument("--depth", type=int)
    s.add_argument("--branching", type=int)
    s.add_argument("--samples-per-leaf", type=int)
    s.add_argument("--dim", type=int)
    s.add_argument("--sigma0", type=float)
    s.add_argument("--level-decay", type=float)
    s.add_argument("--sigma-obs", type=float)
    s.add_argument("--val-fraction", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("train", help="train one head and save the model")
    s.add_argument("--hierarchy", required=True)
    s.add_argument("--train", required=True)
    s.add_argument("--val")
    s.add_argument("--head", choices=["hierarchical", "baseline"], default="hierarchical")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--steps", type=int)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--eval-interval", type=int)
    s.add_argument("--optimizer", choices=["adam", "sgd"])
    s.add_argument("--lr", type=float)
    s.add_argument("--hidden", type=_int_list, help="comma-separated hidden widths")
    s.add_argument("--modes", type=lambda t: tuple(t.split(",")), help="e.g. mlnp,anp")
    s.add_argument("--model", required=True, help="output model file")
    s.add_argument("--metrics", help="output metrics CSV")
    s.set_defaults(func=cmd_train)

    for name, func in (("predict", cmd_predict), ("eval", cmd_eval)):
        s = sub.add_parser(name, help=f"{name} with a saved model")
        s.add_argument("--model", required=True)
        s.add_argument("--data", required=True)
        s.add_argument("--mode", choices=["mlnp", "anp"], default="mlnp")
        if name == "predict":
            s.add_argument("--out")
        s.set_defaults(func=func)

    s = sub.add_parser("bench", help="compare baseline and hierarchical heads")
    s.add_argument("--config")
    s.add_argument("--seeds", type=_parse_seeds, help="a count N (seeds 0..N-1) or a comma list")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (HierdagError, OSError, ValueError) as exc:
        print(f"hierdag {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
