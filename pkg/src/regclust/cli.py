"""Command-line entry point: ``regclust <verb> [options]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import GridSearchSpec, grid_search, rows_to_csv, rows_to_json, run_benchmark
from .clustering import regularity_cluster
from .evaluation import accuracy
from .graph_core import AffinityGraph, PreconditionError, gen_planted_partition
from .ingest import MEDIAN, DataError, Dataset, binarize, build_affinity, load_csv
from .partition import RegularityConfig, partition_to_dict, run_ppr
from .reduced_graph import build_reduced
from .regularity_check import CHECKERS

THREADS_ENV = "REGCLUST_THREADS"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _unit_open(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return v


def _unit_closed(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return v


def _sigma(text):
    if text == MEDIAN:
        return MEDIAN
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("sigma must be 'median' or a positive number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("sigma must be positive")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return v


def _int_list(text):
    try:
        vals = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None
    if any(v < 2 for v in vals):
        raise argparse.ArgumentTypeError("l values must be at least 2")
    return vals


def _sizes(text):
    try:
        vals = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("block sizes must be positive")
    return vals


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def _load_input(args):
    """A graph plus optional labels, from a CSV table, a ``.npy`` matrix or a graph JSON."""
    path = Path(args.input)
    if not path.exists():
        raise DataError(f"{path} does not exist")
    labels, ds = None, None
    try:
        if path.suffix == ".npy":
            g = AffinityGraph(np.load(path))
        elif path.suffix == ".json":
            doc = json.loads(path.read_text())
            g = AffinityGraph(np.asarray(doc["weights"], dtype=np.float64))
            if doc.get("labels") is not None:
                labels = np.asarray(doc["labels"], dtype=np.int64)
        else:
            ds = load_csv(path, args.label_col, standardize=args.standardize)
            g = build_affinity(ds, args.sigma)
            labels = ds.labels
    except PreconditionError as exc:
        raise DataError(str(exc)) from exc
    except (KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed graph file ({exc})") from exc
    if args.binarize is not None:
        g = binarize(g, args.binarize)
    return g, labels, ds


def _config(args) -> RegularityConfig:
    return RegularityConfig(epsilon=args.epsilon, l=args.l, h=args.h, checker=args.checker,
                            seed=args.seed, n_jobs=_threads(args))


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_partition(args):
    g, _, _ = _load_input(args)
    cfg = _config(args)
    part, trace = run_ppr(g, cfg)
    _emit(args, _dump(partition_to_dict(part, trace, cfg)))


def cmd_reduce(args):
    g, _, _ = _load_input(args)
    cfg = _config(args)
    part, trace = run_ppr(g, cfg)
    red = build_reduced(g, part)
    doc = {"reduced_graph": red.to_dict(), "compression": f"{g.n}-{red.k}",
           "halt_reason": trace.halt_reason, "config": cfg.to_dict()}
    _emit(args, _dump(doc))


def cmd_cluster(args):
    g, labels, _ = _load_input(args)
    k = args.k or (int(np.unique(labels).size) if labels is not None else None)
    if k is None:
        raise UsageError("--k is required when the input has no labels")
    cfg = _config(args)
    res = regularity_cluster(g, k, cfg, kappa=args.kappa)
    if args.format == "csv":
        _emit(args, "vertex,label\n" + "".join(f"{i},{v}\n" for i, v in enumerate(res.assignment.labels)))
        return
    doc = {"assignment": res.assignment.to_dict(), "trace": res.trace.to_list(),
           "halt_reason": res.trace.halt_reason, "compression": f"{g.n}-{res.reduced.k}",
           "config": cfg.to_dict(), "kappa": args.kappa}
    if labels is not None:
        doc["accuracy"] = accuracy(labels, res.assignment.labels).accuracy
    _emit(args, _dump(doc))


def _read_labels(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path} does not exist")
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        if "assignment" in doc:
            doc = doc["assignment"]
        return np.asarray(doc["labels"])
    rows = [ln.split(",") for ln in path.read_text().splitlines() if ln.strip()]
    if rows and not rows[0][-1].strip().lstrip("-").isdigit():
        rows = rows[1:]
    return np.asarray([r[-1].strip() for r in rows])


def cmd_evaluate(args):
    if args.pred is None:
        raise UsageError("evaluate needs --pred")
    if args.input.endswith(".csv") or args.label_col is not None:
        truth = load_csv(args.input, args.label_col if args.label_col is not None else -1).labels
    else:
        truth = _read_labels(args.input)
    pred = _read_labels(args.pred)
    if truth.size != pred.size:
        raise DataError(f"{truth.size} true labels but {pred.size} predictions")
    rep = accuracy(truth, pred)
    if args.format == "csv":
        _emit(args, f"accuracy\n{rep.accuracy:.6f}\n")
    else:
        _emit(args, _dump(rep.to_dict()))


def _spec(args) -> GridSearchSpec:
    return GridSearchSpec.sized(args.grid_eps, args.grid_l, args.folds)


def _dataset(args) -> Dataset:
    if args.label_col is None:
        raise UsageError("--label-col is required")
    return load_csv(args.input, args.label_col, standardize=args.standardize)


def cmd_grid_search(args):
    ds = _dataset(args)
    g = build_affinity(ds, args.sigma)
    if args.binarize is not None:
        g = binarize(g, args.binarize)
    res = grid_search(ds, args.k or ds.n_classes, _spec(args), checker=args.checker, seed=args.seed,
                      graph=g, kappa=args.kappa, n_jobs=_threads(args))
    _emit(args, _dump(res.to_dict()))


def cmd_benchmark(args):
    paths = args.inputs or ([args.input] if args.input else [])
    if not paths:
        raise UsageError("benchmark needs --input")
    if args.label_col is None:
        raise UsageError("--label-col is required")
    datasets = [load_csv(p, args.label_col, standardize=args.standardize) for p in paths]
    rows = run_benchmark(datasets, args.k, seed=args.seed, spec=_spec(args), sigma=args.sigma,
                         binarize_threshold=args.binarize, kappa=args.kappa, n_jobs=_threads(args))
    _emit(args, rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows))
    if args.format == "csv" and args.out:
        Path(args.out).with_suffix(".json").write_text(rows_to_json(rows))


def cmd_gen(args):
    sizes = args.sizes
    if args.kind == "planted":
        g, labels = gen_planted_partition(sizes, args.p_in, args.p_out, args.seed)
        _emit(args, _dump({"weights": g.weights.tolist(), "labels": labels.tolist()}))
        return
    rng = np.random.default_rng(args.seed)
    centers = rng.normal(scale=args.separation, size=(len(sizes), args.dim))
    lines = [",".join([f"x{j}" for j in range(args.dim)] + ["label"])]
    for c, size in enumerate(sizes):
        pts = centers[c] + rng.normal(size=(size, args.dim))
        lines += [",".join([f"{v:.6f}" for v in p] + [f"c{c}"]) for p in pts]
    _emit(args, "\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", help="CSV table, .npy weight matrix or graph JSON")
    common.add_argument("--label-col", help="label column index or header name")
    common.add_argument("--standardize", action="store_true", help="z-score feature columns")
    common.add_argument("--epsilon", type=_unit_open, default=0.25)
    common.add_argument("--l", type=int, default=2, choices=range(2, 65), metavar="L")
    common.add_argument("--h", type=int, default=None)
    common.add_argument("--checker", choices=CHECKERS, default="alon")
    common.add_argument("--k", type=_positive, default=None, help="number of clusters")
    common.add_argument("--kappa", type=_positive, default=5)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--sigma", type=_sigma, default=MEDIAN, help="'median' or a fixed kernel width")
    common.add_argument("--binarize", type=_unit_closed, default=None, metavar="T")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=_positive, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or 1)")

    grid = _Parser(add_help=False)
    grid.add_argument("--grid-eps", type=_positive, default=25, help="number of epsilon values")
    grid.add_argument("--grid-l", type=_int_list, default=(2, 3, 4, 5, 6, 7), help="e.g. 2,3,4")
    grid.add_argument("--folds", type=int, default=5)

    p = _Parser(prog="regclust", description="Regularity partitions, reduced graphs and clustering.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    sub.add_parser("partition", parents=[common], help="equitable regularity partition").set_defaults(fn=cmd_partition)
    sub.add_parser("reduce", parents=[common], help="reduced graph of the partition").set_defaults(fn=cmd_reduce)
    sub.add_parser("cluster", parents=[common], help="two-phase regularity clustering").set_defaults(fn=cmd_cluster)
    ev = sub.add_parser("evaluate", parents=[common], help="accuracy of predicted labels")
    ev.add_argument("--pred", help="predicted labels (cluster JSON or CSV)")
    ev.set_defaults(fn=cmd_evaluate)
    sub.add_parser("grid-search", parents=[common, grid], help="cross-validated epsilon and l").set_defaults(
        fn=cmd_grid_search)
    bm = sub.add_parser("benchmark", parents=[common, grid], help="all methods on one or more datasets")
    bm.add_argument("inputs", nargs="*", help="further dataset files")
    bm.set_defaults(fn=cmd_benchmark)
    gen = sub.add_parser("gen", parents=[common], help="synthetic data")
    gen.add_argument("--kind", choices=("blobs", "planted"), default="blobs")
    gen.add_argument("--sizes", type=_sizes, default=(50, 50, 50), help="block sizes, e.g. 400,400,400")
    gen.add_argument("--dim", type=_positive, default=2)
    gen.add_argument("--separation", type=float, default=6.0)
    gen.add_argument("--p-in", type=_unit_closed, default=0.7)
    gen.add_argument("--p-out", type=_unit_closed, default=0.05)
    gen.set_defaults(fn=cmd_gen)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.verb == "benchmark" and args.input:
        args.inputs = [args.input] + list(args.inputs)
    try:
        args.fn(args)
    except UsageError as exc:
        print(f"regclust: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"regclust: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (PreconditionError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"regclust: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
