"""Command-line entry point: ``relaxq <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import (
    RunConfig,
    format_report,
    format_sweep,
    gen_synthetic,
    parse_corpus_spec,
    rewrite_query,
    run_workload,
    sweep,
)
from .catalog import load_queries, parse_query, read_catalog
from .distance import read_distances
from .errors import RelaxqError
from .rewrite import FD_MODES, FD_OFF
from .stats import build_stats, dump_stats, read_stats, write_stats

ALGO_NAMES = {"greedy": "greedy", "dp": "dp", "removal": "attribute-removal", "attribute-removal": "attribute-removal"}


def _add_rewrite_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", choices=sorted(ALGO_NAMES), default="greedy")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--t", type=int, default=10, help="evaluation budget T")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--fd", choices=FD_MODES, default=FD_OFF)
    p.add_argument("--fd-threshold", type=float, default=0.9)


def _config(args) -> RunConfig:
    return RunConfig(ALGO_NAMES[args.algo], k=args.k, T=args.t, epsilon=args.epsilon,
                     fd=args.fd, fd_threshold=args.fd_threshold)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _load_workload(args):
    catalog = read_catalog(args.catalog)
    model = read_distances(args.distances, catalog.schema)
    snapshot = read_stats(args.stats) if args.stats else build_stats(catalog, model)
    with open(args.queries, encoding="utf-8") as fh:
        queries = load_queries(fh, catalog.schema)
    return catalog, model, snapshot, queries


def cmd_build_stats(args) -> int:
    catalog = read_catalog(args.catalog)
    model = read_distances(args.distances, catalog.schema)
    snapshot = build_stats(catalog, model)
    if args.out:
        write_stats(snapshot, args.out)
    else:
        sys.stdout.write(dump_stats(snapshot))
    return 0


def cmd_rewrite(args) -> int:
    snapshot = read_stats(args.stats)
    query = parse_query(args.query, snapshot.kinds)
    outcome = rewrite_query(query, snapshot, _config(args))
    print(f"relaxed: {outcome.relaxed}")
    print(f"estimate: {outcome.estimate:g}")
    print(f"tr: {round(outcome.total_relaxation, 10):g}")
    print(f"evaluations: {outcome.evaluations_used}")
    print(f"target_met: {str(outcome.target_met).lower()}")
    if outcome.dropped_attributes:
        print(f"dropped: {','.join(outcome.dropped_attributes)}")
    return 0


def cmd_evaluate(args) -> int:
    catalog, model, snapshot, queries = _load_workload(args)
    rows = run_workload(queries, catalog, snapshot, model, _config(args), workers=args.workers)
    _emit(format_report(rows), args.out)
    return 0


def cmd_sweep(args) -> int:
    catalog, model, snapshot, queries = _load_workload(args)
    cast = float if args.axis == "epsilon" else int
    values = [cast(v) for v in args.values.split(",") if v.strip()]
    points = sweep(queries, catalog, snapshot, model, _config(args), args.axis, values)
    _emit(format_sweep(points), args.out)
    return 0


def cmd_gen(args) -> int:
    corpus = gen_synthetic(args.seed, parse_corpus_spec(args.spec))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in corpus.files().items():
        (args.out_dir / name).write_text(text, encoding="utf-8")
    if args.stats:
        write_stats(build_stats(corpus.catalog, corpus.model), args.out_dir / "stats.csv")
    print(f"wrote {corpus.catalog.size} items and {len(corpus.queries)} queries to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaxq", description="Time-bounded query relaxation over catalog statistics")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-stats", help="precompute histograms and conditional probabilities")
    p.add_argument("--catalog", required=True)
    p.add_argument("--distances", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_stats)

    p = sub.add_parser("rewrite", help="rewrite one query using only a stats file")
    p.add_argument("--stats", required=True)
    p.add_argument("--query", required=True)
    _add_rewrite_args(p)
    p.set_defaults(func=cmd_rewrite)

    for name, func, help_text in (("evaluate", cmd_evaluate, "rewrite and execute a query file, one report row per query"),
                                  ("sweep", cmd_sweep, "aggregate a workload over an epsilon or T axis")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--catalog", required=True)
        p.add_argument("--distances", required=True)
        p.add_argument("--stats", help="stats file; built from the catalog when omitted")
        p.add_argument("--queries", required=True)
        p.add_argument("--out", type=Path)
        _add_rewrite_args(p)
        if name == "evaluate":
            p.add_argument("--workers", type=int, default=1)
        else:
            p.add_argument("--axis", choices=("epsilon", "steps"), required=True)
            p.add_argument("--values", required=True, help="comma-separated axis values")
        p.set_defaults(func=func)

    p = sub.add_parser("gen", help="write a synthetic corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--spec", default="", help="e.g. attributes=3,values=10,items=1000,correlation=0")
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--stats", action="store_true", help="also write stats.csv")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (RelaxqError, ValueError, OSError) as exc:
        print(f"relaxq: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
