"""Command-line pipelines: simulate -> cache -> sample -> query / exact.

Every command is a pure function of its inputs, flags, and seed, so
re-execution reproduces output artifacts byte for byte. Each output is
written atomically (temp file + rename) and accompanied by a
``<out>.manifest.json`` recording the command, the full flag set, seeds,
input/output digests, tool version, and a timestamp.

Exit codes: 0 success, 1 usage error, 2 data/input error, 3 internal.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from datetime import datetime, timezone

from . import __version__
from .data import DataError, Dataset, load_csv
from .graph import Dag, GraphError, load_dag_json, read_edge_mask_csv
from .moves import MoveWeights, parse_weights
from .oracle import MAX_EXACT_NODES, OracleError, exact_posterior
from .priors import PriorError, StructPrior
from .queries import (
    QueryError,
    QueryReport,
    dag_frequency,
    estimate,
    normalized_score_trace,
    parse_feature,
)
from .sampler import (
    ChainConfig,
    SamplerError,
    TraceError,
    read_trace_csv,
    run_chain,
    trace_csv_text,
)
from .scoring import (
    CacheBudgetError,
    ScoringError,
    build_cache,
    cache_to_json,
    load_cache,
)
from .simulate import (
    SIMULATOR_GENERATOR,
    SimulateError,
    benchmark_spec,
    forward_sample,
    load_cpts_json,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

DATA_ERRORS = (
    DataError,
    GraphError,
    PriorError,
    ScoringError,
    CacheBudgetError,
    SamplerError,
    TraceError,
    QueryError,
    OracleError,
    SimulateError,
    OSError,
    json.JSONDecodeError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; we map usage errors to 1."""

    def error(self, message):
        raise UsageError(message)


# --- atomic output + manifests ----------------------------------------------------

def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mcdag-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_path: str,
    command: str,
    flags: dict,
    inputs: dict[str, str],
    seeds: dict[str, int] | None = None,
    extra: dict | None = None,
) -> None:
    manifest = {
        "command": command,
        "flags": flags,
        "seeds": seeds or {},
        "inputs": {
            name: {"path": path, "sha256": sha256_file(path)}
            for name, path in inputs.items()
        },
        "outputs": {
            "out": {"path": out_path, "sha256": sha256_file(out_path)}
        },
        "tool": {"name": "mcdag", "version": __version__},
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    atomic_write_text(
        out_path + ".manifest.json", json.dumps(manifest, indent=1) + "\n"
    )


def _flags_dict(args: argparse.Namespace) -> dict:
    return {
        k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None
    }


# --- subcommands -------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be a positive row count")
    if (args.dag is None) != (args.cpt is None):
        raise UsageError("--dag and --cpt must be given together")
    inputs: dict[str, str] = {}
    if args.dag is None:
        bench = benchmark_spec()
        dag, names, cpts = bench.dag, bench.names, bench.cpts
    else:
        dag, names = load_dag_json(args.dag)
        cpts = load_cpts_json(args.cpt, names)
        inputs = {"dag": args.dag, "cpt": args.cpt}
    dataset = forward_sample(dag, cpts, args.n, args.seed, names=names)
    lines = [",".join(dataset.names)]
    for row in dataset.rows:
        lines.append(",".join(str(int(x)) for x in row))
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    write_manifest(
        args.out,
        "simulate",
        _flags_dict(args),
        inputs,
        seeds={"seed": args.seed},
        extra={"generator": SIMULATOR_GENERATOR},
    )
    return EXIT_OK


def _dataset_for_cache(args) -> Dataset:
    return load_csv(args.data, header=not args.no_header, schema=args.schema)


def cmd_cache(args) -> int:
    dataset = _dataset_for_cache(args)
    n = dataset.n_vars
    if args.max_parents is None:
        if n > 8:
            raise UsageError(
                f"--max-parents is required for {n} variables (cache size grows "
                "exponentially; the default max_parents = n-1 applies only to n <= 8)"
            )
        max_parents = n - 1
    else:
        if not 0 <= args.max_parents <= n - 1:
            raise UsageError(
                f"--max-parents {args.max_parents} outside [0, {n - 1}] "
                f"for {n} variables"
            )
        max_parents = args.max_parents
    if args.ess <= 0:
        raise UsageError(f"--ess must be positive, got {args.ess}")

    ban = read_edge_mask_csv(args.ban) if args.ban else frozenset()
    retain = read_edge_mask_csv(args.retain) if args.retain else frozenset()
    prior = StructPrior(
        n_nodes=n,
        max_parents=max_parents,
        ban=frozenset(ban),
        retain=frozenset(retain),
    )
    cache = build_cache(
        dataset, ess=args.ess, prior=prior, threads=args.threads
    )
    atomic_write_text(args.out, json.dumps(cache_to_json(cache), indent=1) + "\n")
    inputs = {"data": args.data}
    if args.schema:
        inputs["schema"] = args.schema
    if args.ban:
        inputs["ban"] = args.ban
    if args.retain:
        inputs["retain"] = args.retain
    write_manifest(args.out, "cache", _flags_dict(args), inputs)
    return EXIT_OK


def cmd_sample(args) -> int:
    cache = load_cache(args.cache)
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    if args.start.startswith("dag:"):
        dag, _names = load_dag_json(args.start[4:])
        start: Dag | str = dag
    elif args.start in ("empty", "random"):
        start = args.start
    else:
        raise UsageError(
            f"--start must be empty, random, or dag:<file>; got {args.start!r}"
        )
    try:
        weights = parse_weights(args.weights) if args.weights else MoveWeights()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        config = ChainConfig(
            steps=args.steps,
            seed=args.seed,
            start=start,
            weights=weights,
            burn_in=args.burn_in,
            thin=args.thin,
        )
    except SamplerError as exc:
        raise UsageError(str(exc)) from None
    trace = run_chain(cache, None, config)
    atomic_write_text(args.out, trace_csv_text(trace))
    write_manifest(
        args.out,
        "sample",
        _flags_dict(args),
        {"cache": args.cache},
        seeds={"seed": args.seed},
    )
    return EXIT_OK


def cmd_query(args) -> int:
    trace = read_trace_csv(args.trace)
    names = trace.names
    estimates: dict[str, float] = {}
    extra: dict = {}
    dag_freq = None
    for text in args.feature:
        parsed = parse_feature(text, names, trace.n_nodes)
        if isinstance(parsed, tuple) and parsed[0] == "dag-freq":
            report = dag_frequency(trace, parsed[1])
            dag_freq = report.dag_frequency
            extra["n_distinct"] = report.extra["n_distinct"]
        elif isinstance(parsed, tuple) and parsed[0] == "score-trace":
            values = normalized_score_trace(trace, sort=parsed[1])
            key = "score_trace_sorted" if parsed[1] else "score_trace"
            extra[key] = [float(x) for x in values]
        else:
            report = estimate(trace, parsed)
            estimates.update(report.estimates)
    report = QueryReport(
        estimates=estimates,
        sample_size=len(trace),
        dag_frequency=dag_freq,
        extra=extra,
    )
    atomic_write_text(args.out, json.dumps(report.to_json(), indent=1) + "\n")
    if args.csv:
        atomic_write_text(args.csv, report.to_csv_text())
    write_manifest(args.out, "query", _flags_dict(args), {"trace": args.trace})
    return EXIT_OK


def cmd_exact(args) -> int:
    cache = load_cache(args.cache)
    if cache.n_nodes > MAX_EXACT_NODES:
        raise UsageError(
            f"exact enumeration is limited to n <= {MAX_EXACT_NODES} nodes "
            f"(29,281 DAGs at n=5); the cache has {cache.n_nodes}"
        )
    posterior = exact_posterior(cache)
    report = posterior.to_report(names=cache.names, top=args.top)
    if args.feature:
        # the full arc/adjacency tables are already included; just reject
        # feature kinds that only make sense on traces
        for text in args.feature:
            parsed = parse_feature(text, cache.names, cache.n_nodes)
            if isinstance(parsed, tuple):
                raise UsageError(
                    f"feature {text!r} applies to traces, not exact reports"
                )
    atomic_write_text(args.out, json.dumps(report.to_json(), indent=1) + "\n")
    write_manifest(args.out, "exact", _flags_dict(args), {"cache": args.cache})
    return EXIT_OK


# --- parser -------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(
        prog="mcdag",
        description=(
            "Structure MCMC over Bayesian-network DAGs: simulate data, build "
            "a BDeu score cache, sample DAGs, and evaluate structural queries."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"mcdag {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "simulate",
        help="forward-sample a discrete dataset from a CPT-parameterized DAG",
        description=(
            "Forward-sample observations. Without --dag/--cpt the built-in "
            "5-node benchmark network is used."
        ),
    )
    p.add_argument("--version", action="version", version=f"mcdag {__version__}")
    p.add_argument("--dag", help="DAG JSON file (default: built-in benchmark)")
    p.add_argument("--cpt", help="CPT JSON file (default: built-in benchmark)")
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output data CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "cache",
        help="score every admissible parent set of every node",
        description="Build the BDeu score cache for a discrete dataset.",
    )
    p.add_argument("--version", action="version", version=f"mcdag {__version__}")
    p.add_argument("--data", required=True, help="input data CSV")
    p.add_argument("--no-header", action="store_true", help="data CSV has no header row")
    p.add_argument("--schema", help="JSON sidecar declaring arities")
    p.add_argument("--ess", type=float, default=1.0, help="equivalent sample size")
    p.add_argument(
        "--max-parents",
        type=int,
        dest="max_parents",
        help="parent-set size limit (default n-1, required for n > 8)",
    )
    p.add_argument("--ban", help="banned-edge adjacency CSV (row=child, col=parent)")
    p.add_argument("--retain", help="retained-edge adjacency CSV (row=child, col=parent)")
    p.add_argument("--threads", type=int, default=1, help="cap on builder threads")
    p.add_argument("--out", required=True, help="output cache JSON")
    p.set_defaults(func=cmd_cache)

    p = sub.add_parser(
        "sample",
        help="run the Metropolis-Hastings chain over DAGs",
        description=(
            "Sample DAG structures. --start empty starts from the minimal "
            "admissible DAG (just the retained edges); --start dag:<file> "
            "starts from a given DAG JSON."
        ),
    )
    p.add_argument("--version", action="version", version=f"mcdag {__version__}")
    p.add_argument("--cache", required=True, help="cache JSON from 'mcdag cache'")
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", default="empty", help="empty | random | dag:<file>")
    p.add_argument(
        "--weights",
        help="move mixture, e.g. single=0.8,rev=0.1,mbr=0.1 (normalized)",
    )
    p.add_argument("--burn-in", type=int, default=0, dest="burn_in")
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--out", required=True, help="output trace CSV")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser(
        "query",
        help="evaluate structural queries on a trace",
        description=(
            "Estimate feature posteriors from a trace. Features: arc:a->b, "
            "adj:a-b, all-arcs, all-adj, dag-freq:k, score-trace[:sorted]. "
            "score-trace reports log score minus the trace maximum (a "
            "non-positive quantity whose maximum is exactly 0)."
        ),
    )
    p.add_argument("--version", action="version", version=f"mcdag {__version__}")
    p.add_argument("--trace", required=True, help="trace CSV from 'mcdag sample'")
    p.add_argument(
        "--feature",
        action="append",
        required=True,
        help="feature to evaluate (repeatable)",
    )
    p.add_argument("--out", required=True, help="output report JSON")
    p.add_argument("--csv", help="also write a plot-ready CSV report")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser(
        "exact",
        help="exact posterior by exhaustive enumeration (n <= 5)",
        description=(
            "Enumerate every admissible DAG, normalize exp(score), and report "
            "exact arc/adjacency posteriors with per-DAG probabilities."
        ),
    )
    p.add_argument("--version", action="version", version=f"mcdag {__version__}")
    p.add_argument("--cache", required=True, help="cache JSON from 'mcdag cache'")
    p.add_argument("--feature", action="append", help="extra feature (arc/adj)")
    p.add_argument("--top", type=int, help="truncate the per-DAG list to the top K")
    p.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    p.add_argument("--out", required=True, help="output report JSON")
    p.set_defaults(func=cmd_exact)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"mcdag: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mcdag: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"mcdag: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"mcdag: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
