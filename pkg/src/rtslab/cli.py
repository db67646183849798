"""Command-line entry point: ``rtslab run|grid|oracle|validate``.

Exit status: 0 completed, 1 configuration error, 2 runtime invariant
violation, 3 validation failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__, oracle, validation
from .config import (ALGORITHMS, DISTANCES, POLICIES, Document, name_of, parse_grid_spec,
                     parse_run_config)
from .engine import AlgorithmConfig, ConfigError, InvariantViolation, run
from .experiments import default_parallelism, run_grid
from .formats import cells_csv, report_json, runs_csv

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_VALIDATION = 0, 1, 2, 3

log = logging.getLogger("rtslab")


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _parallel(args) -> int:
    if os.environ.get("RTSLAB_PARALLEL"):
        return default_parallelism()
    return args.parallel if args.parallel is not None else default_parallelism()


def cmd_run(args) -> int:
    config = parse_run_config(Document.from_path(args.config))
    trace_fh = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        if trace_fh is not None:
            trace_fh.write("generation,count0,count1,best0,best1\n")

            def trace(rows):
                trace_fh.writelines(",".join(map(str, r)) + "\n" for r in rows.tolist())
        else:
            trace = None
        result = run(config, args.seed, trace=trace)
    finally:
        if trace_fh is not None:
            trace_fh.close()
    print(f"algorithm   {name_of(ALGORITHMS, config.kind)} "
          f"({name_of(POLICIES, config.policy)}, {name_of(DISTANCES, config.distance)})")
    print(f"n={config.n} mu={config.mu} w={config.w} seed={args.seed}")
    print(f"status      {result.status.name.lower()}")
    print(f"generations {result.generations}")
    print(f"lone        {'yes' if result.lone_occurred else 'no'}")
    print(f"best        branch0={result.best_branch0} branch1={result.best_branch1} "
          f"min={result.min_branch_best}")
    return EXIT_OK


def cmd_grid(args) -> int:
    spec = parse_grid_spec(Document.from_path(args.config), args.seed)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc.strerror}") from None
    report = run_grid(spec, parallel=_parallel(args))
    (out / "runs.csv").write_text(runs_csv(report), encoding="utf-8")
    (out / "cells.csv").write_text(cells_csv(report), encoding="utf-8")
    (out / "report.json").write_text(report_json(report), encoding="utf-8")
    for c in report.cells:
        if c.failed:
            print(f"mu={c.mu} w={c.w}: FAILED {c.error}", file=sys.stderr)
        else:
            print(f"mu={c.mu} w={c.w}: success {c.success_count}/{c.runs} "
                  f"mean generations {c.mean_generations:.6g} lone {c.lone_count}")
    return EXIT_INVARIANT if report.failed_cells else EXIT_OK


def cmd_oracle(args) -> int:
    if (args.T is None) == (not args.expected):
        raise ConfigError("give exactly one of --T or --expected")
    if args.T is not None and args.T < 0:
        raise ConfigError("--T must be non-negative")
    limits = oracle.OracleLimits(max_n=args.max_n, max_mu=args.max_mu,
                                 max_state_count=args.max_states)
    config = AlgorithmConfig(n=args.n, mu=args.mu, w=args.w, kind=ALGORITHMS[args.kind],
                             policy=POLICIES[args.policy], distance=DISTANCES[args.distance])
    try:
        model = oracle.build_model(config, limits)
    except oracle.OracleLimitError as exc:
        raise ConfigError(str(exc)) from None
    init = oracle.initial_distribution(model)
    if args.expected:
        res = oracle.expected_absorption_time(model, init)
        print(format(res.expectation, ".12g"))
        for s in res.trapped_states:
            print("trapped " + " ".join(format(g, f"0{args.n}b")[::-1] for g in s),
                  file=sys.stderr)
    else:
        print(format(oracle.success_probability_within(model, init, args.T), ".12g"))
    return EXIT_OK


def cmd_validate(args) -> int:
    ctx = validation.Context(parallel=_parallel(args),
                             seed=validation.MASTER_SEED if args.seed is None else args.seed)
    results = validation.run_checks(args.level, ctx)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print("failed: " + ", ".join(failed))
        return EXIT_VALIDATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rtslab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rtslab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="one run from a YAML configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=_u64, required=True)
    r.add_argument("--trace", help="write per-generation branch statistics to this CSV file")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("grid", help="a (mu, w) grid from a YAML experiment file")
    g.add_argument("--config", required=True)
    g.add_argument("--seed", type=_u64, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--parallel", type=_positive)
    g.set_defaults(func=cmd_grid)

    o = sub.add_parser("oracle", help="exact Markov-chain values for tiny instances")
    o.add_argument("--n", type=_positive, required=True)
    o.add_argument("--mu", type=_positive, required=True)
    o.add_argument("--w", type=_positive, default=1)
    o.add_argument("--policy", choices=list(POLICIES), default="with_replacement")
    o.add_argument("--distance", choices=list(DISTANCES), default="genotypic")
    o.add_argument("--kind", choices=list(ALGORITHMS), default="rts")
    o.add_argument("--T", type=int, help="success probability within T generations")
    o.add_argument("--expected", action="store_true", help="expected absorption time")
    o.add_argument("--max-n", type=_positive, default=oracle.OracleLimits.max_n)
    o.add_argument("--max-mu", type=_positive, default=oracle.OracleLimits.max_mu)
    o.add_argument("--max-states", type=_positive, default=oracle.OracleLimits.max_state_count)
    o.add_argument("--seed", type=_u64, help="accepted for uniformity; the oracle is exact")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("validate", help="run the self-check suites")
    v.add_argument("--level", choices=("fast", "full"), default="fast")
    v.add_argument("--parallel", type=_positive)
    v.add_argument("--seed", type=_u64)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which would read as an
        # invariant violation here
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
