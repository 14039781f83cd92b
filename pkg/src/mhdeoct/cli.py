"""Command-line experiment runner.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 budget error.
The worker count defaults to ``$MHDEOCT_WORKERS`` when ``--workers`` is absent.
"""

from __future__ import annotations

import argparse
import os
import sys

from .data import DataError
from .experiment import (
    METHODS,
    ExperimentConfig,
    _as_tuple,
    alpha_grid_from_text,
    emit_report,
    run_experiment,
    summary_line,
)
from .fitness import WORKERS_ENV
from .greedy import BudgetExceeded

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_BUDGET = 0, 1, 2, 3


class _ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mhdeoct", description="Train optimal classification trees on repeated seeded splits.")
    p.add_argument("--data", required=True, help="CSV file with a header row, or a bundled benchmark name")
    p.add_argument("--label-col", help="label column (default: last column)")
    p.add_argument("--categorical-cols", default="", help="comma-separated categorical columns")
    p.add_argument("--method", choices=METHODS, default="mh-deoct")
    p.add_argument("--depth", type=int, help="tree depth (default 2; fixed for the oracles)")
    p.add_argument("--mh-depth", type=int, help="moving-horizon depth (default 2 for depth 2, else 3)")
    p.add_argument("--alpha", type=float, default=0.0, help="cost per active split")
    p.add_argument(
        "--alpha-grid",
        help="tune alpha on a validation split; 'default' or comma-separated costs per split "
        "relative to the training-set size",
    )
    p.add_argument("--val-fraction", type=float, help="validation share when tuning (default 0.25)")
    p.add_argument("--nmin", type=int, default=1, help="minimum leaf size")
    p.add_argument("--mode", choices=("normal", "long"), default="normal")
    p.add_argument("--pop", type=int, help="population size (overrides --mode)")
    p.add_argument("--gens", type=int, help="generations (overrides --mode)")
    p.add_argument("--cr", type=float, default=0.1, help="crossover probability")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="base seed; repetition i uses seed + i")
    p.add_argument("--workers", type=int, help=f"fitness worker count (default ${WORKERS_ENV} or all cores)")
    p.add_argument("--stride", type=int, default=32, help="samples per parallel work unit")
    p.add_argument("--no-warm-start", action="store_true", help="disable every CART/DEOCT warm start")
    p.add_argument("--out", help="report path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    depth = args.depth
    if depth is None:
        depth = {"oracle-d1": 1, "oracle-d2": 2}.get(args.method, 2)
    grid = alpha_grid_from_text(args.alpha_grid)
    tuning = grid is not None
    val = args.val_fraction if args.val_fraction is not None else (0.25 if tuning else 0.0)
    workers = args.workers
    if workers is None and os.environ.get(WORKERS_ENV):
        workers = int(os.environ[WORKERS_ENV])
    return ExperimentConfig(
        data=args.data,
        method=args.method,
        label_col=args.label_col,
        categorical_cols=_as_tuple(args.categorical_cols),
        depth=depth,
        mh_depth=args.mh_depth,
        alpha=args.alpha,
        alpha_grid=grid,
        n_min=args.nmin,
        mode=args.mode,
        pop=args.pop,
        gens=args.gens,
        cr=args.cr,
        reps=args.reps,
        seed=args.seed,
        workers=workers,
        stride=args.stride,
        train_fraction=0.5 if tuning else 0.75,
        validation_fraction=val,
        warm_starts=(False, False, False) if args.no_warm_start else (True, True, True),
        out=args.out,
        format=args.format,
    )


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
    except (_ConfigError, ValueError) as exc:
        print(f"mhdeoct: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg)
    except BudgetExceeded as exc:
        print(f"mhdeoct: budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except DataError as exc:
        print(f"mhdeoct: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"mhdeoct: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = emit_report(report, cfg.format, cfg.out)
    if cfg.out is None:
        sys.stdout.write(text)
    print(f"mhdeoct: {cfg.method} depth={cfg.depth} {summary_line(report)}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
