"""Command-line front door.

Subcommands: edge-params, quantile-table, onatski-null, test run, size-power,
diagnostics. Every subcommand takes --config and the override flags --seed,
--reps, --out, --threads; most can also run from flags alone. Exit codes:
0 success, 2 config error, 3 edge-condition violation, 4 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import report
from .config import ExperimentConfig
from .errors import (
    ConfigError,
    CovedgeError,
    EdgeConditionViolated,
    EigenFailure,
    NonConvergence,
)
from .onatski import critical_value, save_null_table
from .runners import (
    DIAG_COLUMNS,
    EDGE_COLUMNS,
    NULL_COLUMNS,
    TEST_COLUMNS,
    diagnostics_csv,
    edge_params_csv,
    quantile_rows_csv,
    rows_to_csv,
    run_diagnostics,
    run_edge_params,
    run_onatski_null,
    run_quantile_table,
    run_size_power,
    run_test_file,
    size_power_csv,
)

THREADS_ENV = "COVEDGE_THREADS"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--reps", type=int, help="override the replication count")
    p.add_argument("--out", help="output CSV path (figure goes next to it)")
    p.add_argument("--threads", type=int,
                   help=f"worker count (default ${THREADS_ENV} or 1)")
    p.add_argument("--no-plot", action="store_true",
                   help="skip the figure next to the CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covedge",
        description="Edge statistics of sample covariance matrices: "
                    "Tracy-Widom normalization and gap-ratio tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("edge-params", help="compute (c, lambda_r, sigma, margin)")
    _add_common(p)
    p.add_argument("--sigma-model", help="model kind when no config is given")
    p.add_argument("--spike", type=float, help="spike for the dr kinds")
    p.add_argument("--rotation-seed", type=int, default=0)
    p.add_argument("--m", type=int, help="population dimension M")
    p.add_argument("--d", type=float, help="dimensional ratio N/M")

    p = sub.add_parser("quantile-table", help="Tracy-Widom quantile accuracy table")
    _add_common(p)

    p = sub.add_parser("onatski-null", help="simulate the gap-ratio null table")
    _add_common(p)
    p.add_argument("--beta", type=int, choices=(1, 2))
    p.add_argument("--dim", type=int, help="Gaussian ensemble dimension")
    p.add_argument("--save-table", help="write the raw sorted ratios here")

    p = sub.add_parser("test", help="hypothesis tests on ingested data")
    tsub = p.add_subparsers(dest="test_command", required=True)
    pr = tsub.add_parser("run", help="gap-ratio test on a matrix file")
    _add_common(pr)
    pr.add_argument("matrix_file", help="data file: 'M,N' header then M rows")
    pr.add_argument("--level", type=float, default=None)
    pr.add_argument("--null-table", help="cached null-table file (built if absent)")

    p = sub.add_parser("size-power", help="rejection rates under null/alternatives")
    _add_common(p)

    p = sub.add_parser("diagnostics", help="rigidity / delocalization / trace checks")
    _add_common(p)

    return parser


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}")
    return 1


def _load_config(args, experiment: str, extra: dict | None = None) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
        if cfg.experiment != experiment:
            raise ConfigError(
                f"config declares {cfg.experiment!r}; this command runs {experiment!r}")
        raw = None
    else:
        raw = {"experiment": experiment}
        raw.update(extra or {})
        cfg = ExperimentConfig.from_dict(raw)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.reps is not None:
        cfg.replications = args.reps
        if cfg.replications < 1:
            raise ConfigError("replications must be >= 1")
    if args.out is not None:
        cfg.output = args.out
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)


def _maybe_plot(args, cfg, render, *render_args) -> None:
    if cfg.output and not args.no_plot:
        png = report.figure_path(cfg.output)
        render(*render_args, png)
        print(f"wrote {png}")


def _cmd_edge_params(args) -> int:
    extra: dict = {}
    if not args.config:
        if not args.sigma_model or not args.m or args.d is None:
            raise ConfigError(
                "edge-params needs --config or all of --sigma-model/--m/--d")
        model: dict = {"kind": args.sigma_model, "rotation_seed": args.rotation_seed}
        if args.spike is not None:
            model["spike"] = args.spike
        extra = {"sigma_model": model,
                 "shapes": [[args.m, round(args.m * args.d)]]}
    cfg = _load_config(args, "edge_params", extra)
    rows = run_edge_params(cfg)
    _emit(edge_params_csv(cfg, rows), cfg.output)
    _maybe_plot(args, cfg, report.render_edge_params_figure, rows)
    return 0


def _cmd_quantile_table(args) -> int:
    cfg = _load_config(args, "quantile_table")
    rows = run_quantile_table(cfg, threads=_threads(args))
    _emit(quantile_rows_csv(cfg, rows), cfg.output)
    _maybe_plot(args, cfg, report.render_quantile_figure, rows)
    return 0


def _cmd_onatski_null(args) -> int:
    extra: dict = {}
    if not args.config:
        if args.dim is None:
            raise ConfigError("onatski-null needs --config or --dim")
        extra = {"dim": args.dim, "replications": 5000}
        if args.beta is not None:
            extra["beta"] = args.beta
    cfg = _load_config(args, "onatski_null", extra)
    if args.beta is not None:
        cfg.beta = args.beta
    table, rows = run_onatski_null(cfg, threads=_threads(args))
    if getattr(args, "save_table", None):
        save_null_table(args.save_table, table)
        print(f"wrote {args.save_table}")
    comments = [f"covedge onatski_null seed={cfg.seed}"]
    _emit(rows_to_csv(NULL_COLUMNS, rows, comments), cfg.output)
    cv = critical_value(table, cfg.level)
    print(f"critical value at level {cfg.level:g}: {cv:.6g}")
    _maybe_plot(args, cfg, report.render_null_table_figure, table, cv, cfg.level)
    return 0


def _cmd_test_run(args) -> int:
    extra = {"matrix_file": args.matrix_file}
    if args.null_table:
        extra["null_table"] = {"path": args.null_table}
    cfg = _load_config(args, "test_run", extra)
    if args.matrix_file:
        cfg.matrix_file = args.matrix_file
    if args.level is not None:
        if not 0.0 < args.level < 1.0:
            raise ConfigError("level must lie in (0, 1)")
        cfg.level = args.level
    if args.null_table:
        cfg.null_table = dict(cfg.null_table, path=args.null_table)
    row, _table = run_test_file(cfg, threads=_threads(args))
    _emit(rows_to_csv(TEST_COLUMNS, [row]), cfg.output)
    verdict = "REJECT" if row["reject"] else "no rejection"
    print(f"statistic {row['statistic']:.6g} vs critical {row['critical_value']:.6g} "
          f"at level {row['level']:g}: {verdict}")
    _maybe_plot(args, cfg, report.render_test_figure, row)
    return 0


def _cmd_size_power(args) -> int:
    cfg = _load_config(args, "size_power")
    rows, table = run_size_power(cfg, threads=_threads(args))
    _emit(size_power_csv(cfg, rows, table), cfg.output)
    _maybe_plot(args, cfg, report.render_size_power_figure, rows)
    return 0


def _cmd_diagnostics(args) -> int:
    cfg = _load_config(args, "diagnostics")
    result = run_diagnostics(cfg, threads=_threads(args))
    _emit(diagnostics_csv(cfg, result), cfg.output)
    fit = result["rigidity"]
    print(f"rigidity slope {fit.slope:.4f} (r2 {fit.r2:.3f})")
    _maybe_plot(args, cfg, report.render_diagnostics_figure, result)
    return 0


_DISPATCH = {
    "edge-params": _cmd_edge_params,
    "quantile-table": _cmd_quantile_table,
    "onatski-null": _cmd_onatski_null,
    "size-power": _cmd_size_power,
    "diagnostics": _cmd_diagnostics,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "test":
            return _cmd_test_run(args)
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EdgeConditionViolated as exc:
        print(f"edge condition violated: {exc}", file=sys.stderr)
        return 3
    except (NonConvergence, EigenFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except CovedgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
