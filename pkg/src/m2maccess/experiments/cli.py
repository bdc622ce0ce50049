"""Command-line entry point: ``m2maccess <subcommand>``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from ..sim.params import raos_for_delay
from .config import ConfigError, ScenarioConfig, load_config
from .results import AGGREGATE_COLUMNS, aggregate, emit_results, emit_table, estimator_summary, format_value
from .runners import (
    DIMENSIONING_COLUMNS,
    run_dimensioning_table,
    run_estimator_sweep,
    run_reliability_comparison,
    run_scenario,
)

log = logging.getLogger("m2maccess")


def _csv_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _csv_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _common(suppress: bool) -> argparse.ArgumentParser:
    # shared flags; subcommand copies use SUPPRESS so flags work before or after the subcommand
    d = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d, help="master seed")
    p.add_argument("--replications", type=int, default=d, help="replications per grid point")
    p.add_argument("--output", "-o", default=d, help="results CSV path")
    p.add_argument("--workers", type=int, default=d, help="worker processes for comparison cells")
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="m2maccess",
        description="Estimation and serving access frames for massive M2M random access.",
        parents=[_common(False)],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    shared = _common(True)

    p = sub.add_parser("estimate-sweep", parents=[shared], help="estimator bias over a device-count grid")
    p.add_argument("--config", help="scenario file (kind estimator-sweep)")
    p.add_argument("--grid", type=_csv_ints, help="device counts, e.g. 100,1000,10000")

    p = sub.add_parser("compare", parents=[shared], help="legacy vs proposed reliability")
    p.add_argument("--config", help="scenario file (kind reliability-comparison)")
    p.add_argument("--n1", type=_csv_ints, help="TC1 burst sizes")
    p.add_argument("--n2", type=int, help="TC2 population")
    p.add_argument("--tau1", type=_csv_floats, help="TC1 latency budgets in seconds")

    p = sub.add_parser("dimension", parents=[shared], help="serving plans for given estimates")
    p.add_argument("--config", help="scenario file")
    p.add_argument("--n1", type=_csv_ints, help="TC1 estimates")
    p.add_argument("--n2", type=int, help="TC2 estimate (0 for a single class)")
    p.add_argument("--tau1", type=_csv_floats, help="latency budgets in seconds, mapped to L")
    p.add_argument("--r-req", type=float, dest="r_req_1", help="TC1 reliability target")
    p.add_argument("--model", choices=("exact", "mixture"), help="second-frame reliability model")

    p = sub.add_parser("simulate", parents=[shared], help="run any scenario file")
    p.add_argument("config", help="scenario file")
    return parser


def _base_config(args, kind: str) -> ScenarioConfig:
    path = getattr(args, "config", None)
    cfg = load_config(path) if path else ScenarioConfig(kind=kind, scenario_id=kind)
    if not path and kind == "estimator-sweep":
        cfg = dataclasses.replace(cfg, replications=500)
    overrides = {
        "seed": args.seed,
        "replications": args.replications,
        "output": args.output,
        "workers": args.workers,
        "grid": getattr(args, "grid", None),
        "n1": getattr(args, "n1", None),
        "n2": getattr(args, "n2", None),
        "tau1": getattr(args, "tau1", None),
        "r_req_1": getattr(args, "r_req_1", None),
        "model": getattr(args, "model", None),
    }
    cfg = cfg.with_overrides(**overrides)
    if cfg.replications < 0:
        raise ConfigError(f"replications: must be >= 0, got {cfg.replications}")
    for tau in cfg.tau1:
        raos_for_delay(tau, cfg.arp)
    return cfg


def _print_table(header, records, out) -> None:
    out.write("\t".join(header) + "\n")
    for rec in records:
        out.write("\t".join(format_value(v) for v in rec) + "\n")


def _emit(rows, cfg: ScenarioConfig, out) -> None:
    agg_path = emit_results(rows, cfg.output)
    log.info("wrote %d rows to %s and aggregates to %s", len(rows), cfg.output, agg_path)
    if rows and all(r.scheme == "estimator" for r in rows):
        _print_table(("scenario", "N", "replications", "n_hat_mean", "n_hat_std", "relative_bias"),
                     estimator_summary(rows), out)
    else:
        _print_table(AGGREGATE_COLUMNS, aggregate(rows), out)


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "estimate-sweep":
            cfg = _base_config(args, "estimator-sweep")
            _emit(run_estimator_sweep(cfg), cfg, out)
        elif args.command == "compare":
            cfg = _base_config(args, "reliability-comparison")
            _emit(run_reliability_comparison(cfg), cfg, out)
        elif args.command == "dimension":
            cfg = _base_config(args, "dimensioning-table")
            rows = [dataclasses.astuple(r) for r in run_dimensioning_table(cfg)]
            if args.output is not None:
                emit_table(DIMENSIONING_COLUMNS, rows, cfg.output)
            _print_table(DIMENSIONING_COLUMNS, rows, out)
        else:
            cfg = _base_config(args, "custom")
            result = run_scenario(cfg)
            if cfg.kind == "dimensioning-table":
                rows = [dataclasses.astuple(r) for r in result]
                emit_table(DIMENSIONING_COLUMNS, rows, cfg.output)
                _print_table(DIMENSIONING_COLUMNS, rows, out)
            else:
                _emit(result, cfg, out)
    except (ConfigError, ValueError) as exc:
        print(f"m2maccess: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"m2maccess: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
