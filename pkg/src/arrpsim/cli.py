"""Command-line entry points: run, sweep, validate, report."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

import numpy as np

from arrpsim import metrics as mx
from arrpsim import scenario as sc
from arrpsim.network import NetworkError
from arrpsim.state import InvariantViolation

log = logging.getLogger("arrpsim")

EXIT_OK = 0
EXIT_INPUT = 1       # bad config, network, or demand input
EXIT_INVARIANT = 2   # a run broke a hard invariant
EXIT_CELLS = 3       # sweep finished but some cells failed


class _Parser(argparse.ArgumentParser):
    # usage mistakes are input errors, same exit class as bad configs
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _default_jobs() -> int:
    raw = os.environ.get("ARRP_SIM_JOBS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="arrp-sim",
                     description="Discrete-epoch ride-pooling fleet simulator")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log detail (-v info, -vv debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", default=out_default, help="output CSV path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")

    p_run = sub.add_parser("run", help="simulate one scenario")
    common(p_run, "metrics.csv")
    p_run.add_argument("--trace", default=None,
                       help="also write an event trace (NDJSON) here")

    p_sweep = sub.add_parser("sweep", help="simulate the full factorial grid")
    common(p_sweep, "sweep.csv")
    p_sweep.add_argument("--jobs", type=int, default=_default_jobs(),
                         help="worker processes (env ARRP_SIM_JOBS)")
    p_sweep.add_argument("--trace", default=None, metavar="DIR",
                         help="write one trace file per cell into DIR")

    p_val = sub.add_parser("validate", help="check a config and its input files")
    p_val.add_argument("--config", required=True, help="scenario JSON file")

    p_rep = sub.add_parser("report", help="summarize a metrics CSV")
    p_rep.add_argument("--out", required=True, help="metrics CSV to summarize")
    return parser


def _load(args) -> sc.ScenarioConfig:
    cfg = sc.load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args)
    trace = [] if args.trace else None
    row, result = sc.run_scenario(cfg, trace=trace)
    mx.write_metrics_csv(args.out, [row])
    if args.trace:
        mx.write_trace_ndjson(args.trace, trace)
    print(f"{cfg.scenario_id}: served {row['pct_served']:.1f}% "
          f"(shared {row['pct_shared']:.1f}%), "
          f"avg wait {row['avg_wait_s']:.0f} s, "
          f"avg delay {row['avg_delay_s']:.0f} s, "
          f"fleet distance {row['total_vmt_m'] / 1000.0:.1f} km, "
          f"{result.epochs} epochs")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    failed = sc.run_sweep(cfg, args.out, jobs=max(1, args.jobs),
                          trace_dir=args.trace)
    total = len(sc.sweep_grid(cfg))
    print(f"wrote {total} rows to {args.out} ({failed} failed)")
    return EXIT_CELLS if failed else EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _load(args)
    graph, matrix, zones = sc.build_world(cfg)
    n_req = None
    if cfg.rates_csv:
        sc.load_rates(cfg.rates_csv, zones, cfg)
    if cfg.requests_csv:
        requests = sc.load_requests(cfg.requests_csv, cfg, graph, matrix)
        bad = [r.id for r in requests if not np.isfinite(r.direct_time)]
        if bad:
            raise sc.ScenarioError(
                f"{cfg.requests_csv}: unreachable origin/destination for "
                f"request ids {bad[:5]}{'...' if len(bad) > 5 else ''}")
        n_req = len(requests)
    print(f"config OK: {graph.n_nodes} nodes, {zones.n_zones} zones, "
          f"fleet {cfg.fleet_size}, "
          + (f"{n_req} requests from file" if n_req is not None
             else f"~{cfg.demand_per_hour:.0f} requests/h synthesized"))
    return EXIT_OK


def _cmd_report(args) -> int:
    rows = mx.read_metrics_csv(args.out)
    if not rows:
        print("no rows")
        return EXIT_OK
    errors = [r for r in rows if r.get("error")]
    good = [r for r in rows if not r.get("error")]
    print(f"{len(rows)} rows, {len(errors)} failed")
    if good:
        def col(name):
            return np.array([float(r[name]) for r in good])
        print(f"served {col('pct_served').mean():.1f}% mean, "
              f"shared {col('pct_shared').mean():.1f}% mean, "
              f"distance per served trip {col('vmr_m').mean():.0f} m mean")
        groups: dict = {}
        for r in good:
            groups.setdefault((r["capacity"], r["horizon_s"]), []).append(r)
        print(f"{'capacity':>8} {'horizon_s':>9} {'cells':>5} "
              f"{'vmr_m':>8} {'pct_served':>10} {'avg_wait_s':>10}")
        for (cap, h), rs in sorted(groups.items(),
                                   key=lambda kv: (float(kv[0][0]),
                                                   float(kv[0][1]))):
            vmr = np.mean([float(r["vmr_m"]) for r in rs])
            srv = np.mean([float(r["pct_served"]) for r in rs])
            wait = np.mean([float(r["avg_wait_s"]) for r in rs])
            print(f"{cap:>8} {h:>9} {len(rs):>5} {vmr:>8.0f} "
                  f"{srv:>10.1f} {wait:>10.0f}")
    for r in errors[:10]:
        print(f"failed: {r['scenario_id']}: {r['error']}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_report(args)
    except (sc.ScenarioError, NetworkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
