"""Command-line entry point.

Subcommands mirror the experiments: `run` executes one scenario and writes
the report files, `compare-bridges` tabulates events vs polling across load
levels, `sweep-speed` raises v_max until the controller fails. Exit codes:
0 success, 2 invalid config, 3 controller failure when the run was asked to
treat that as fatal.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import compare as cmp
from .config import default_config, derive_config, load_config
from .errors import ConfigInvalid
from .scenario import Scenario
from .report import write_all

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE_EVENTS = 3

OUT_ENV = "LEDGERBRIDGE_OUT"


def _out_dir(arg) -> str:
    return arg or os.environ.get(OUT_ENV) or "out"


def _load(path) -> "ScenarioConfig":
    return load_config(path) if path else default_config()


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if args.seed is not None:
        cfg = derive_config(cfg, seed=args.seed)
    if args.live:
        from .gateway import GatewayServer
        host, _, port = args.listen.rpartition(":")
        server = GatewayServer(cfg, host or "127.0.0.1", int(port))
        print(f"gateway listening on {server.address[0]}:{server.address[1]}")
        server.serve_forever()
        return EXIT_OK
    scenario = Scenario(cfg)
    report = scenario.run()
    out = _out_dir(args.out)
    paths = write_all(report, scenario.ledger, out)
    summary = report.latency_summary() if report.samples else None
    if summary:
        print(f"{summary['count']} samples, median {summary['median']:.1f} ms, "
              f"mean {summary['mean']:.1f} ms")
    print(f"{len(report.failures)} failure event(s)")
    for p in paths:
        print(f"wrote {p}")
    if args.fail_on_controller_failure and report.failures:
        return EXIT_FAILURE_EVENTS
    return EXIT_OK


def cmd_compare_bridges(args) -> int:
    cfg = _load(args.config)
    rows = cmp.compare_bridges(cfg, with_sweep=not args.no_sweep)
    table = cmp.render_table(rows)
    print(table)
    out = _out_dir(args.out)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "compare.txt"), "w") as fh:
        fh.write(table + "\n")
    with open(os.path.join(out, "compare.json"), "w") as fh:
        json.dump(cmp.rows_as_dicts(rows), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {os.path.join(out, 'compare.txt')}")
    print(f"wrote {os.path.join(out, 'compare.json')}")
    return EXIT_OK


def cmd_sweep_speed(args) -> int:
    cfg = _load(args.config)
    try:
        speeds = [float(s) for s in args.speeds.split(",") if s.strip()]
    except ValueError:
        raise ConfigInvalid(f"bad --speeds value {args.speeds!r}") from None
    rows = cmp.sweep_speed(cfg, speeds, args.seeds)
    table = cmp.render_sweep(rows)
    print(table)
    stable = cmp.max_stable_speed(rows)
    print(f"max stable speed: {stable if stable is not None else '-'} m/s")
    out = _out_dir(args.out)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "sweep.json"), "w") as fh:
        json.dump({"rows": [{"speed_m_s": r.speed_m_s, "runs": r.runs,
                             "failures": r.failures} for r in rows],
                   "max_stable_speed_m_s": stable}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {os.path.join(out, 'sweep.json')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ledgerbridge",
        description="Simulated ledger data bridge between two robot networks")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write report files")
    run.add_argument("--config", help="scenario config JSON (defaults used if omitted)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    run.add_argument("--live", action="store_true",
                     help="serve the scenario wall-paced over a gateway socket")
    run.add_argument("--listen", default="127.0.0.1:8770", metavar="ADDR:PORT",
                     help="gateway listen address (with --live)")
    run.add_argument("--fail-on-controller-failure", action="store_true",
                     help="exit 3 if any controller failure event occurred")
    run.set_defaults(fn=cmd_run)

    cb = sub.add_parser("compare-bridges",
                        help="events vs polling latency table across load levels")
    cb.add_argument("--config", help="base config (must not pin bridge_mode)")
    cb.add_argument("--out", help="output directory")
    cb.add_argument("--no-sweep", action="store_true",
                    help="skip the per-cell speed sweep (faster)")
    cb.set_defaults(fn=cmd_compare_bridges)

    sw = sub.add_parser("sweep-speed", help="failure fraction per commanded speed")
    sw.add_argument("--config", help="base config")
    sw.add_argument("--speeds", default="0.3,0.5,1.0,1.5",
                    help="comma-separated speeds in m/s")
    sw.add_argument("--seeds", type=int, default=5, help="seeds per speed")
    sw.add_argument("--out", help="output directory")
    sw.set_defaults(fn=cmd_sweep_speed)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
