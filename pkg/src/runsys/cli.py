"""Command-line front end.

Exit codes: 0 when every verdict passes, 1 when any verdict fails, 2 on
configuration or resource errors.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import random
import sys
from typing import Iterator

from . import byzantine as bz
from . import coordinated_attack as ca
from .errors import ConfigurationError, DomainError, ModelError, RangeError, ResourceError
from .scenario import SUITES, graph_for, load_config, run_config, validate_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

_RANDOM_FUNCS = ("random", "randint", "randrange", "choice", "choices", "shuffle", "sample",
                 "uniform", "gauss", "seed", "getrandbits")


@contextlib.contextmanager
def no_randomness() -> Iterator[None]:
    """Make every module-level ``random`` function raise while active."""
    saved = {name: getattr(random, name) for name in _RANDOM_FUNCS}

    def forbidden(*args, **kwargs):
        raise AssertionError("randomness used under --seedless")

    try:
        for name in _RANDOM_FUNCS:
            setattr(random, name, forbidden)
        yield
    finally:
        for name, fn in saved.items():
            setattr(random, name, fn)


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)


def _summary_line(report: dict) -> str:
    s = report["summary"]
    sysinfo = report["system"]
    status = "PASS" if s["passed"] else "FAIL: " + ", ".join(s["failed"])
    return f"{report['scenario'].get('suite')}: {sysinfo['runs']} runs, {sysinfo['points']} points; {status}"


def _execute(config: dict, args) -> int:
    code, report, built = run_config(config, budget=args.budget, workers=args.workers)
    text = dump_report(report)
    out = args.report or (config.get("output") or {}).get("report")
    if out:
        _write(out, text)
        print(_summary_line(report))
    else:
        sys.stdout.write(text)
    witness_out = getattr(args, "witness_out", None) or (config.get("output") or {}).get("witness")
    if witness_out and built.witness_text:
        _write(witness_out, built.witness_text)
    return code


def cmd_run(args) -> int:
    path = args.config or args.scenario
    if not path:
        raise ConfigurationError("run needs a scenario file (positional or --config)")
    return _execute(load_config(path), args)


def cmd_export_graph(args) -> int:
    path = args.config or args.scenario
    if not path:
        raise ConfigurationError("export-graph needs a scenario file (positional or --config)")
    config = load_config(path)
    out = args.out or (config.get("output") or {}).get("graph")
    _write(out, graph_for(config, budget=args.budget, time=args.time))
    return EXIT_OK


def cmd_list_suites(args) -> int:
    for name, blurb in SUITES.items():
        print(f"{name:14s} {blurb}")
    return EXIT_OK


def cmd_coord_attack(args) -> int:
    params = {"transits": args.transits, "horizon": args.horizon, "attack_rule": args.attack_rule,
              "reliable": args.reliable}
    config = {"suite": "coord-attack", "params": params,
              "queries": [{"query": "C(A+B, delivered)", "expect": "nonempty" if args.reliable else "empty"},
                          {"query": "K(B, sent)", "expect": "nonempty" if args.transits else "empty"}]}
    validate_config(config, "coord-attack")
    return _execute(config, args)


def cmd_byzantine(args) -> int:
    params = {"n": args.n, "t": args.t, "failures": args.failures, "experiment": args.experiment}
    if args.horizon is not None:
        params["horizon"] = args.horizon
    config = {"suite": "byzantine", "params": params}
    validate_config(config, "byzantine")
    return _execute(config, args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="runsys", description="Knowledge analysis of finite multi-agent systems.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget", type=int, help="global-state budget (overrides config and RUNSYS_BUDGET)")
    common.add_argument("--workers", type=int, default=None, help="parallel workers for run generation")
    common.add_argument("--report", help="write the JSON report here instead of stdout")
    common.add_argument("--seedless", action="store_true", help="fail if any randomness is used")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run a scenario file")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("export-graph", parents=[common], help="write a DOT indistinguishability graph")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--config")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--time", type=int, help="only show points at this time")
    p.set_defaults(func=cmd_export_graph)

    p = sub.add_parser("list-suites", help="list the available suites")
    p.set_defaults(func=cmd_list_suites, seedless=False)

    p = sub.add_parser("coord-attack", parents=[common], help="two-generals messenger analysis")
    p.add_argument("--transits", type=int, default=4)
    p.add_argument("--horizon", type=int, default=6)
    p.add_argument("--attack-rule", choices=list(ca.ATTACK_RULES), default="never")
    p.add_argument("--reliable", action="store_true", help="messenger never loses a message")
    p.set_defaults(func=cmd_coord_attack)

    p = sub.add_parser("byzantine", parents=[common], help="synchronous agreement analysis")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--failures", choices=list(bz.KINDS), default="crash")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--experiment", choices=["check", "lower-bound"], default="check")
    p.add_argument("--witness-out", help="write a replayable witness for the first failing run")
    p.set_defaults(func=cmd_byzantine)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    guard = no_randomness() if args.seedless else contextlib.nullcontext()
    try:
        with guard:
            return args.func(args)
    except ResourceError as exc:
        print(f"runsys: resource limit: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, ModelError, DomainError, RangeError) as exc:
        print(f"runsys: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
