"""Command-line entry point: ``chemostokes run|sweep|refine|check``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import config as cfgmod
from . import experiments as ex
from .errors import ChemostokesError


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chemostokes")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one configuration"),
                        ("sweep", "run an epsilon list and compare members"),
                        ("refine", "(h, dt) -> (h/2, dt/4) convergence study")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output directory (default: output.dir)")
        p.add_argument("--threads", type=int, default=None,
                       help="parallel sweep members (default: $CHEMOSTOKES_THREADS or 1)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config key with a JSON value; repeatable")
        if name == "refine":
            p.add_argument("--levels", type=int, default=None)
    p = sub.add_parser("check", help="replay the checks on a stored run directory")
    p.add_argument("run_dir", nargs="?", help="run directory")
    p.add_argument("--config", help="config whose output.dir is the run directory")
    p.add_argument("--out", help="run directory (alias of the positional argument)")
    p.add_argument("--threads", type=int, default=None, help=argparse.SUPPRESS)
    p.add_argument("--override", action="append", default=[], help=argparse.SUPPRESS)
    sub.add_parser("defaults", help="print the default configuration")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except ChemostokesError as exc:
        print(f"chemostokes: {exc}", file=sys.stderr)
        return ex.EXIT_CHECK_FAILED


def _dispatch(args) -> int:
    if args.command == "defaults":
        sys.stdout.write(cfgmod.dump_config(cfgmod.RunConfig()))
        return ex.EXIT_OK

    if args.command == "check":
        run_dir = args.run_dir or args.out
        if run_dir is None and args.config:
            run_dir = cfgmod.load_config(args.config, validate=False).output.dir
        if run_dir is None:
            print("chemostokes check: give a run directory", file=sys.stderr)
            return ex.EXIT_CHECK_FAILED
        code, checks, mismatches = ex.cmd_check(run_dir)
        print(ex.verdict_table(checks))
        if mismatches:
            print("differs from in-run verdicts: " + ", ".join(mismatches))
        return code

    cfg = cfgmod.load_config(args.config, args.override, validate=False)
    if args.command == "run":
        outcome = ex.cmd_run(cfg, args.out)
        if outcome.checks:
            print(ex.verdict_table(outcome.checks))
        if outcome.reason:
            print(f"{outcome.status}: {outcome.reason}")
        return outcome.exit_code
    if args.command == "sweep":
        code, report = ex.cmd_sweep(cfg, args.out, threads=args.threads)
        print(report.summary(), end="")
        return code
    code, rows = ex.cmd_refine(cfg, args.out, levels=args.levels)
    print(ex.refine_table(rows))
    return code


if __name__ == "__main__":
    sys.exit(main())
