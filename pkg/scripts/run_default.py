"""Run the default scenario and print the check table and a few headline functionals."""

import argparse
import logging
from pathlib import Path

from chemostokes import config as C
from chemostokes import experiments as ex
from chemostokes.diagnostics import column

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "configs" / "default.json"))
    ap.add_argument("--out", default="out/default")
    ap.add_argument("--override", action="append", default=[])
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    outcome = ex.cmd_run(C.load_config(args.config, args.override, validate=False), args.out)
    if outcome.checks:
        print(ex.verdict_table(outcome.checks))
    if outcome.records:
        recs = outcome.records
        print(f"\nt_end {recs[-1].t:g}  steps recorded {len(recs)}  wall {outcome.seconds:.1f} s")
        for name in ("mass", "l2n_sq", "grad_c_l2_sq", "kinetic", "entropy", "theta"):
            v = column(recs, name)
            print(f"  {name:<14} start {v[0]:.6g}  end {v[-1]:.6g}  max {v.max():.6g}")
    if outcome.reason:
        print(outcome.reason)
    raise SystemExit(outcome.exit_code)


if __name__ == "__main__":
    main()
