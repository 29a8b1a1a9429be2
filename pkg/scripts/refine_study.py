"""(h, dt) -> (h/2, dt/4) refinement study plus the 128x128 heat decay check."""

import argparse
import logging
import math
from pathlib import Path

from chemostokes import config as C
from chemostokes import experiments as ex

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "configs" / "refine.json"))
    ap.add_argument("--out", default="out/refine")
    ap.add_argument("--levels", type=int, default=None)
    ap.add_argument("--heat-grid", type=int, default=128)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING, format="%(message)s")

    code, rows = ex.cmd_refine(C.load_config(args.config), args.out, levels=args.levels)
    print(ex.refine_table(rows))
    rate = ex.heat_decay_rate(args.heat_grid)
    print(f"\nheat decay at {args.heat_grid}^2: rate {rate:.6f}, "
          f"relative error vs 2 pi^2 {abs(rate / (2 * math.pi**2) - 1):.2e}")
    raise SystemExit(code)


if __name__ == "__main__":
    main()
