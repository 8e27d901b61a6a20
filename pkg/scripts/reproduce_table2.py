"""9x9 room with two walls: GATLing vs GRAQL over 2 dynamic goals."""
import argparse
from dataclasses import replace
from pathlib import Path

from odgr.harness import compare, load_scenario

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
    args = ap.parse_args()

    sc = load_scenario(ROOT / "scenarios" / "table2_crossing9.toml")
    print(compare(replace(sc, runs=args.runs, seed=args.seed)).emit(args.format))


if __name__ == "__main__":
    main()
