"""Empty 8x8 room: GATLing vs GRAQL over 2, 3 and 4 dynamic goals."""
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

    cache = {}
    for n in (2, 3, 4):
        sc = load_scenario(ROOT / "scenarios" / f"table1_empty8_g{n}.toml")
        sc = replace(sc, runs=args.runs, seed=args.seed)
        comp = compare(sc, cache)
        print(f"## {n} dynamic goals\n")
        print(comp.emit(args.format))


if __name__ == "__main__":
    main()
