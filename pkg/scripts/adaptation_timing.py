"""Time goal adaptation: transfer (GATLing) vs training from scratch (GRAQL)."""
import argparse
import json
from dataclasses import replace
from pathlib import Path

from odgr.harness import compare, load_scenario

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default=str(ROOT / "scenarios" / "table1_empty8_g4.toml"))
    ap.add_argument("--runs", type=int, default=3)
    ap.add_argument("--episodes", type=int)
    args = ap.parse_args()

    sc = replace(load_scenario(args.scenario), runs=args.runs)
    if args.episodes:
        sc = replace(sc, train_cfg=replace(sc.train_cfg, episodes=args.episodes))
    # no shared cache: every table is trained inside the timed phase
    t = compare(sc).timing_summary()
    print(json.dumps(t, indent=2))


if __name__ == "__main__":
    main()
