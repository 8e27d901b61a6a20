"""Mean GATLing accuracy per weighting scheme and aggregation method."""
import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from odgr.harness import load_scenario, run_scenario
from odgr.metrics import evaluate
from odgr.transfer import TransferOptions

ROOT = Path(__file__).resolve().parent.parent
VARIANTS = [
    ("dynamic", "softmax"),
    ("dynamic", "normalize"),
    ("static", "softmax"),
    ("static", "normalize"),
    ("dynamic", "max"),
]


def suite_accuracy(opts: TransferOptions, runs: int, cache: dict) -> float:
    accs = []
    for n in (2, 3, 4):
        sc = load_scenario(ROOT / "scenarios" / f"table1_empty8_g{n}.toml")
        res = run_scenario(replace(sc, transfer_opts=opts, runs=runs), cache)
        accs.append(evaluate(res.episodes()).accuracy)
    return float(np.mean(accs))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=10)
    args = ap.parse_args()
    cache = {}
    print("| weights | aggregation | mean accuracy |\n|---|---|---|")
    for w, a in VARIANTS:
        acc = suite_accuracy(TransferOptions(w, a), args.runs, cache)
        print(f"| {w} | {a} | {acc:.3f} |")


if __name__ == "__main__":
    main()
