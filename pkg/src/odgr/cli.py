"""Command-line entry point: ``odgr {train,adapt,infer,gen-traces,run,compare}``.

Errors are reported on stderr as one JSON object ``{"error": <class>, "message": ...}``
with a nonzero exit code that depends on the error class.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .gridworld import GridError, GridSpec, corner_goals, make_empty, make_simple_crossing
from .harness import Observe, ScenarioError, compare, emit_report, load_scenario, run_scenario, summarize
from .qlearn import ContractError, QTable, TrainConfig, train, value_iteration
from .recognize import RecognizerConfig, infer
from .traces import ObservationTrace, TraceError, generate_trace, subsample
from .transfer import GoalLibrary, TransferOptions, adapt_goals

EXIT_CODES = {
    "UsageError": 2,
    "GridError": 3,
    "TraceError": 4,
    "ScenarioError": 5,
    "ContractError": 6,
    "FileNotFoundError": 7,
}


class UsageError(ValueError):
    pass


def parse_cell(text: str) -> tuple[int, int]:
    try:
        x, y = (int(v) for v in text.replace("(", "").replace(")", "").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}")
    return x, y


def load_grid(text: str) -> GridSpec:
    """``empty:N``, ``crossing:N[:SEED]`` or a path to a grid JSON file."""
    if text.startswith("empty:"):
        return make_empty(int(text.split(":")[1]))
    if text.startswith("crossing:"):
        parts = text.split(":")
        return make_simple_crossing(int(parts[1]), int(parts[2]) if len(parts) > 2 else 0)
    return GridSpec.from_json(Path(text).read_text())


def _goal_name(g) -> str:
    return f"q_{g[0]}_{g[1]}.json"


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _read_trace(path: str) -> ObservationTrace:
    if path == "-":
        return ObservationTrace.from_lines(sys.stdin)
    text = Path(path).read_text()
    if path.endswith(".jsonl"):
        return ObservationTrace.from_lines(text.splitlines())
    return ObservationTrace.from_json(text)


def cmd_train(args) -> int:
    spec = load_grid(args.grid)
    goals = args.goal or corner_goals(spec)
    out = Path(args.out)
    _write(out, "grid.json", spec.to_json())
    for i, g in enumerate(goals):
        cfg = TrainConfig(alpha=args.alpha, episodes=args.episodes, seed=args.seed + i)
        q = train(spec, g, cfg)
        print(_write(out, _goal_name(g), q.to_json()))
    return 0


def cmd_adapt(args) -> int:
    spec = load_grid(args.grid)
    tables = [QTable.from_json(Path(p).read_text(), spec) for p in args.base]
    base = GoalLibrary(spec, [q.goal for q in tables], tables)
    opts = TransferOptions(args.weights, args.aggregation, args.scale is not None, args.scale or 0.5)
    lib = adapt_goals(base, args.goal, opts)
    for g, q in zip(lib.goals, lib.qtables):
        print(_write(Path(args.out), _goal_name(g), q.to_json()))
    print(json.dumps({"adaptation_s": lib.elapsed, "fallbacks": {f"{g[0]},{g[1]}": n for g, n in lib.diagnostics.items()}}))
    return 0


def cmd_infer(args) -> int:
    spec = load_grid(args.grid)
    tables = [QTable.from_json(Path(p).read_text(), spec) for p in args.library]
    lib = GoalLibrary(spec, [q.goal for q in tables], tables)
    cfg = RecognizerConfig(smoothing=args.smoothing, policy=args.policy, temperature=args.temperature)
    for path in args.trace:
        res = infer(lib, _read_trace(path), cfg)
        print(json.dumps(res.to_dict()))
    return 0


def cmd_gen_traces(args) -> int:
    spec = load_grid(args.grid)
    out = Path(args.out)
    for g in args.goal:
        actor = value_iteration(spec, g)
        full = generate_trace(spec, actor, args.start, g, seed=args.seed)
        for obs in args.observability:
            t = subsample(full, obs, args.mode, seed=args.seed)
            name = f"trace_{g[0]}_{g[1]}_obs{obs:g}.{'jsonl' if args.lines else 'json'}"
            print(_write(out, name, t.to_lines() if args.lines else t.to_json() + "\n"))
    return 0


def _scenario_from_args(args):
    sc = load_scenario(args.scenario)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.runs is not None:
        changes["runs"] = args.runs
    if args.episodes is not None:
        changes["train_cfg"] = replace(sc.train_cfg, episodes=args.episodes)
    if args.observability:
        # replace the observe events that follow each goal-set event
        events = []
        for ev in sc.events:
            if isinstance(ev, Observe):
                continue
            events.append(ev)
            events.extend(Observe(o) for o in args.observability)
        changes["events"] = tuple(events)
    return replace(sc, **changes)


def _emit(args, text: str, name: str) -> None:
    if args.out:
        print(_write(Path(args.out), name, text))
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    sc = _scenario_from_args(args)
    res = run_scenario(sc, workers=args.workers)
    ext = {"markdown": "md", "csv": "csv", "json": "json"}[args.format]
    _emit(args, emit_report(summarize(res), args.format), f"{sc.name}.{ext}")
    if args.out:
        doc = {"answers": res.answers_dict(with_timing=True), "timings": [t.__dict__ for t in res.timings]}
        _write(Path(args.out), f"{sc.name}.gstar.json", json.dumps(doc, indent=1))
    return 0


def cmd_compare(args) -> int:
    sc = _scenario_from_args(args)
    comp = compare(sc, workers=args.workers)
    ext = {"markdown": "md", "csv": "csv", "json": "json"}[args.format]
    _emit(args, comp.emit(args.format), f"{sc.name}.compare.{ext}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="odgr", description="Online dynamic goal recognition in gridworlds.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="learn one Q-table per goal")
    t.add_argument("--grid", default="empty:8")
    t.add_argument("--goal", type=parse_cell, action="append", help="repeatable; default: corner goals")
    t.add_argument("--episodes", type=int, default=TrainConfig.episodes)
    t.add_argument("--alpha", type=float, default=TrainConfig.alpha)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default="out")
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("adapt", help="build Q-tables for new goals by transfer")
    a.add_argument("--grid", required=True)
    a.add_argument("--base", nargs="+", required=True, help="base Q-table files")
    a.add_argument("--goal", type=parse_cell, action="append", required=True)
    a.add_argument("--weights", choices=["static", "dynamic"], default="dynamic")
    a.add_argument("--aggregation", choices=["normalize", "softmax", "max"], default="softmax")
    a.add_argument("--scale", type=float, default=None, help="enable scaling with this temperature")
    a.add_argument("--out", default="out")
    a.set_defaults(func=cmd_adapt)

    i = sub.add_parser("infer", help="recognize the goal behind trace files")
    i.add_argument("--grid", required=True)
    i.add_argument("--library", nargs="+", required=True, help="candidate Q-table files")
    i.add_argument("--trace", nargs="+", required=True, help="trace files (.json, .jsonl, or - for stdin lines)")
    i.add_argument("--smoothing", type=float, default=1e-8)
    i.add_argument("--policy", choices=["ratio", "softmax"], default="softmax")
    i.add_argument("--temperature", type=float, default=1.0)
    i.set_defaults(func=cmd_infer)

    g = sub.add_parser("gen-traces", help="generate actor traces with the optimal actor")
    g.add_argument("--grid", default="empty:8")
    g.add_argument("--goal", type=parse_cell, action="append", required=True)
    g.add_argument("--start", type=parse_cell, default=(1, 1))
    g.add_argument("--observability", type=float, nargs="+", default=[1.0])
    g.add_argument("--mode", choices=["random", "prefix"], default="random")
    g.add_argument("--lines", action="store_true", help="write the line-oriented format")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="out")
    g.set_defaults(func=cmd_gen_traces)

    for name, func, help_ in (("run", cmd_run, "run a scenario file"), ("compare", cmd_compare, "run a scenario under GATLing and GRAQL")):
        r = sub.add_parser(name, help=help_)
        r.add_argument("scenario")
        r.add_argument("--seed", type=int)
        r.add_argument("--runs", type=int)
        r.add_argument("--episodes", type=int)
        r.add_argument("--observability", type=float, nargs="+")
        r.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
        r.add_argument("--out")
        r.add_argument("--workers", type=int, help="overrides $ODGR_WORKERS")
        r.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (GridError, TraceError, ScenarioError, ContractError, UsageError, FileNotFoundError, ValueError) as exc:
        cls = type(exc).__name__
        print(json.dumps({"error": cls, "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES.get(cls, 1)


if __name__ == "__main__":
    sys.exit(main())
