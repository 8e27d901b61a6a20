"""Scenario runner for online dynamic goal recognition.

A scenario fixes a grid, the base goals, and an ordered list of events. Each
event either replaces the current goal set or delivers observation traces to
be explained by it. Events are processed strictly in order. The runner times
the three phases (domain learning, goals adaptation, inference) and collects
one answer per trace, grouped per goal set.

Two recognizers are supported. ``gatling`` trains the base goals once and
builds tables for every new goal set by transfer. ``graql`` has no domain
learning and trains a fresh table for every goal of every goal set.
"""
from __future__ import annotations

import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np

from . import qlearn
from .gridworld import Cell, GridSpec, corner_goals, make_empty, make_simple_crossing
from .metrics import METRICS, EvalEpisode, EvalReport, evaluate, mean_std
from .qlearn import QTable, TrainConfig, train, value_iteration
from .recognize import RecognitionResult, RecognizerConfig, infer
from .traces import ObservationTrace, generate_trace, subsample
from .transfer import GoalLibrary, TransferOptions, adapt_goals

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

RECOGNIZERS = ("gatling", "graql")
WORKERS_ENV = "ODGR_WORKERS"

# seed-derivation tags, so that every random draw is keyed by where it happens
_BASE, _SAMPLE, _GRAQL, _TRACE, _SUBSAMPLE, _START, _ACTOR = range(7)


class ScenarioError(ValueError):
    """Invalid scenario definition or event ordering."""


@dataclass(frozen=True)
class NewGoalSet:
    goals: tuple = ()
    sample: int = 0

    def __post_init__(self):
        object.__setattr__(self, "goals", tuple(tuple(int(v) for v in g) for g in self.goals))
        if bool(self.goals) == bool(self.sample):
            raise ScenarioError("a goal-set event needs exactly one of `goals` or `sample`")


@dataclass(frozen=True)
class Observe:
    observability: float = 1.0
    mode: str = "random"
    traces: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(str(t) for t in self.traces))
        if not 0 < self.observability <= 1:
            raise ScenarioError(f"observability must be in (0, 1], got {self.observability}")
        if self.mode not in ("random", "prefix"):
            raise ScenarioError(f"unknown subsample mode {self.mode!r}")


Event = Union[NewGoalSet, Observe]


@dataclass(frozen=True)
class Scenario:
    domain: dict = field(default_factory=lambda: {"kind": "empty", "size": 8})
    base_goals: tuple | None = None
    events: tuple = ()
    train_cfg: TrainConfig = TrainConfig()
    transfer_opts: TransferOptions = TransferOptions()
    recognizer: str = "gatling"
    recognizer_cfg: RecognizerConfig = RecognizerConfig(policy="softmax")
    runs: int = 1
    seed: int = 0
    actor: str = "oracle"
    actor_policy: str = "greedy"
    actor_start: tuple | str = (1, 1)
    name: str = "scenario"
    base_dir: str = "."

    def __post_init__(self):
        if self.base_goals is not None:
            object.__setattr__(self, "base_goals", tuple(tuple(int(v) for v in g) for g in self.base_goals))
        object.__setattr__(self, "events", tuple(self.events))
        if isinstance(self.actor_start, (list, tuple)):
            object.__setattr__(self, "actor_start", tuple(int(v) for v in self.actor_start))
        elif self.actor_start != "random":
            raise ScenarioError("actor_start must be [x, y] or \"random\"")
        if self.recognizer not in RECOGNIZERS:
            raise ScenarioError(f"unknown recognizer {self.recognizer!r}; expected one of {RECOGNIZERS}")
        if self.actor not in ("oracle", "trained"):
            raise ScenarioError(f"unknown actor {self.actor!r}")
        if self.runs < 1:
            raise ScenarioError("runs must be >= 1")
        seen_goals = False
        for ev in self.events:
            if isinstance(ev, NewGoalSet):
                seen_goals = True
            elif isinstance(ev, Observe):
                if not seen_goals:
                    raise ScenarioError("an observe event precedes the first goal-set event")
            else:
                raise ScenarioError(f"unknown event {ev!r}")


def build_grid(domain: dict, base_dir: str | Path = ".") -> GridSpec:
    kind = domain.get("kind", "empty")
    if kind == "empty":
        return make_empty(int(domain.get("size", 8)))
    if kind == "crossing":
        return make_simple_crossing(int(domain.get("size", 9)), int(domain.get("seed", 0)))
    if kind == "file":
        return GridSpec.from_json((Path(base_dir) / domain["path"]).read_text())
    if kind == "inline":
        return GridSpec.from_dict(domain)
    raise ScenarioError(f"unknown domain kind {kind!r}")


def scenario_from_dict(doc: dict, base_dir: str | Path = ".") -> Scenario:
    events = []
    for i, ev in enumerate(doc.get("events", [])):
        kind = ev.get("type")
        if kind == "goals":
            events.append(NewGoalSet(tuple(ev.get("goals", ())), int(ev.get("sample", 0))))
        elif kind == "observe":
            events.append(
                Observe(float(ev.get("observability", 1.0)), ev.get("mode", "random"), tuple(ev.get("traces", ())))
            )
        else:
            raise ScenarioError(f"event {i}: unknown type {kind!r}")
    try:
        return Scenario(
            domain=dict(doc.get("domain", {"kind": "empty", "size": 8})),
            base_goals=doc.get("base_goals"),
            events=tuple(events),
            train_cfg=TrainConfig(**doc.get("train", {})),
            transfer_opts=TransferOptions(**doc.get("transfer", {})),
            recognizer=doc.get("recognizer", "gatling"),
            recognizer_cfg=RecognizerConfig(**{"policy": "softmax", **doc.get("recognize", {})}),
            runs=int(doc.get("runs", 1)),
            seed=int(doc.get("seed", 0)),
            actor=doc.get("actor", "oracle"),
            actor_policy=doc.get("actor_policy", "greedy"),
            actor_start=doc.get("actor_start", [1, 1]),
            name=doc.get("name", "scenario"),
            base_dir=str(base_dir),
        )
    except TypeError as exc:  # unknown keys in a config table
        raise ScenarioError(str(exc)) from exc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    doc.setdefault("name", path.stem)
    return scenario_from_dict(doc, path.parent)


@dataclass
class PhaseTimings:
    domain_learning: float = 0.0
    goals_adaptation: list[float] = field(default_factory=list)
    goals_per_set: list[int] = field(default_factory=list)
    inference: list[float] = field(default_factory=list)
    inference_q_updates: int = 0

    def per_goal_adaptation(self) -> list[float]:
        return [t / n for t, n in zip(self.goals_adaptation, self.goals_per_set) if n]


@dataclass
class Recognition:
    run: int
    goal_set: int
    event: int
    observability: float
    n_goals: int
    true_goal: Cell | None
    result: RecognitionResult


@dataclass
class ScenarioResult:
    name: str
    recognizer: str
    goal_sets: list[list[list[Cell]]]  # [run][goal set] -> goals
    answers: list[list[list[RecognitionResult]]]  # [run][goal set] -> one result per trace
    records: list[Recognition]
    timings: list[PhaseTimings]

    def episodes(self) -> list[EvalEpisode]:
        return [
            EvalEpisode(r.true_goal, r.result.predicted, r.result.scores)
            for r in self.records
            if r.true_goal is not None
        ]

    @property
    def report(self) -> EvalReport | None:
        eps = self.episodes()
        return evaluate(eps) if eps else None

    def answers_dict(self, with_timing: bool = False) -> list:
        out = []
        for run, sets in enumerate(self.answers):
            groups = []
            for gi, results in enumerate(sets):
                items = []
                for res in results:
                    d = res.to_dict()
                    if not with_timing:
                        d.pop("elapsed_us")
                    items.append(d)
                groups.append({"goals": [list(g) for g in self.goal_sets[run][gi]], "answers": items})
            out.append(groups)
        return out


def _workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


class _Runner:
    def __init__(self, sc: Scenario, cache: dict | None, workers: int):
        self.sc = sc
        self.spec = build_grid(sc.domain, sc.base_dir)
        self.cache = cache if cache is not None else {}
        self.traces: dict = {}
        self.workers = workers

    def seed(self, *keys: int) -> int:
        return int(np.random.SeedSequence([self.sc.seed, *keys]).generate_state(1)[0])

    def rng(self, *keys: int) -> np.random.Generator:
        return np.random.default_rng([self.sc.seed, *keys])

    def _train(self, goal: Cell, seed: int) -> QTable:
        cfg = replace(self.sc.train_cfg, seed=seed)
        key = ("train", self.spec.ident, goal, cfg)
        if key not in self.cache:
            self.cache[key] = train(self.spec, goal, cfg)
        return self.cache[key]

    def train_many(self, goals: list[Cell], seeds: list[int]) -> list[QTable]:
        if self.workers == 1 or len(goals) < 2:
            return [self._train(g, s) for g, s in zip(goals, seeds)]
        with ThreadPoolExecutor(self.workers) as pool:
            return list(pool.map(self._train, goals, seeds))

    def oracle(self, goal: Cell) -> QTable:
        key = ("oracle", self.spec.ident, goal, self.sc.train_cfg.gamma)
        if key not in self.cache:
            self.cache[key] = value_iteration(self.spec, goal, self.sc.train_cfg.gamma)
        return self.cache[key]

    def base_goals(self) -> list[Cell]:
        goals = list(self.sc.base_goals) if self.sc.base_goals else corner_goals(self.spec)
        return [self.spec.check_cell(g, "base goal") for g in goals]

    def sample_goals(self, run: int, ev_idx: int, n: int, base: list[Cell]) -> list[Cell]:
        excluded = set(base)
        if isinstance(self.sc.actor_start, tuple):
            excluded.add(self.sc.actor_start)
        cands = [s for s in self.spec.states if s not in excluded]
        if n > len(cands):
            raise ScenarioError(f"cannot sample {n} goals from {len(cands)} candidate cells")
        idx = self.rng(run, _SAMPLE, ev_idx).choice(len(cands), size=n, replace=False)
        return [cands[i] for i in idx]

    def full_trace(self, run: int, goal: Cell) -> ObservationTrace:
        if (run, goal) in self.traces:
            return self.traces[run, goal]
        if self.sc.actor == "oracle":
            actor_q = self.oracle(goal)
        else:
            actor_q = self._train(goal, self.seed(run, _ACTOR, *goal))
        if self.sc.actor_start == "random":
            free = [s for s in self.spec.states if s != goal]
            start = free[int(self.rng(run, _START, *goal).integers(len(free)))]
        else:
            start = self.spec.check_cell(self.sc.actor_start, "actor start")
            if start == goal:
                raise ScenarioError(f"goal {goal} coincides with the actor start cell")
        trace = generate_trace(
            self.spec, actor_q, start, goal, seed=self.seed(run, _TRACE, *goal), policy=self.sc.actor_policy
        )
        self.traces[run, goal] = trace
        return trace

    def traces_for(self, run: int, ev_idx: int, ev: Observe, goals: list[Cell]) -> list[ObservationTrace]:
        if ev.traces:
            out = []
            for path in ev.traces:
                p = Path(self.sc.base_dir) / path
                text = p.read_text()
                t = ObservationTrace.from_lines(text.splitlines()) if p.suffix == ".jsonl" else ObservationTrace.from_json(text)
                out.append(t)
            return out
        out = []
        for gi, g in enumerate(goals):
            full = self.full_trace(run, g)
            out.append(subsample(full, ev.observability, ev.mode, seed=self.seed(run, _SUBSAMPLE, ev_idx, gi)))
        return out

    def run_once(self, run: int):
        sc = self.sc
        timings = PhaseTimings()
        base = self.base_goals()
        base_lib = None
        t0 = time.perf_counter()
        if sc.recognizer == "gatling":
            tables = self.train_many(base, [self.seed(run, _BASE, i) for i in range(len(base))])
            base_lib = GoalLibrary(self.spec, base, tables)
        timings.domain_learning = time.perf_counter() - t0

        goal_sets, answers, records = [], [], []
        library = None
        for ei, ev in enumerate(sc.events):
            if isinstance(ev, NewGoalSet):
                goals = list(ev.goals) if ev.goals else self.sample_goals(run, ei, ev.sample, base)
                goals = [self.spec.check_cell(g, "goal") for g in goals]
                t0 = time.perf_counter()
                if sc.recognizer == "gatling":
                    library = adapt_goals(base_lib, goals, sc.transfer_opts)
                else:
                    seeds = [self.seed(run, _GRAQL, *g) for g in goals]
                    library = GoalLibrary(self.spec, goals, self.train_many(goals, seeds))
                timings.goals_adaptation.append(time.perf_counter() - t0)
                timings.goals_per_set.append(len(goals))
                goal_sets.append(goals)
                answers.append([])
            else:
                traces = self.traces_for(run, ei, ev, goal_sets[-1])
                before = qlearn.UPDATE_COUNTER["updates"]
                t0 = time.perf_counter()
                results = [infer(library, t, sc.recognizer_cfg) for t in traces]
                timings.inference.append(time.perf_counter() - t0)
                timings.inference_q_updates += qlearn.UPDATE_COUNTER["updates"] - before
                answers[-1].extend(results)
                for t, res in zip(traces, results):
                    records.append(
                        Recognition(run, len(goal_sets) - 1, ei, t.observability, len(goal_sets[-1]), t.true_goal, res)
                    )
        return goal_sets, answers, records, timings


def run_scenario(scenario: Scenario, cache: dict | None = None, workers: int | None = None) -> ScenarioResult:
    """Run every event of ``scenario`` for each of its runs.

    ``cache`` may be shared across calls to reuse trained tables; training is
    deterministic in its inputs, so reuse never changes answers, only timings.
    """
    qlearn.warmup()
    runner = _Runner(scenario, cache, _workers(workers))
    all_sets, all_answers, all_records, all_timings = [], [], [], []
    for run in range(scenario.runs):
        sets, answers, records, timings = runner.run_once(run)
        all_sets.append(sets)
        all_answers.append(answers)
        all_records.extend(records)
        all_timings.append(timings)
    return ScenarioResult(scenario.name, scenario.recognizer, all_sets, all_answers, all_records, all_timings)


@dataclass
class TableRow:
    recognizer: str
    observability: float
    n_goals: int
    runs: int
    stats: dict[str, tuple[float, float]]


def summarize(result: ScenarioResult) -> list[TableRow]:
    """Per (observability, goal count): metrics per run, then mean and std over runs."""
    groups: dict[tuple[float, int], dict[int, list[EvalEpisode]]] = {}
    for r in result.records:
        if r.true_goal is None:
            continue
        key = (round(r.observability, 6), r.n_goals)
        groups.setdefault(key, {}).setdefault(r.run, []).append(
            EvalEpisode(r.true_goal, r.result.predicted, r.result.scores)
        )
    rows = []
    for (obs, n), by_run in sorted(groups.items()):
        reports = [evaluate(eps) for _, eps in sorted(by_run.items())]
        rows.append(TableRow(result.recognizer, obs, n, len(reports), mean_std(reports)))
    return rows


_HEADERS = {"accuracy": "Acc", "precision": "Prec", "recall": "Rec", "fscore": "F-score"}


def emit_report(rows: list[TableRow], fmt: str = "markdown") -> str:
    """Render table rows as ``csv``, ``markdown`` or ``json``; output is stable for fixed input."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["recognizer", "obs", "goals", "runs"] + [f"{m}_{s}" for m in METRICS for s in ("mean", "std")])
        for r in rows:
            w.writerow(
                [r.recognizer, f"{r.observability:g}", r.n_goals, r.runs]
                + [f"{v:.6f}" for m in METRICS for v in r.stats[m]]
            )
        return buf.getvalue()
    if fmt == "markdown":
        out = []
        for rec in dict.fromkeys(r.recognizer for r in rows):
            out.append(f"**{rec}**\n")
            out.append("| OBS | Goals | " + " | ".join(_HEADERS[m] for m in METRICS) + " |")
            out.append("|---" * (2 + len(METRICS)) + "|")
            for r in rows:
                if r.recognizer != rec:
                    continue
                cells = [f"{r.stats[m][0]:.2f}±{r.stats[m][1]:.2f}" for m in METRICS]
                out.append(f"| {r.observability:g} | {r.n_goals} | " + " | ".join(cells) + " |")
            out.append("")
        return "\n".join(out)
    if fmt == "json":
        return json.dumps([asdict(r) for r in rows], indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown report format {fmt!r}; expected csv, markdown or json")


@dataclass
class Comparison:
    gatling: ScenarioResult
    graql: ScenarioResult

    def timing_summary(self) -> dict:
        def phase(res: ScenarioResult) -> dict:
            per_goal = [t for tm in res.timings for t in tm.per_goal_adaptation()]
            infer_t = [t for tm in res.timings for t in tm.inference]
            return {
                "domain_learning_s": float(np.mean([tm.domain_learning for tm in res.timings])),
                "adaptation_per_goal_s": float(np.mean(per_goal)) if per_goal else 0.0,
                "inference_per_event_s": float(np.mean(infer_t)) if infer_t else 0.0,
                "inference_q_updates": sum(tm.inference_q_updates for tm in res.timings),
            }

        gat, gra = phase(self.gatling), phase(self.graql)
        ratio = gat["adaptation_per_goal_s"] / gra["adaptation_per_goal_s"] if gra["adaptation_per_goal_s"] else float("nan")
        return {"gatling": gat, "graql": gra, "adaptation_ratio": ratio}

    def same_truths(self) -> bool:
        return [r.true_goal for r in self.gatling.records] == [r.true_goal for r in self.graql.records]

    def emit(self, fmt: str = "markdown") -> str:
        rows = summarize(self.gatling) + summarize(self.graql)
        t = self.timing_summary()
        if fmt == "json":
            doc = {"rows": json.loads(emit_report(rows, "json")), "timings": t}
            return json.dumps(doc, indent=2, sort_keys=True) + "\n"
        if fmt == "csv":
            return emit_report(rows, "csv")
        lines = [emit_report(rows, fmt), "| Phase | GATLing | GRAQL |", "|---|---|---|"]
        for key in ("domain_learning_s", "adaptation_per_goal_s", "inference_per_event_s"):
            lines.append(f"| {key} | {t['gatling'][key]:.6f} | {t['graql'][key]:.6f} |")
        lines.append(f"\nadaptation ratio (GATLing / GRAQL per goal): {t['adaptation_ratio']:.5f}\n")
        return "\n".join(lines)


def compare(scenario: Scenario, cache: dict | None = None, workers: int | None = None) -> Comparison:
    """Run ``scenario`` under both recognizers with the same seeds and traces."""
    gat = run_scenario(replace(scenario, recognizer="gatling"), cache, workers)
    gra = run_scenario(replace(scenario, recognizer="graql"), cache, workers)
    return Comparison(gat, gra)
