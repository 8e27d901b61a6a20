"""Accuracy, macro precision/recall and F-score over recognition episodes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gridworld import Cell


@dataclass(frozen=True)
class EvalEpisode:
    true_goal: Cell
    predicted_goal: Cell
    scores: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    fscore: float
    per_goal: dict[Cell, dict[str, float]]
    n_episodes: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "fscore": self.fscore,
            "n_episodes": self.n_episodes,
            "per_goal": [{"goal": list(g), **m} for g, m in sorted(self.per_goal.items())],
        }


def evaluate(episodes: list[EvalEpisode]) -> EvalReport:
    """One-vs-rest precision and recall per goal, macro-averaged.

    Only goals that are some episode's truth or prediction take part in the
    average. A goal never predicted has precision 0, matching the usual
    zero-division convention. F-score is the harmonic mean of the two macro
    averages.
    """
    if not episodes:
        raise ValueError("cannot evaluate an empty episode list")
    truths = [tuple(e.true_goal) for e in episodes]
    preds = [tuple(e.predicted_goal) for e in episodes]
    labels = sorted(set(truths) | set(preds))
    per_goal = {}
    for g in labels:
        tp = sum(t == g and p == g for t, p in zip(truths, preds))
        n_pred = sum(p == g for p in preds)
        n_true = sum(t == g for t in truths)
        per_goal[g] = {
            "precision": tp / n_pred if n_pred else 0.0,
            "recall": tp / n_true if n_true else 0.0,
            "support": n_true,
        }
    precision = float(np.mean([m["precision"] for m in per_goal.values()]))
    recall = float(np.mean([m["recall"] for m in per_goal.values()]))
    fscore = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    accuracy = sum(t == p for t, p in zip(truths, preds)) / len(episodes)
    return EvalReport(accuracy, precision, recall, fscore, per_goal, len(episodes))


METRICS = ("accuracy", "precision", "recall", "fscore")


def mean_std(reports: list[EvalReport]) -> dict[str, tuple[float, float]]:
    """Mean and population standard deviation of each metric across runs."""
    out = {}
    for name in METRICS:
        vals = np.array([getattr(r, name) for r in reports])
        out[name] = (float(vals.mean()), float(vals.std()))
    return out
