import numpy as np
import pytest
from sklearn.metrics import accuracy_score, precision_score, recall_score

from odgr.metrics import EvalEpisode, evaluate, mean_std

A, B, C = (1, 1), (2, 2), (3, 3)


def eps(pairs):
    return [EvalEpisode(t, p) for t, p in pairs]


def test_all_correct():
    r = evaluate(eps([(A, A), (B, B), (C, C)]))
    assert (r.accuracy, r.precision, r.recall, r.fscore) == (1.0, 1.0, 1.0, 1.0)


def test_always_predict_a():
    r = evaluate(eps([(A, A), (B, A), (A, A), (B, A)]))
    assert r.accuracy == 0.5
    assert r.per_goal[B]["precision"] == 0.0
    assert r.precision == pytest.approx(0.25) and r.recall == pytest.approx(0.5)


def test_nine_of_ten():
    r = evaluate(eps([(A, A)] * 5 + [(B, B)] * 4 + [(B, C)]))
    assert r.accuracy == pytest.approx(0.9)


def test_empty():
    with pytest.raises(ValueError):
        evaluate([])


@pytest.mark.parametrize("seed", range(30))
def test_matches_sklearn(seed):
    rng = np.random.default_rng(seed)
    labels = [(i, i) for i in range(rng.integers(2, 6))]
    n = int(rng.integers(1, 25))
    truths = [labels[i] for i in rng.integers(len(labels), size=n)]
    preds = [labels[i] for i in rng.integers(len(labels), size=n)]
    r = evaluate(eps(zip(truths, preds)))
    enc = {g: i for i, g in enumerate(labels)}
    yt, yp = [enc[g] for g in truths], [enc[g] for g in preds]
    used = sorted(set(yt) | set(yp))
    assert r.accuracy == pytest.approx(accuracy_score(yt, yp))
    assert r.precision == pytest.approx(precision_score(yt, yp, labels=used, average="macro", zero_division=0))
    assert r.recall == pytest.approx(recall_score(yt, yp, labels=used, average="macro", zero_division=0))
    assert r.fscore <= max(r.precision, r.recall) + 1e-12


def test_mean_std_population():
    reports = [evaluate(eps([(A, A), (B, B)]))] * 9 + [evaluate(eps([(A, A), (B, A)]))]
    stats = mean_std(reports)
    assert stats["accuracy"] == pytest.approx((0.95, 0.15))


def test_to_dict():
    d = evaluate(eps([(A, A), (B, A)])).to_dict()
    assert d["n_episodes"] == 2 and [g["goal"] for g in d["per_goal"]] == [[1, 1], [2, 2]]
