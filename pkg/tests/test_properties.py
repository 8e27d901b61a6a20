"""Randomized invariants; 1000 cases per property."""
import json
import math
from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from odgr.gridworld import Action, make_empty
from odgr.harness import NewGoalSet, Observe, Scenario, run_scenario
from odgr.metrics import EvalEpisode, evaluate
from odgr.qlearn import QTable, TrainConfig, greedy_actions
from odgr.recognize import kl, kl_distance, pseudo_policy
from odgr.traces import Observation, ObservationTrace, subsample
from odgr.transfer import Aggregation, aggregate, cosine_similarity, scale_qtable

CASES = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])

SPEC = make_empty(5)  # 3x3 playable, 9 states
S = SPEC.n_states

coord = st.integers(-20, 20)
point = st.tuples(coord, coord)
qvalues = arrays(np.float64, (S, 4), elements=st.floats(0, 1, allow_nan=False))
signed_qvalues = arrays(np.float64, (S, 4), elements=st.floats(-1, 1, allow_nan=False))


@CASES
@given(point, point, point, st.integers(1, 50))
def test_cosine_bounds_symmetry_scaling(s, gb, gd, k):
    c = cosine_similarity(s, gb, gd)
    assert -1.0 <= c <= 1.0
    assert c == cosine_similarity(s, gd, gb)
    # scale both displacements about s by k
    gb2 = tuple(s[i] + k * (gb[i] - s[i]) for i in range(2))
    gd2 = tuple(s[i] + k * (gd[i] - s[i]) for i in range(2))
    assert math.isclose(cosine_similarity(s, gb2, gd2), c, abs_tol=1e-12)


@CASES
@given(
    st.lists(qvalues, min_size=1, max_size=4),
    st.data(),
    st.floats(0.01, 100),
    st.sampled_from(list(Aggregation)),
)
def test_aggregation_commutes_with_positive_scaling(tables, data, c, method):
    k = len(tables)
    w = data.draw(arrays(np.float64, (S, k), elements=st.floats(-1, 1, allow_nan=False)))
    qs = [QTable(v, SPEC, (1, 1)) for v in tables]
    scaled = [QTable(c * v, SPEC, (1, 1)) for v in tables]
    a = aggregate(qs, w, method).qtable.values
    b = aggregate(scaled, w, method).qtable.values
    assert np.allclose(b, c * a, rtol=1e-9, atol=1e-12 * max(1.0, np.abs(c * a).max()))
    for i in range(S):
        if np.ptp(a[i]) > 1e-6 * max(1.0, np.abs(a[i]).max()):
            assert greedy_actions(a[i], 1e-9) == greedy_actions(b[i], 1e-9)


@CASES
@given(signed_qvalues, st.data(), st.sampled_from([Aggregation.NORMALIZE, Aggregation.SOFTMAX_WEIGHTS, Aggregation.MAX]))
def test_single_table_aggregation_is_identity(values, data, method):
    w = data.draw(arrays(np.float64, (S, 1), elements=st.floats(-5, 5, allow_nan=False)))
    q = QTable(values, SPEC, (1, 1))
    out = aggregate([q], w, method).qtable.values
    assert np.allclose(out, values, rtol=0, atol=1e-12)


@CASES
@given(signed_qvalues, st.floats(0.05, 5))
def test_scaling_keeps_greedy_sets(values, temperature):
    q = QTable(values, SPEC, (1, 1))
    out = scale_qtable(q, temperature).values
    for i in range(S):
        assert greedy_actions(values[i], 0) == greedy_actions(out[i], 0)
    assert np.isfinite(out).all()


simplex = arrays(np.float64, 4, elements=st.floats(1e-6, 1)).map(lambda v: v / v.sum())


@CASES
@given(simplex, simplex)
def test_kl_nonnegative_zero_on_equal(p, q):
    assert kl(p, q) >= -1e-12
    assert abs(kl(p, p)) <= 1e-12


@st.composite
def traces(draw, min_len=1, max_len=60):
    n = draw(st.integers(min_len, max_len))
    gaps = draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))
    steps = np.cumsum(gaps) - gaps[0]
    states = draw(st.lists(st.sampled_from(SPEC.states), min_size=n, max_size=n))
    actions = draw(st.lists(st.sampled_from(list(Action)), min_size=n, max_size=n))
    obs = tuple(Observation(s, a, int(k)) for s, a, k in zip(states, actions, steps))
    return ObservationTrace(obs, SPEC.ident)


@CASES
@given(traces(), qvalues, st.sampled_from(["ratio", "softmax"]))
def test_kl_distance_nonnegative(trace, values, kind):
    q = QTable(values, SPEC, (3, 3))
    assert kl_distance(q, pseudo_policy(trace), policy=kind) >= 0


@CASES
@given(traces(), st.integers(1, 10**6), st.sampled_from(["random", "prefix"]), st.integers(0, 2**32 - 1))
def test_subsample_cardinality_and_subsequence(trace, k, mode, seed):
    fraction = k / 10**6
    sub = subsample(trace, fraction, mode, seed)
    # exact decimal arithmetic as the reference
    assert len(sub) == math.ceil(Fraction(k, 10**6) * len(trace))
    it = iter(trace.observations)
    assert all(any(o == x for x in it) for o in sub.observations)
    if mode == "prefix":
        assert sub.observations == trace.observations[: len(sub)]


labels = st.sampled_from([(1, 1), (2, 2), (3, 3), (1, 3)])


@CASES
@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=30), st.randoms())
def test_report_permutation_invariant(pairs, rnd):
    eps = [EvalEpisode(t, p) for t, p in pairs]
    shuffled = eps[:]
    rnd.shuffle(shuffled)
    a, b = evaluate(eps).to_dict(), evaluate(shuffled).to_dict()
    assert json.dumps(a) == json.dumps(b)
    for k in ("accuracy", "precision", "recall", "fscore"):
        assert 0 <= a[k] <= 1
    assert a["fscore"] <= max(a["precision"], a["recall"]) + 1e-12


TINY = TrainConfig(episodes=300)
CACHE: dict = {}


@st.composite
def event_lists(draw):
    events = []
    for _ in range(draw(st.integers(1, 3))):
        events.append(NewGoalSet(sample=draw(st.integers(1, 3))))
        for _ in range(draw(st.integers(0, 2))):
            events.append(Observe(draw(st.sampled_from([0.1, 0.3, 0.5, 1.0])), draw(st.sampled_from(["random", "prefix"]))))
    return events


@CASES
@given(event_lists(), st.data(), st.integers(0, 50), st.sampled_from(["gatling", "graql"]))
def test_scenario_prefix_equivalence(events, data, seed, recognizer):
    cut = data.draw(st.integers(1, len(events)))
    common = dict(domain={"kind": "empty", "size": 5}, train_cfg=TINY, seed=seed, recognizer=recognizer, runs=1)
    full = run_scenario(Scenario(events=tuple(events), **common), CACHE)
    part = run_scenario(Scenario(events=tuple(events[:cut]), **common), CACHE)
    f, p = full.answers_dict(), part.answers_dict()
    for run_f, run_p in zip(f, p):
        assert len(run_p) <= len(run_f)
        for i, group in enumerate(run_p):
            n = len(group["answers"])
            ref = {"goals": run_f[i]["goals"], "answers": run_f[i]["answers"][:n]}
            assert json.dumps(group) == json.dumps(ref)
            if i < len(run_p) - 1:
                assert n == len(run_f[i]["answers"])
