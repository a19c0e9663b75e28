import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hierdag import EmptyCandidateSet, build, marginals, predict, prediction_scores
from hierdag.inference import PredictionMode, noisy_or, predict_with_scores

from conftest import random_dag, vec

TOY1_COND = {"animal": 0.9, "vehicle": 0.2, "dog": 0.8, "corgi": 0.7, "car": 0.5, "bus": 0.5}
TOY2_COND = {"mammal": 0.6, "aquatic": 0.5, "whale": 0.9, "dolphin": 0.4}


def naive_marginal(h, cond, s):
    """Direct recursion over parents, no memoization."""
    parents = sorted(h.parents(s))
    if not parents:
        return 1.0
    none = 1.0
    for p in parents:
        none *= 1.0 - naive_marginal(h, cond, p)
    return cond[s] * (1.0 - none)


def naive_score(h, cond, s):
    out = naive_marginal(h, cond, s)
    for c in sorted(h.children(s)):
        out *= 1.0 - cond[c]
    return out


def test_toy1_marginals(toy1):
    cond = vec(toy1, TOY1_COND, default=0.5)
    m = marginals(toy1, cond)
    expected = {
        "entity": 1.0,
        "animal": 0.9,
        "vehicle": 0.2,
        "dog": 0.9 * 0.8,
        "corgi": 0.9 * 0.8 * 0.7,
        "car": 0.2 * 0.5,
        "bus": 0.2 * 0.5,
    }
    for name, v in expected.items():
        assert m[toy1.index(name)] == pytest.approx(v, abs=1e-12)
    assert m[toy1.index("corgi")] == pytest.approx(0.504, abs=1e-12)


def test_ones_fixed_point(toy1, toy2):
    for h in (toy1, toy2):
        np.testing.assert_array_equal(marginals(h, np.ones(len(h))), np.ones(len(h)))


def test_toy2_marginals(toy2):
    m = marginals(toy2, vec(toy2, TOY2_COND, default=0.5))
    assert m[toy2.index("whale")] == pytest.approx(0.72, abs=1e-12)
    assert m[toy2.index("dolphin")] == pytest.approx(0.288, abs=1e-12)


def test_root_condition_ignored(toy1):
    a = marginals(toy1, vec(toy1, TOY1_COND, default=0.01))
    b = marginals(toy1, vec(toy1, TOY1_COND, default=0.99))
    np.testing.assert_array_equal(a, b)


def test_toy1_scores(toy1):
    cond = vec(toy1, TOY1_COND, default=0.5)
    score = prediction_scores(toy1, cond, marginals(toy1, cond))
    expected = {
        "corgi": 0.504,
        "car": 0.1,
        "bus": 0.1,
        "dog": 0.72 * 0.3,
        "animal": 0.9 * 0.2,
        "vehicle": 0.2 * 0.25,
        "entity": 0.1 * 0.8,
    }
    for name, v in expected.items():
        assert round(score[toy1.index(name)], 12) == round(v, 12)


def test_toy2_scores(toy2):
    cond = vec(toy2, TOY2_COND, default=0.5)
    score = prediction_scores(toy2, cond)
    assert round(score[toy2.index("whale")], 12) == round(0.432, 12)
    assert round(score[toy2.index("dolphin")], 12) == round(0.288, 12)


def test_leaf_score_is_marginal(toy1):
    cond = vec(toy1, TOY1_COND, default=0.5)
    m = marginals(toy1, cond)
    s = prediction_scores(toy1, cond)
    for leaf in toy1.leaves:
        assert s[leaf] == m[leaf]


def test_predict_toy(toy1, toy2):
    cond1 = vec(toy1, TOY1_COND, default=0.5)
    assert predict(toy1, cond1, "mlnp") == toy1.index("corgi")
    assert predict(toy1, cond1, PredictionMode.ANP) == toy1.index("corgi")
    node, score = predict_with_scores(toy1, cond1, "mlnp")
    assert score == pytest.approx(0.504, abs=1e-12)
    assert predict(toy2, vec(toy2, TOY2_COND, default=0.5), "mlnp") == toy2.index("whale")


def test_anp_can_pick_inner_node(toy1):
    cond = vec(toy1, {"animal": 0.95, "vehicle": 0.05, "dog": 0.9, "corgi": 0.05, "car": 0.5, "bus": 0.5})
    assert toy1.names[predict(toy1, cond, "anp")] == "dog"
    assert toy1.names[predict(toy1, cond, "mlnp")] in {"corgi", "car", "bus"}


def test_tie_breaks_to_smallest_id():
    h = build(["r", "a", "b", "c"], [("a", "r"), ("b", "r"), ("c", "r")], ["c", "b", "a"])
    cond = np.array([0.5, 0.4, 0.4, 0.4])
    assert predict(h, cond, "mlnp") == 1
    cond = np.array([0.5, 0.3, 0.4, 0.4])
    assert predict(h, cond, "mlnp") == 2


def test_empty_candidates():
    h = build(["r", "a"], [("a", "r")], [])
    with pytest.raises(EmptyCandidateSet):
        predict(h, np.array([0.5, 0.5]), "mlnp")
    assert predict(h, np.array([0.5, 0.5]), "anp") in (0, 1)


def test_batch_matches_single(toy2):
    rng = np.random.default_rng(3)
    cond = rng.uniform(0.01, 0.99, (20, len(toy2)))
    batch = marginals(toy2, cond)
    for row, c in zip(batch, cond):
        np.testing.assert_array_equal(row, marginals(toy2, c))
    preds = predict(toy2, cond, "anp")
    assert [predict(toy2, c, "anp") for c in cond] == preds.tolist()


def test_noisy_or_log_space_agrees():
    p = np.array([[1 - 1e-13, 0.5, 0.3], [0.2, 0.3, 0.4]])
    direct = 1 - np.prod(1 - p, axis=1)
    np.testing.assert_allclose(noisy_or(p), direct, rtol=1e-12, atol=0)
    # long chains of small complements do not underflow to garbage
    many = np.full((1, 400), 1 - 1e-3)
    assert noisy_or(many)[0] == 1.0


def test_oracle_equivalence_random_dags():
    rng = np.random.default_rng(99)
    for _ in range(100):
        n = int(rng.integers(1, 31))
        names, edges, labeled = random_dag(rng, n, p=rng.uniform(0.05, 0.25))
        h = build(names, edges, labeled)
        cond = rng.uniform(1e-7, 1 - 1e-7, n)
        m = marginals(h, cond)
        s = prediction_scores(h, cond, m)
        for v in range(n):
            assert abs(m[v] - naive_marginal(h, cond, v)) <= 1e-12
            assert abs(s[v] - naive_score(h, cond, v)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_structural_invariants(seed, n):
    rng = np.random.default_rng(seed)
    names, edges, labeled = random_dag(rng, n)
    h = build(names, edges, labeled)
    cond = rng.uniform(1e-7, 1 - 1e-7, n)
    cond[rng.random(n) < 0.2] = 1.0
    m = marginals(h, cond)
    for r in h.roots:
        assert m[r] == 1.0
    for s in range(n):
        ps = sorted(h.parents(s))
        if not ps:
            continue
        bound = 1.0 - math.prod(1.0 - m[p] for p in ps)
        assert 0.0 <= m[s] <= bound + 1e-15
        if cond[s] == 1.0:
            assert m[s] == pytest.approx(bound, abs=1e-15)
        elif bound > 0:
            assert m[s] < bound
        if len(ps) == 1:
            assert m[s] <= m[ps[0]]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_anp_dominance(seed, n):
    rng = np.random.default_rng(seed)
    names, edges, labeled = random_dag(rng, n)
    h = build(names, edges, labeled)
    cond = rng.uniform(1e-7, 1 - 1e-7, (40, n))
    _, s_mlnp = predict_with_scores(h, cond, "mlnp")
    p_anp, s_anp = predict_with_scores(h, cond, "anp")
    p_mlnp = predict(h, cond, "mlnp")
    assert (s_anp >= s_mlnp).all()
    labels = rng.choice(np.asarray(h.labeled), size=40)
    assert np.mean(p_anp == labels) <= np.mean(p_mlnp == labels)
    # an ANP hit is always also an MLNP hit
    assert not np.any((p_anp == labels) & (p_mlnp != labels))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 25))
def test_score_monotone_in_own_condition(seed, n):
    rng = np.random.default_rng(seed)
    names, edges, labeled = random_dag(rng, n)
    h = build(names, edges, labeled)
    cond = rng.uniform(1e-7, 1 - 1e-7, n)
    s = int(rng.integers(n))
    before = prediction_scores(h, cond)[s]
    cond[s] = rng.uniform(cond[s], 1.0)
    assert prediction_scores(h, cond)[s] >= before
