import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from medos.corpus import Product, QAPair, Review
from medos.evaluation import (
    Judgment,
    best_worst_scores,
    corpus_rouge,
    fleiss_kappa,
    paired_t_test,
    rouge_l,
    rouge_n,
    rouge_tokens,
    score,
    source_overlap,
)

words = st.lists(st.sampled_from(["a", "b", "c", "d", "e"]), min_size=1, max_size=12).map(" ".join)


def _p(pid, refs, desc=None, qa=()):
    return Product(pid, "toys", (Review("r0", "good cheap toy"),), desc, qa, tuple(refs) if refs is not None else None)


def test_tokenisation():
    assert rouge_tokens("Great, GREAT price!! 5-star") == ["great", "great", "price", "5", "star"]
    assert rouge_tokens("  ...  ") == []


def test_empty_side_scores_zero():
    assert rouge_n("", "a b", 1).f1 == 0.0
    assert rouge_l("a b", "").f1 == 0.0
    with pytest.raises(ValueError):
        rouge_n("a", "a", 0)
    with pytest.raises(ValueError):
        score("a", "a", "R9x")


@settings(max_examples=100, deadline=None)
@given(words, words)
def test_rouge_f1_symmetric_and_bounded(a, b):
    for v in ("R1", "R2", "RL"):
        s, t = score(a, b, v), score(b, a, v)
        assert s.f1 == pytest.approx(t.f1, abs=1e-12)
        assert s.precision == pytest.approx(t.recall, abs=1e-12)
        assert 0.0 <= s.f1 <= 1.0


@settings(max_examples=50, deadline=None)
@given(words)
def test_rouge_identity(a):
    assert score(a, a, "R1").f1 == 1.0
    assert score(a, a, "RL").f1 == 1.0
    if len(a.split()) >= 2:
        assert score(a, a, "R2").f1 == 1.0


@settings(max_examples=50, deadline=None)
@given(words, words)
def test_rouge_l_not_above_rouge_1(a, b):
    # every LCS token is a matched unigram
    assert rouge_l(a, b).f1 <= rouge_n(a, b, 1).f1 + 1e-12


def test_corpus_rouge_max_and_mean():
    products = [_p("A", ["the cat sat", "a dog ran"]), _p("B", [])]
    preds = {"A": "the cat ran", "B": "anything"}
    hi = corpus_rouge(preds, products, "R1", "max")
    mean = corpus_rouge(preds, products, "R1", "mean")
    r1 = [rouge_n("the cat ran", r, 1).f1 for r in ("the cat sat", "a dog ran")]
    assert hi.f1("R1") == pytest.approx(max(r1))
    assert mean.f1("R1") == pytest.approx(sum(r1) / 2)
    assert hi.skipped == ["B"] and hi.reference_counts == {"A": 2}
    with pytest.raises(ValueError):
        corpus_rouge(preds, products, "R1", "median")


def test_corpus_score_is_mean_over_products():
    products = [_p("A", ["a b"]), _p("B", ["a b c d"])]
    rep = corpus_rouge({"A": "a b", "B": "a b"}, products, ["R1", "RL"])
    assert rep.f1("R1") == pytest.approx((1.0 + 2 / 3) / 2)
    assert [r["product_id"] for r in rep.records()] == ["A", "B"]
    assert "R1" in rep.table() and "RL" in rep.table()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=20))
def test_t_test_matches_scipy_and_is_antisymmetric(pairs):
    a = [x for x, _ in pairs]
    b = [y for _, y in pairs]
    res = paired_t_test(a, b)
    if res.degenerate:
        assert res.t is None and res.p is None
        return
    ref = stats.ttest_rel(a, b)
    if not math.isfinite(ref.statistic):
        return
    assert res.t == pytest.approx(ref.statistic, rel=1e-6, abs=1e-9)
    assert res.p == pytest.approx(ref.pvalue, rel=1e-6, abs=1e-12)
    back = paired_t_test(b, a)
    assert back.t == pytest.approx(-res.t) and back.p == pytest.approx(res.p)


def test_t_test_degenerate_and_errors():
    res = paired_t_test([1, 2, 3], [0, 1, 2])
    assert res.degenerate and res.df == 2
    with pytest.raises(ValueError):
        paired_t_test([1], [2])
    with pytest.raises(ValueError):
        paired_t_test([1, 2], [1, 2, 3])


def test_kappa_perfect_and_degenerate():
    assert float(fleiss_kappa([["a", "a"], ["b", "b"], ["a", "a"]])) == pytest.approx(1.0)
    res = fleiss_kappa([["a", "a"], ["a", "a"]])
    assert res.kappa is None and res.degenerate
    with pytest.raises(ValueError):
        float(res)
    with pytest.raises(ValueError):
        fleiss_kappa([["a", "b"], ["a"]])
    with pytest.raises(ValueError):
        fleiss_kappa([["a", "z"]], categories=["a", "b"])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(0, 2), min_size=3, max_size=3), min_size=2, max_size=10), st.permutations([0, 1, 2]))
def test_kappa_invariant_to_relabelling_and_bounded(rows, perm):
    a = fleiss_kappa(rows)
    b = fleiss_kappa([[perm[x] for x in r] for r in rows])
    assert (a.kappa is None) == (b.kappa is None)
    if a.kappa is not None:
        assert a.kappa == pytest.approx(b.kappa, abs=1e-12)
        assert a.kappa <= 1.0 + 1e-12


def test_best_worst_scores():
    js = [
        Judgment(("m1", "m2", "m3"), "m1", "m3"),
        {"models": ["m1", "m2", "m3"], "best": "m2", "worst": "m3"},
        Judgment(("m1", "m2"), "m1", "m1"),
        Judgment(("m1", "m2"), "m4", "m1"),
    ]
    scores, rejected = best_worst_scores(js)
    assert scores == {"m1": 0.5, "m2": 0.5, "m3": -1.0}
    assert [r["index"] for r in rejected] == [2, 3]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.permutations(["x", "y", "z"]), min_size=1, max_size=15))
def test_best_worst_bounded_and_zero_sum(orders):
    scores, rejected = best_worst_scores(Judgment(tuple(o), o[0], o[-1]) for o in orders)
    assert not rejected
    assert all(-1.0 <= v <= 1.0 for v in scores.values())
    assert sum(scores.values()) == pytest.approx(0.0, abs=1e-12)


def test_source_overlap():
    products = [
        _p("A", None, desc="red toy", qa=(QAPair("is it red?", "yes"),)),
        _p("B", None),
    ]
    ov = source_overlap({"A": "good red toy", "B": "cheap toy"}, products)
    assert ov.counts == {"reviews": 2, "description": 1, "qa": 1}
    assert ov.means["description"]["recall"] == 1.0
    assert source_overlap({"B": "x"}, products[1:]).means["description"] is None
    assert np.isclose(ov.means["reviews"]["precision"], (2 / 3 + 2 / 2) / 2)
