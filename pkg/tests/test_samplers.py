import math
from collections import Counter
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from conftest import frag_trees
from fragtree.enumeration import enum_binary
from fragtree.models import BetaSplitting, Comb, CouponCollector, EwensPitman, RawGibbs, SingletonSplit, tree_prob
from fragtree.numeric import UnsupportedOperation
from fragtree.rng import RngState
from fragtree.samplers import (
    Categorical,
    attach,
    attachment_distribution,
    branching_law,
    empirical_law,
    grow,
    growth_law,
    restriction_law,
    sample_branching,
    sample_growth,
    tv_distance,
)
from fragtree.trees import FragTree, restrict, validate

LEAF = FragTree.leaf(1)
PAIR = FragTree.from_nested([1, 2])
MODELS = [BetaSplitting(F(-3, 2)), BetaSplitting(0), BetaSplitting(math.inf), Comb(), EwensPitman(F(1, 2), 0),
          EwensPitman(F(-1, 2), F(3, 2)), CouponCollector(3), SingletonSplit()]


def _within(count, total, p, k=3):
    sd = math.sqrt(total * p * (1 - p))
    return abs(count - total * p) <= k * sd


def test_n_two_is_forced():
    for model in (BetaSplitting(0), Comb()):
        assert set(sample_branching(model, 2, RngState(1), size=20)) == {PAIR}
    for model in MODELS:
        assert grow(model, LEAF, RngState(3)) == PAIR


def test_branching_uniform_n4():
    total = 150_000
    counts = Counter(sample_branching(BetaSplitting(F(-3, 2)), 4, RngState(11), size=total))
    assert len(counts) == 15
    assert all(_within(c, total, 1 / 15) for c in counts.values())


def test_branching_yule_n3():
    total = 30_000
    counts = Counter(sample_branching(BetaSplitting(0), 3, RngState(5), size=total))
    assert len(counts) == 3
    assert all(_within(c, total, 1 / 3) for c in counts.values())


def test_branching_refuses_multifurcating_models():
    with pytest.raises(UnsupportedOperation):
        sample_branching(EwensPitman(F(1, 2), 0), 4, RngState(0))


def test_growth_star_frequency():
    total = 10**6
    star = FragTree.from_nested([1, 2, 3])
    trees = sample_growth(EwensPitman(F(1, 2), 0), 3, RngState(2024), size=total)
    assert _within(sum(t == star for t in trees), total, 2 / 5)


def test_uniform_rule_attachment():
    for n in range(1, 7):
        for t in enum_binary(n):
            dist = attachment_distribution(BetaSplitting(F(-3, 2)), t)
            assert not dist.to
            assert set(dist.below.values()) == {F(1, 2 * n - 1)}


@pytest.mark.parametrize("model", [BetaSplitting(F(-1, 2)), BetaSplitting(7), Comb(), CouponCollector(2)])
def test_pair_attachment_is_uniform(model):
    dist = attachment_distribution(model, PAIR, "ratio")
    assert sorted(dist.below.values()) == [F(1, 3)] * 3


def test_ewens_pitman_pair_attachment():
    for method in ("gibbs", "ratio"):
        dist = attachment_distribution(EwensPitman(F(1, 2), 0), PAIR, method)
        assert dist.below == {0b11: F(1, 5), 0b01: F(1, 5), 0b10: F(1, 5)}
        assert dist.to == {0b11: F(2, 5)}


def test_inconsistent_rule_is_rejected():
    # every binary rule is consistent up to three leaves
    assert attachment_distribution(RawGibbs([1, 1, 2, 3, 5, 8]), FragTree.from_nested([[1, 2], 3])).total() == 1
    t = FragTree.from_nested([[[1, 2], 3], 4])
    with pytest.raises(ValueError, match="not consistent"):
        attachment_distribution(RawGibbs([1, 1, 2, 3, 5, 8]), t)


@pytest.mark.parametrize("model", MODELS)
def test_growth_law_equals_branching_law(model):
    for n in range(1, 6):
        assert growth_law(model, n) == branching_law(model, n)
    if model.gibbs:
        assert growth_law(model, 5, "ratio") == growth_law(model, 5, "gibbs")


@pytest.mark.parametrize("model", MODELS)
def test_projective_consistency(model):
    for n in range(2, 6):
        assert restriction_law(branching_law(model, n), range(1, n)) == branching_law(model, n - 1)


def test_deterministic_given_seed():
    a = sample_growth(BetaSplitting(0), 12, RngState(42), size=5)
    b = sample_growth(BetaSplitting(0), 12, RngState(42), size=5)
    assert a == b
    assert sample_branching(BetaSplitting(0), 12, 7) == sample_branching(BetaSplitting(0), 12, 7)


def test_default_seed_from_environment(monkeypatch):
    monkeypatch.setenv("FRAGTREE_SEED", "99")
    a = sample_growth(BetaSplitting(1), 10)
    monkeypatch.setenv("FRAGTREE_SEED", "99")
    assert sample_growth(BetaSplitting(1), 10) == a


@given(frag_trees(max_n=8), st.integers(0, 2**32 - 1), st.sampled_from(MODELS[:3] + MODELS[4:7]))
def test_grow_extends_the_tree(t, seed, model):
    if not model.binary or t.is_binary():
        if tree_prob(model, t) == 0:
            return
        u = grow(model, t, RngState(seed))
        assert validate(u)
        assert u.size == t.size + 1
        assert restrict(u, t.members) == t


def test_attach_sites():
    t = FragTree.from_nested([[1, 2], 3])
    assert attach(t, "below", 0b11) == FragTree.from_nested([[[1, 2], 4], 3])
    assert attach(t, "to", 0b111) == FragTree.from_nested([[1, 2], 3, 4])
    with pytest.raises(ValueError):
        attach(t, "to", 0b100)


def test_categorical_exact_and_float():
    rng = RngState(0)
    cat = Categorical("abc", [F(1, 6), F(0), F(5, 6)])
    draws = Counter(cat.draw(rng) for _ in range(60_000))
    assert "b" not in draws
    assert _within(draws["a"], 60_000, 1 / 6)
    fcat = Categorical("xy", [0.25, 0.75])
    draws = Counter(fcat.draw(rng) for _ in range(40_000))
    assert _within(draws["x"], 40_000, 0.25)


def test_growth_matches_branching_in_distribution():
    n, total = 4, 60_000
    exact = {t: float(p) for t, p in branching_law(BetaSplitting(0), n).items()}
    emp = empirical_law(sample_growth(BetaSplitting(0), n, RngState(8), size=total))
    # 15 outcomes at 6e4 draws: expected TV about 0.01
    assert tv_distance(emp, exact) < 0.02


def test_tv_distance():
    assert tv_distance({"a": 1}, {"b": 1}) == 1
    assert tv_distance({"a": F(1, 2), "b": F(1, 2)}, {"a": F(1, 4), "b": F(3, 4)}) == F(1, 4)


def test_n_bounds():
    with pytest.raises(ValueError):
        sample_growth(BetaSplitting(0), 0)
    with pytest.raises(ValueError):
        sample_growth(BetaSplitting(0), 65)
    assert sample_growth(BetaSplitting(0), 64, RngState(1)).size == 64
