import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from fragtree.closed_forms import harmonic
from fragtree.models import BetaSplitting, Comb, CouponCollector, EwensPitman, SingletonSplit, split_prob
from fragtree.rates import (
    InvalidRateSequence,
    beta_rate_closed_form,
    check_complete_monotonicity,
    check_thinning,
    invert_rates,
    lambda_from_measure,
    rate_lambda,
    rate_table,
    sample_timed,
)
from fragtree.rng import RngState
from fragtree.trees import validate


def test_rate_examples():
    assert rate_lambda(BetaSplitting(0), 5) == 2
    assert rate_lambda(BetaSplitting(-1), 4) == F(11, 6)
    assert rate_lambda(BetaSplitting(math.inf), 3) == F(3, 2)
    assert rate_lambda(BetaSplitting(0), 1) == 0
    assert rate_lambda(BetaSplitting(0), 2, lam2=F(7, 3)) == F(7, 3)


def test_rate_scales_with_lambda_two():
    for n in range(2, 10):
        assert rate_lambda(BetaSplitting(F(1, 2)), n, 5) == 5 * rate_lambda(BetaSplitting(F(1, 2)), n)


def test_rate_arguments():
    with pytest.raises(ValueError):
        rate_lambda(BetaSplitting(0), 0)
    with pytest.raises(ValueError):
        rate_lambda(BetaSplitting(0), 3, lam2=0)


@pytest.mark.parametrize("beta", [F(-3, 2), F(-1), F(-1, 2), 0, 1, 5, F(-7, 4), F(11, 3)])
def test_closed_form_equals_recursion(beta):
    model = BetaSplitting(beta)
    for n in range(2, 21):
        lam = rate_lambda(model, n)
        assert beta_rate_closed_form(model, n) == lam
        # the recursion itself
        if n > 2:
            assert lam * (1 - split_prob(model, (n - 1, 1))) == rate_lambda(model, n - 1)


def test_lambda_three_binary_and_multifurcating():
    for model in [BetaSplitting(F(-3, 2)), BetaSplitting(3), BetaSplitting(math.inf), Comb(), CouponCollector(2)]:
        assert rate_lambda(model, 3) == F(3, 2)
    for model in [EwensPitman(F(1, 2), F(1, 2)), EwensPitman(0, 1), CouponCollector(3), SingletonSplit(),
                  EwensPitman(F(-1, 2), F(3, 2))]:
        assert rate_lambda(model, 3) <= F(3, 2)
    assert rate_lambda(SingletonSplit(), 3) == 1


@pytest.mark.parametrize("model", [BetaSplitting(0), BetaSplitting(F(-3, 2)), BetaSplitting(F(2, 5)), Comb()])
def test_inversion_roundtrip(model):
    table = invert_rates(rate_table(model, 15))
    for n in range(2, 16):
        for k in range(1, n):
            assert table[n][k] == split_prob(model, (k, n - k))


def test_inversion_first_column():
    lam = rate_table(BetaSplitting(2), 9)
    lam[1] = 0
    table = invert_rates({n: v for n, v in lam.items() if n >= 2})
    for n in range(3, 10):
        assert table[n][1] == (lam[n] - lam[n - 1]) / lam[n]
    assert table[2] == {1: 1}


def test_inversion_rejects_power_rates():
    with pytest.raises(InvalidRateSequence, match="3/2"):
        invert_rates([1.0, math.sqrt(2.0)])
    with pytest.raises(InvalidRateSequence) as info:
        invert_rates([F(1), F(7, 5)])
    assert info.value.witness["n"] == 3


def test_inversion_rejects_negative_probabilities():
    # symmetric at n = 3 but p(1,3) < 0 at n = 4
    with pytest.raises(InvalidRateSequence, match="< 0"):
        invert_rates([F(1), F(3, 2), F(7, 5)])


def test_inversion_float_tolerance():
    lam = [float(x) for x in rate_table(BetaSplitting(-1), 8).values()]
    table = invert_rates(lam)
    assert table[6][2] == pytest.approx(float(split_prob(BetaSplitting(-1), (2, 4))), rel=1e-9)


def test_complete_monotonicity_examples():
    assert check_complete_monotonicity(rate_table(BetaSplitting(-1), 26), order=6, n_max=20).passed
    assert check_complete_monotonicity(rate_table(BetaSplitting(math.inf), 26), order=6, n_max=20).passed
    report = check_complete_monotonicity({n: F(n * n) for n in range(2, 27)}, order=6, n_max=20)
    assert not report.passed
    assert report.details["first_failing_order"] == 2
    assert report.witness == {"order": 2, "n": 1, "difference": 1}


def test_complete_monotonicity_needs_enough_terms():
    with pytest.raises(ValueError):
        check_complete_monotonicity([1, 2, 3], order=6, n_max=20)


@given(st.fractions(min_value=F(-19, 10), max_value=20, max_denominator=12))
def test_rates_completely_monotone(beta):
    assert check_complete_monotonicity(rate_table(BetaSplitting(beta), 18), order=6, n_max=12).passed


@pytest.mark.parametrize(
    "model", [BetaSplitting(F(-1, 2)), BetaSplitting(6), Comb(), EwensPitman(F(1, 2), F(1, 2)), CouponCollector(3)]
)
def test_thinning(model):
    assert check_thinning(model, 10).passed


def test_measure_rates():
    assert lambda_from_measure(0, 5) == pytest.approx(2.0, rel=1e-8)
    assert lambda_from_measure(-1.5, 3) == pytest.approx(1.5, rel=1e-8)
    assert lambda_from_measure(0.7, 2, lam2=3.0) == 3.0
    assert lambda_from_measure(1, 1) == 0.0
    with pytest.raises(ValueError):
        lambda_from_measure(-2, 4)


@pytest.mark.parametrize("beta", ["-19/10", "-1", "1/3", "40"])
def test_measure_rates_match_recursion(beta):
    model = BetaSplitting(beta)
    for n in range(2, 16):
        assert lambda_from_measure(beta, n) == pytest.approx(float(rate_lambda(model, n)), rel=1e-9)


def test_harmonic_rates():
    for n in range(2, 12):
        assert rate_lambda(BetaSplitting(-1), n) == harmonic(n - 1)


def test_timed_tree():
    rng = RngState(3)
    total, draws = 0.0, 100_000
    for tt in sample_timed(BetaSplitting(0), 3, 1, rng, size=draws):
        total += tt.lengths[tt.tree.labels]
    mean = total / draws
    # exponential with rate 3/2: sd of the mean is (2/3)/sqrt(draws)
    assert abs(mean - 2 / 3) <= 3 * (2 / 3) / math.sqrt(draws)


def test_timed_tree_lengths():
    tt = sample_timed(EwensPitman(F(1, 2), F(1, 2)), 12, F(2), RngState(9))
    assert validate(tt.tree)
    internal = {v.labels for v in tt.tree.vertices() if v.children}
    assert set(tt.lengths) == internal
    assert all(0 < x < math.inf for x in tt.lengths.values())
