import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from fragtree.measures import (
    BetaMeasure,
    DiscreteMeasure,
    PaintboxEstimate,
    PointMass,
    beta_moment,
    combine_estimates,
    factorization_check,
    gibbs_link_check,
    moment_matrix,
    paintbox_exact,
    paintbox_moment,
    paintbox_normalizer,
    quad_moment,
)
from fragtree.models import BetaSplitting, CouponCollector, EwensPitman, split_prob
from fragtree.numeric import UnsupportedOperation
from fragtree.rng import RngState


def test_beta_moment_examples():
    assert beta_moment(0, 1, 1) == pytest.approx(1 / 6, rel=1e-14)
    assert beta_moment(math.inf, 2, 3) == 1 / 32
    assert beta_moment(-0.5, 1, 2) == pytest.approx(math.pi / 16, rel=1e-13)


@pytest.mark.parametrize("beta, i, j", [(2.7, 4, 4), (-1.5, 1, 1), (0, 1, 1), (-1.9, 1, 3), (30, 2, 9)])
def test_quadrature_matches_gamma(beta, i, j):
    assert quad_moment(beta, i, j, tol=1e-9) == pytest.approx(beta_moment(beta, i, j), rel=1e-9)


@given(st.floats(-1.95, 20), st.integers(1, 10), st.integers(1, 10))
def test_quadrature_property(beta, i, j):
    assert quad_moment(beta, i, j) == pytest.approx(beta_moment(beta, i, j), rel=1e-9)


@pytest.mark.parametrize("measure", [BetaMeasure(0), BetaMeasure(-1.5), PointMass(), DiscreteMeasure(["1/4", "3/4"])])
def test_moment_matrix_symmetric(measure):
    M = moment_matrix(measure, 8)
    for (i, j), v in M.items():
        assert v == pytest.approx(M[j, i], rel=1e-14)


def test_factorization_beta_passes():
    for beta in (0, -1.5, -0.5, 2.7):
        report = factorization_check(BetaMeasure(beta), 10, 1e-9)
        assert report.passed, report.details


def test_factorization_point_mass_is_literal():
    for form in ("gibbs", "cross", "product"):
        report = factorization_check(PointMass(), 10, 0, form)
        assert report.passed and report.details["max_violation"] == 0
    assert PointMass().moment(3, 4) == F(1, 2**7)


def test_factorization_two_point_fails():
    report = factorization_check(DiscreteMeasure(["1/4", "3/4"], ["1/2", "1/2"]), 6, 1e-9)
    assert not report.passed
    assert report.details["max_violation"] > 1e-3


def test_literal_forms_fail_for_beta():
    assert not factorization_check(BetaMeasure(0), 10, 1e-9, "cross").passed
    assert not factorization_check(BetaMeasure(0), 10, 1e-9, "product").passed


def test_unknown_form():
    with pytest.raises(ValueError):
        factorization_check(PointMass(), 4, form="rank")


def test_discrete_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure([0, "1/2"])
    assert DiscreteMeasure(["1/4", "3/4"]).is_symmetric()
    assert not DiscreteMeasure(["1/4", "1/2"]).is_symmetric()


@pytest.mark.parametrize("beta", ["-3/2", "-1/2", "0", "5/2"])
def test_gibbs_link(beta):
    assert gibbs_link_check(beta, 14).passed


def test_coupon_paintbox_is_exact():
    model = CouponCollector(3)
    est = paintbox_moment(model, (1, 1, 1))
    assert est.estimate == pytest.approx(2 / 9, rel=1e-15) and est.stderr == 0
    assert paintbox_normalizer(model, 3) == F(8, 9)
    assert F(2, 9) / paintbox_normalizer(model, 3) == split_prob(model, (1, 1, 1)) == F(1, 4)


def test_dirichlet_exact_value():
    # Dirichlet(1,1,1): E[s1 s2 s3] = 1/60, over 3! assignments of blocks to atoms
    model = EwensPitman(-1, 3)
    assert paintbox_exact(model, (1, 1, 1)) == F(6, 60)


def test_stick_breaking_normalizer():
    # P(all n draws on one atom) under PD(alpha, theta) is (1-a)_{n-1}/(theta+1)_{n-1}
    model = EwensPitman(F(1, 2), F(1, 2))
    assert paintbox_normalizer(model, 2) == 1 - F(1, 2) / F(3, 2)


@pytest.mark.parametrize(
    "model, comp",
    [
        (EwensPitman(F(1, 2), F(1, 2)), (1, 2)),
        (EwensPitman(0, 1), (2, 2)),
        (EwensPitman(-1, 3), (1, 1, 1)),
        (EwensPitman(F(-1, 2), F(3, 2)), (2, 1)),
        (EwensPitman(F(1, 4), 2), (1, 1, 2)),
    ],
)
def test_paintbox_estimates(model, comp):
    est = paintbox_moment(model, comp, samples=200_000, rng=RngState(17))
    assert est.within(4), est


def test_paintbox_workers_deterministic():
    model = EwensPitman(0, 1)
    a = paintbox_moment(model, (1, 2), samples=40_000, rng=RngState(5), workers=4)
    b = paintbox_moment(model, (1, 2), samples=40_000, rng=RngState(5), workers=4)
    assert a == b
    assert a.samples == 40_000


def test_paintbox_unsupported_regimes():
    for model in (EwensPitman(F(1, 2), F(-3, 4)), EwensPitman(F(1, 3), F(-2, 3)), BetaSplitting(0)):
        with pytest.raises(UnsupportedOperation):
            paintbox_moment(model, (1, 2), samples=10)


def test_combine_estimates_matches_pooled_sample():
    vals = [0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]

    def est(xs):
        n = len(xs)
        m = sum(xs) / n
        var = sum((x - m) ** 2 for x in xs) / (n - 1)
        return PaintboxEstimate(m, math.sqrt(var / n), n, F(1, 2), "test")

    pooled = combine_estimates([est(vals[:3]), est(vals[3:])])
    whole = est(vals)
    assert pooled.estimate == pytest.approx(whole.estimate)
    assert pooled.stderr == pytest.approx(whole.stderr)
