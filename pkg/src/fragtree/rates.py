"""Split rates of the continuous-time embedding.

A consistent splitting rule becomes a continuous-time fragmentation when a
block of size ``n`` splits at rate ``lambda_n``.  Restriction from ``[n+1]``
to ``[n]`` hides exactly the splits that peel off the new leaf, so the rates
must satisfy ``lambda_{n+1} (1 - p(n, 1)) = lambda_n``.  Only ``lambda_2``
is free.  Conversely a rate sequence determines the binary rule through an
alternating sum, which is how :func:`invert_rates` works.
"""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Mapping, Sequence

from scipy import integrate

from .models import BetaSplitting, GibbsModel, SplittingRule
from .numeric import CheckReport, Scalar, UnsupportedOperation, compositions, fmt, is_exact, parse_param
from .rng import as_rng
from .samplers import GrowthChain, _check_n
from .trees import FragTree

__all__ = [
    "InvalidRateSequence",
    "rate_lambda",
    "rate_table",
    "beta_rate_closed_form",
    "invert_rates",
    "check_complete_monotonicity",
    "check_thinning",
    "lambda_from_measure",
    "TimedTree",
    "sample_timed",
]


class InvalidRateSequence(ValueError):
    """Raised by :func:`invert_rates`; ``witness`` holds the offending entry."""

    def __init__(self, message: str, witness: dict):
        super().__init__(f"not a valid rate sequence: {message}")
        self.witness = witness


_lock = threading.Lock()
_unit_rates: dict[SplittingRule, list[Scalar]] = {}


def _unit(model: SplittingRule, n: int) -> Scalar:
    """``lambda_n / lambda_2`` by the recursion, memoized per model."""
    with _lock:
        table = _unit_rates.setdefault(model, [model.zero, model.zero, model.one])
        while len(table) <= n:
            m = len(table) - 1
            stay = 1 - model._split_prob((m, 1))
            if not stay:
                raise ZeroDivisionError(f"p({m}, 1) = 1 under {model!r}; rates blow up")
            table.append(table[m] / stay)
        return table[n]


def beta_rate_closed_form(beta, n: int, lam2=1) -> Scalar:
    """``lambda_2 Z(n) Gamma(4+2b) / Gamma(n+2+2b)`` for finite ``beta``.

    The Gamma ratio is evaluated as the product ``1 / prod_{i=0}^{n-3} (4 + 2b + i)``
    so that rational ``beta`` gives an exact value.
    """
    model = beta if isinstance(beta, BetaSplitting) else BetaSplitting(beta)
    b = model.beta
    if b == math.inf:
        raise UnsupportedOperation("the closed form needs a finite beta")
    lam2 = parse_param(lam2)
    out = lam2 * model.norm(n)
    for i in range(n - 2):
        out /= 4 + 2 * b + i
    return out


def rate_lambda(model: SplittingRule, n: int, lam2=1) -> Scalar:
    """Split rate of a block of size ``n`` (``n >= 2``; ``lambda_1 = 0``).

    For an exact beta-splitting rule with finite ``beta`` the recursion is
    cross-checked against the closed form and an ``ArithmeticError`` is
    raised on disagreement.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n == 1:
        return model.zero
    lam2 = parse_param(lam2)
    if lam2 <= 0:
        raise ValueError("lambda_2 must be positive")
    value = lam2 * _unit(model, n)
    if isinstance(model, BetaSplitting) and model.exact and model.beta != math.inf and is_exact(lam2):
        closed = beta_rate_closed_form(model, n, lam2)
        if closed != value:
            raise ArithmeticError(f"closed form {fmt(closed)} != recursion {fmt(value)} at n={n}")
    return value


def rate_table(model: SplittingRule, n_max: int, lam2=1) -> dict[int, Scalar]:
    return {n: rate_lambda(model, n, lam2) for n in range(2, n_max + 1)}


def _as_rates(lam: Mapping[int, Scalar] | Sequence[Scalar]) -> dict[int, Scalar]:
    if isinstance(lam, Mapping):
        return {int(k): v for k, v in lam.items()}
    return {n: v for n, v in enumerate(lam, start=2)}


def invert_rates(lam: Mapping[int, Scalar] | Sequence[Scalar], n_max: int | None = None, tol: float = 1e-9):
    """Binary splitting rule determined by a rate sequence.

    ``lam`` maps ``n`` to ``lambda_n`` (a sequence is read as
    ``lambda_2, lambda_3, ...``).  Returns ``{n: {k: p(k, n-k)}}`` for
    ``2 <= n <= n_max`` and ``1 <= k <= n-1``.  Every entry comes from

        p(k, n-k) = (1/lambda_n) sum_{j=0}^{k} (-1)^(k-j+1) C(k,j) lambda_{n-j}

    with ``lambda_1 = 0``.  Rows must be symmetric, non-negative and sum to
    one over labelled splits; otherwise :class:`InvalidRateSequence` is
    raised.  Exact inputs are compared exactly; any float input switches to
    the tolerance ``tol``.
    """
    rates = _as_rates(lam)
    if n_max is None:
        n_max = max(rates)
    missing = [n for n in range(2, n_max + 1) if n not in rates]
    if missing:
        raise ValueError(f"lambda_n missing for n = {missing}")
    rates[1] = 0
    exact = all(is_exact(rates[n]) for n in range(2, n_max + 1))
    if exact:
        rates = {n: Fraction(v) for n, v in rates.items()}
    for n in range(2, n_max + 1):
        if not rates[n] > 0:
            raise InvalidRateSequence(f"lambda_{n} = {fmt(rates[n])} is not positive", {"n": n})

    def close(x, y):
        return x == y if exact else abs(x - y) <= tol * max(1.0, abs(x), abs(y))

    table: dict[int, dict[int, Scalar]] = {}
    for n in range(2, n_max + 1):
        row = {}
        for k in range(1, n):
            s = sum((-1) ** (k - j + 1) * comb(k, j) * rates[n - j] for j in range(k + 1))
            row[k] = s / rates[n]
        for k in range(1, n):
            if not close(row[k], row[n - k]):
                hint = " (lambda_3 must be 3/2 lambda_2)" if n == 3 else ""
                raise InvalidRateSequence(
                    f"p({k},{n - k}) = {fmt(row[k])} but p({n - k},{k}) = {fmt(row[n - k])}{hint}",
                    {"n": n, "k": k, "p": row[k], "p_mirror": row[n - k]},
                )
            if row[k] < 0 and not close(row[k], 0):
                raise InvalidRateSequence(f"p({k},{n - k}) = {fmt(row[k])} < 0", {"n": n, "k": k, "p": row[k]})
        total = sum(comb(n - 1, k - 1) * row[k] for k in range(1, n))
        if not close(total, 1):
            raise InvalidRateSequence(f"row n={n} sums to {fmt(total)}", {"n": n, "total": total})
        table[n] = row
    return table


def check_complete_monotonicity(
    lam: Mapping[int, Scalar] | Sequence[Scalar], order: int = 6, n_max: int | None = None
) -> CheckReport:
    """Check ``(-1)^(k+1) Delta^k lambda_n >= 0`` for ``k = 1..order``.

    Forward differences start at ``n = 1`` with ``lambda_1 = 0`` and need
    ``lambda`` up to ``n_max + order``.  Zero differences are allowed.  The
    condition is necessary for a rate sequence but not sufficient.
    """
    rates = _as_rates(lam)
    rates[1] = 0
    top = max(rates)
    if n_max is None:
        n_max = top - order
    if n_max + order > top:
        raise ValueError(f"need lambda up to n = {n_max + order}, have {top}")
    diffs = [rates[n] for n in range(1, n_max + order + 1)]
    checked = 0
    for k in range(1, order + 1):
        diffs = [diffs[i + 1] - diffs[i] for i in range(len(diffs) - 1)]
        sign = 1 if k % 2 else -1
        for i in range(n_max):
            checked += 1
            if sign * diffs[i] < 0:
                witness = {"order": k, "n": i + 1, "difference": diffs[i]}
                return CheckReport("complete-monotonicity", False, checked, witness, {"first_failing_order": k})
    return CheckReport("complete-monotonicity", True, checked, details={"order": order, "n_max": n_max})


def check_thinning(model: SplittingRule, n_max: int, lam2=1) -> CheckReport:
    """Exact check of ``lambda_n p(c) = lambda_{n+1} (sum_i p(c + e_i) + p(c, 1))``.

    The last term is present only for multifurcating rules.  Equivalent to
    consistency once the rates obey the recursion, but computed from the
    rate table.
    """
    model._require_exact("check_thinning")
    checked = 0
    for n in range(2, n_max + 1):
        lam_n, lam_up = rate_lambda(model, n, lam2), rate_lambda(model, n + 1, lam2)
        max_parts = 2 if model.binary else n
        for comp in compositions(n, min_parts=2, max_parts=max_parts):
            if list(comp) != sorted(comp):
                continue
            rhs = sum(model._split_prob(comp[:i] + (comp[i] + 1,) + comp[i + 1:]) for i in range(len(comp)))
            if not model.binary:
                rhs += model._split_prob(comp + (1,))
            lhs = lam_n * model._split_prob(comp)
            checked += 1
            if lhs != lam_up * rhs:
                return CheckReport("thinning", False, checked, {"composition": list(comp), "lhs": lhs, "rhs": lam_up * rhs})
    return CheckReport("thinning", True, checked, details={"model": repr(model), "n_max": n_max})


def _measure_integral(beta: float, n: int) -> float:
    """``int_0^1 (1 - x^n - (1-x)^n) x^b (1-x)^b dx`` by symmetry and substitution.

    On ``[0, 1/2]`` the integrand behaves like ``n x^(b+1)``; with
    ``x = u^(1/(b+2))`` it becomes smooth.
    """
    p = 1.0 / (beta + 2.0)

    def f(u):
        # x = u^p gives dx = p x/u du and x^(b+2)/u = 1, leaving p (head/x) (1-x)^b
        x = u**p
        if x <= 0.0:
            return p * n
        ratio = -math.expm1(n * math.log1p(-x)) / x - x ** (n - 1)
        return p * ratio * math.exp(beta * math.log1p(-x))

    upper = 0.5 ** (beta + 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, 0.0, upper, epsabs=0.0, epsrel=1e-12, limit=400)
    if not math.isfinite(val) or err > 1e-9 * abs(val):
        raise ArithmeticError(f"quadrature did not converge (beta={beta}, n={n}, err={err})")
    return 2.0 * val


def lambda_from_measure(beta, n: int, lam2: float = 1.0) -> float:
    """Rate of a size-``n`` block from the beta splitting measure, by quadrature.

    Scaled so that ``n = 2`` gives ``lam2`` exactly.
    """
    beta = float(parse_param(beta))
    if not (beta > -2 and math.isfinite(beta)):
        raise ValueError(f"need finite beta > -2, got {beta}")
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return 0.0
    if n == 2:
        return float(lam2)
    return float(lam2) * _measure_integral(beta, n) / _measure_integral(beta, 2)


@dataclass
class TimedTree:
    """Fragmentation with a length on the edge above each non-leaf vertex.

    ``lengths`` is keyed by vertex bitmask.  Leaves split at rate zero, so
    their edges have no length and are absent.
    """

    tree: FragTree
    lengths: dict[int, float] = field(default_factory=dict)


def sample_timed(model: SplittingRule, n: int, lam2=1, rng=None, size: int | None = None):
    """Grow a tree on ``[n]`` and give each non-leaf vertex ``A`` an Exp(``lambda_#A``) edge.

    Returns a list of ``size`` independent draws if ``size`` is given.
    """
    _check_n(n)
    rng = as_rng(rng)
    rates = {k: float(rate_lambda(model, k, lam2)) for k in range(2, n + 1)}
    chain = GrowthChain(model)

    def one() -> TimedTree:
        tree = chain.sample(n, rng)
        lengths = {v.labels: rng.exponential(rates[v.size]) for v in tree.vertices() if v.children}
        return TimedTree(tree, lengths)

    if size is None:
        return one()
    return [one() for _ in range(size)]
