"""Splitting rules of Gibbs type and their exact verification.

A Gibbs splitting rule assigns to a labelled partition of ``[n]`` with block
sizes ``n_1, ..., n_k`` the probability

    p(n_1, ..., n_k) = a(k) * w(n_1) * ... * w(n_k) / c(n),

where ``c(n)`` is the sum of ``a(k) B_{n,k}(w)`` over ``k >= 2`` and
``B_{n,k}`` is the partial Bell polynomial.  Binary rules have ``a(k) = 0``
for ``k >= 3`` and then ``c(n)`` is usually written ``Z(n)``.

Weights use the canonical normalization ``w(1) = a(2) = 1``.  Exact mode
needs rational parameters and never evaluates Gamma functions; float mode
uses log-Gamma differences.
"""
from __future__ import annotations

import math
import threading
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from .numeric import (
    CheckReport,
    InadmissibleModel,
    Scalar,
    UnsupportedOperation,
    compositions,
    fmt,
    integer_partitions,
    is_exact,
    parse_param,
    set_partition_count,
)
from .trees import FragTree

__all__ = [
    "SplittingRule",
    "GibbsModel",
    "BetaSplitting",
    "Comb",
    "EwensPitman",
    "CouponCollector",
    "SingletonSplit",
    "RawGibbs",
    "ewens_pitman",
    "weight_w",
    "factor_a",
    "norm",
    "psi",
    "split_prob",
    "tree_prob",
    "gibbs_tree_prob",
    "check_consistency",
    "check_normalization",
    "affine_ratio_check",
]


def _check_composition(sizes: Iterable[int]) -> tuple[int, ...]:
    sizes = tuple(sizes)
    if not sizes:
        raise ValueError("empty composition")
    if any(int(s) != s or s < 1 for s in sizes):
        raise ValueError(f"block sizes must be positive integers, got {sizes}")
    if len(sizes) < 2:
        raise ValueError("a split needs at least two blocks")
    return sizes


class SplittingRule:
    """Exchangeable splitting rule ``p`` on compositions with ``k >= 2`` parts.

    Subclasses set ``exact``, ``binary`` and ``max_blocks`` (``None`` when
    unbounded) and implement :meth:`_split_prob`.
    """

    exact: bool = True
    binary: bool = True
    gibbs: bool = False
    max_blocks: int | None = 2

    def _key(self) -> tuple:
        raise NotImplementedError

    # exactness is part of identity: Fraction(1, 2) == 0.5 must not merge exact and float models
    def __eq__(self, other):
        return type(self) is type(other) and self.exact == other.exact and self._key() == other._key()

    def __hash__(self):
        return hash((type(self).__name__, self.exact, self._key()))

    @property
    def zero(self) -> Scalar:
        return Fraction(0) if self.exact else 0.0

    @property
    def one(self) -> Scalar:
        return Fraction(1) if self.exact else 1.0

    def split_prob(self, sizes: Sequence[int]) -> Scalar:
        """Probability of one fixed labelled partition with these block sizes."""
        return self._split_prob(_check_composition(sizes))

    def _split_prob(self, sizes: tuple[int, ...]) -> Scalar:
        raise NotImplementedError

    def _require_exact(self, what: str) -> None:
        if not self.exact:
            raise UnsupportedOperation(f"{what} needs exact (rational) parameters; {self!r} is in float mode")


class WeightTables:
    """Lazily extended, memoized ``w``, ``a``, Bell and normalization tables.

    Extension happens under a lock; readers only ever see fully computed
    entries, so a model can be shared between threads.
    """

    def __init__(self, model: GibbsModel):
        self._model = model
        self._lock = threading.RLock()
        self.w: list[Scalar] = [model.zero]
        self.a: list[Scalar] = [model.zero, model.zero]
        self.bell: list[list[Scalar]] = [[model.one]]
        self.norm: list[Scalar | None] = [None, None]
        self.split: dict[tuple[int, ...], Scalar] = {}
        self.psi: dict[int, Scalar] = {}

    def weight(self, j: int) -> Scalar:
        w = self.w
        if j < len(w):
            return w[j]
        with self._lock:
            while len(w) <= j:
                w.append(self._model._weight(len(w)))
        return w[j]

    def arity(self, k: int) -> Scalar:
        a = self.a
        if k < len(a):
            return a[k]
        with self._lock:
            while len(a) <= k:
                a.append(self._model._arity(len(a)))
        return a[k]

    def bell_row(self, n: int) -> list[Scalar | None]:
        """``B_{n,k}(w)`` for ``k = 0..kmax(n)`` via the first-block recurrence.

        The ``k = 1`` entry is ``w(n)`` and is left as ``None`` so that a row
        never needs a weight beyond ``w(n - 1)``.
        """
        rows = self.bell
        if n < len(rows):
            return rows[n]
        with self._lock:
            while len(rows) <= n:
                m = len(rows)
                kmax = m if self._model.max_blocks is None else min(m, self._model.max_blocks)
                row: list = [self._model.zero] * (kmax + 1)
                row[1] = None
                for k in range(2, kmax + 1):
                    total = self._model.zero
                    for i in range(1, m - k + 2):
                        if k == 2:
                            term = self.weight(m - i)
                        else:
                            prev = rows[m - i]
                            term = prev[k - 1] if k - 1 < len(prev) else 0
                        if term:
                            total += comb(m - 1, i - 1) * self.weight(i) * term
                    row[k] = total
                rows.append(row)
        return rows[n]

    def normalization(self, n: int) -> Scalar:
        norms = self.norm
        if n < len(norms) and norms[n] is not None:
            return norms[n]
        with self._lock:
            while len(norms) <= n:
                norms.append(None)
            if norms[n] is None:
                row = self.bell_row(n)
                total = self._model.zero
                for k in range(2, len(row)):
                    ak = self.arity(k)
                    if ak:
                        total += ak * row[k]
                norms[n] = total
        return norms[n]


class GibbsModel(SplittingRule):
    """Splitting rule of Gibbs form with memoized weight tables."""

    gibbs = True

    def __init__(self):
        self._tables = WeightTables(self)

    def _weight(self, j: int) -> Scalar:
        raise NotImplementedError

    def _arity(self, k: int) -> Scalar:
        raise NotImplementedError

    def w(self, j: int) -> Scalar:
        if j < 1:
            raise ValueError(f"w(j) needs j >= 1, got {j}")
        return self._tables.weight(j)

    def a(self, k: int) -> Scalar:
        if k < 2:
            raise ValueError(f"a(k) needs k >= 2, got {k}")
        if self.max_blocks is not None and k > self.max_blocks:
            return self.zero
        return self._tables.arity(k)

    def bell(self, n: int, k: int) -> Scalar:
        """Partial Bell polynomial ``B_{n,k}`` evaluated at the weights."""
        if k == 1:
            return self.w(n)
        if k == 0:
            return self.one if n == 0 else self.zero
        row = self._tables.bell_row(n)
        return row[k] if k < len(row) else self.zero

    def norm(self, n: int) -> Scalar:
        """``Z(n)`` (binary) or ``c(n)`` (multifurcating), ``n >= 2``."""
        if n < 2:
            raise ValueError(f"normalization defined for n >= 2, got {n}")
        return self._tables.normalization(n)

    def psi(self, n: int) -> Scalar:
        """Tree weights ``psi(1) = 1``, ``psi(n) = w(n) / Z(n)`` (binary only)."""
        if not self.binary:
            raise UnsupportedOperation(f"psi is defined for binary models only, not {self!r}")
        if n < 1:
            raise ValueError(f"psi(n) needs n >= 1, got {n}")
        if n == 1:
            return self.one
        cache = self._tables.psi
        value = cache.get(n)
        if value is None:
            value = cache[n] = self.w(n) / self.norm(n)
        return value

    def W(self, n: int) -> Scalar:
        return self.w(n + 1) / self.w(n)

    def A(self, k: int) -> Scalar:
        return self.a(k + 1) / self.a(k)

    def C(self, n: int) -> Scalar:
        return self.norm(n + 1) / self.norm(n)

    def _split_prob(self, sizes):
        # memo keyed by the sorted composition; a racing duplicate write stores the same value
        key = tuple(sorted(sizes))
        cache = self._tables.split
        value = cache.get(key)
        if value is None:
            value = cache[key] = self._split_value(key)
        return value

    def _split_value(self, sizes):
        k = len(sizes)
        if self.max_blocks is not None and k > self.max_blocks:
            return self.zero
        num = self.a(k)
        if not num:
            return self.zero
        for s in sizes:
            num *= self.w(s)
        return num / self.norm(sum(sizes))


def _exact_or_float(*params) -> bool:
    return all(is_exact(p) or p == math.inf for p in params)


class BetaSplitting(GibbsModel):
    """Aldous' beta-splitting rule, ``beta > -2`` or ``beta = inf``.

    ``w(j) = (2+beta)(3+beta)...(j+beta)`` and ``w = 1`` for ``beta = inf``.
    """

    binary = True
    max_blocks = 2

    def __init__(self, beta):
        beta = parse_param(beta)
        if not (beta == math.inf or beta > -2):
            raise InadmissibleModel(f"beta-splitting needs beta > -2 or beta = inf, got {fmt(beta)}")
        self.beta = beta
        self.exact = _exact_or_float(beta)
        super().__init__()

    def _key(self):
        return (self.beta,)

    def __repr__(self):
        return f"BetaSplitting(beta={fmt(self.beta)})"

    def _weight(self, j):
        b = self.beta
        if b == math.inf:
            return self.one
        if self.exact:
            out = Fraction(1)
            for q in range(1, j):
                out *= q + 1 + b
            return out
        return math.exp(math.lgamma(j + 1 + b) - math.lgamma(2 + b))

    def _arity(self, k):
        return self.one if k == 2 else self.zero


class Comb(SplittingRule):
    """The ``beta = -2`` boundary (pure erosion): only ``(1, n-1)`` splits.

    ``p(1, n-1) = 1/n`` for ``n >= 3`` and ``p(1, 1) = 1``.  Consistent but
    not of Gibbs form.
    """

    exact = True
    binary = True
    max_blocks = 2

    def _key(self):
        return ()

    def __repr__(self):
        return "Comb()"

    def _split_prob(self, sizes):
        if len(sizes) != 2:
            return Fraction(0)
        n = sizes[0] + sizes[1]
        if n == 2:
            return Fraction(1)
        if min(sizes) == 1:
            return Fraction(1, n)
        return Fraction(0)


class EwensPitman(GibbsModel):
    """Two-parameter family ``w(n) = (1-alpha)_{n-1}``, ``a(k) = prod_{i=2}^{k-1} (theta + i alpha)``.

    Admissible regimes:

    * ``0 <= alpha < 1`` and ``theta > -2 alpha`` (unbounded arity);
    * ``alpha < 0`` and ``theta = -m alpha`` with integer ``m >= 3``
      (at most ``m`` blocks);
    * ``alpha < 1`` and ``theta = -2 alpha`` (binary; beta-splitting with
      ``beta = -1 - alpha``).

    ``alpha = 1`` and ``alpha = -inf`` are :class:`SingletonSplit` and
    :class:`CouponCollector`; see :func:`ewens_pitman`.
    """

    def __init__(self, alpha, theta):
        alpha, theta = parse_param(alpha), parse_param(theta)
        if not (math.isfinite(alpha) and math.isfinite(theta)):
            raise InadmissibleModel("alpha and theta must be finite; use CouponCollector for alpha = -inf")
        self.alpha, self.theta = alpha, theta
        self.exact = _exact_or_float(alpha, theta)
        self.regime, self.max_blocks = self._classify(alpha, theta)
        self.binary = self.max_blocks == 2
        super().__init__()

    def _classify(self, alpha, theta):
        exact = self.exact

        def same(x, y):
            return x == y if exact else math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-12)

        if alpha >= 1:
            hint = " (alpha = 1 is SingletonSplit)" if alpha == 1 else ""
            raise InadmissibleModel(f"alpha must be < 1, got {fmt(alpha)}{hint}")
        if same(theta, -2 * alpha):
            return "binary", 2
        if alpha >= 0:
            if theta > -2 * alpha:
                return "standard", None
            raise InadmissibleModel(f"need theta > -2 alpha for 0 <= alpha < 1, got theta={fmt(theta)}")
        m = -theta / alpha
        m_int = round(m)
        if same(m, m_int) and m_int >= 3:
            return "bounded", int(m_int)
        raise InadmissibleModel(
            f"for alpha < 0 need theta = -m alpha with integer m >= 3 (or theta = -2 alpha),"
            f" got alpha={fmt(alpha)}, theta={fmt(theta)}"
        )

    def _key(self):
        return (self.alpha, self.theta)

    def __repr__(self):
        return f"EwensPitman(alpha={fmt(self.alpha)}, theta={fmt(self.theta)})"

    @property
    def m(self) -> int | None:
        return self.max_blocks

    def _weight(self, j):
        if self.exact:
            out = Fraction(1)
            for q in range(1, j):
                out *= q - self.alpha
            return out
        return math.exp(math.lgamma(j - self.alpha) - math.lgamma(1 - self.alpha))

    def _arity(self, k):
        if self.max_blocks is not None and k > self.max_blocks:
            return self.zero
        out = self.one
        for i in range(2, k):
            out *= self.theta + i * self.alpha
        return out


class CouponCollector(GibbsModel):
    """Recursive coupon collector (``alpha = -inf``, ``theta = m``).

    Each element picks one of ``m`` coupons uniformly, conditioned on at
    least two distinct coupons: ``w = 1``, ``a(k) = (m-2)(m-3)...(m-k+1)``.
    """

    def __init__(self, m: int):
        if int(m) != m or m < 2:
            raise InadmissibleModel(f"coupon collector needs integer m >= 2, got {m}")
        self.m = int(m)
        self.max_blocks = self.m
        self.binary = self.m == 2
        self.exact = True
        super().__init__()

    def _key(self):
        return (self.m,)

    def __repr__(self):
        return f"CouponCollector(m={self.m})"

    def _weight(self, j):
        return Fraction(1)

    def _arity(self, k):
        out = Fraction(1)
        for i in range(2, k):
            out *= self.m - i
        return out


class SingletonSplit(GibbsModel):
    """``alpha = 1``: every block splits at once into singletons.

    ``w(1) = 1``, ``w(j) = 0`` for ``j >= 2``; ``a(k) = 1`` for all ``k``
    (any positive choice gives the same rule).
    """

    binary = False
    max_blocks = None
    exact = True

    def _key(self):
        return ()

    def __repr__(self):
        return "SingletonSplit()"

    def _weight(self, j):
        return Fraction(1 if j == 1 else 0)

    def _arity(self, k):
        return Fraction(1)


class RawGibbs(GibbsModel):
    """Gibbs rule from explicit weight tables (for adversarial tests).

    ``w[0]`` is ``w(1)``; ``a[0]`` is ``a(2)``.  Without ``a`` the rule is
    binary.  ``a(k)`` beyond the table is zero; ``w(j)`` beyond the table is
    an error.  No consistency is assumed.
    """

    def __init__(self, w: Sequence, a: Sequence | None = None):
        self.weights = tuple(parse_param(x) for x in w)
        if not self.weights:
            raise ValueError("empty weight table")
        self.arities = (Fraction(1),) if a is None else tuple(parse_param(x) for x in a)
        if any(x < 0 for x in self.weights + self.arities):
            raise InadmissibleModel("weights must be non-negative")
        self.exact = _exact_or_float(*self.weights, *self.arities)
        self.binary = a is None or all(x == 0 for x in self.arities[1:])
        self.max_blocks = 2 if self.binary else len(self.arities) + 1
        super().__init__()

    def _key(self):
        return (self.weights, self.arities)

    def __repr__(self):
        return f"RawGibbs(w={[fmt(x) for x in self.weights]}, a={[fmt(x) for x in self.arities]})"

    def _weight(self, j):
        if j > len(self.weights):
            raise ValueError(f"raw weight table has {len(self.weights)} entries; w({j}) requested")
        x = self.weights[j - 1]
        return Fraction(x) if self.exact else float(x)

    def _arity(self, k):
        if k - 2 >= len(self.arities):
            return self.zero
        x = self.arities[k - 2]
        return Fraction(x) if self.exact else float(x)

    def scaled(self, a_factor, b_factor) -> RawGibbs:
        """Weights ``w(j) * a * b**j`` (the overparameterization of the binary rule)."""
        return RawGibbs(
            [x * a_factor * b_factor ** j for j, x in enumerate(self.weights, start=1)],
            None if self.binary and len(self.arities) == 1 else self.arities,
        )


def ewens_pitman(alpha, theta) -> GibbsModel:
    """Build the Gibbs model for any admissible ``(alpha, theta)``.

    ``alpha = 1`` gives :class:`SingletonSplit` (``theta`` ignored);
    ``alpha = -inf`` gives :class:`CouponCollector` with ``m = theta``.
    """
    alpha, theta = parse_param(alpha), parse_param(theta)
    if alpha == 1:
        return SingletonSplit()
    if alpha == -math.inf:
        return CouponCollector(theta)
    return EwensPitman(alpha, theta)


# -- operation-style wrappers ---------------------------------------------


def _gibbs(model) -> GibbsModel:
    if not isinstance(model, GibbsModel):
        raise UnsupportedOperation(f"{model!r} is not of Gibbs form")
    return model


def weight_w(model, j: int) -> Scalar:
    return _gibbs(model).w(j)


def factor_a(model, k: int) -> Scalar:
    return _gibbs(model).a(k)


def norm(model, n: int) -> Scalar:
    return _gibbs(model).norm(n)


def psi(model, n: int) -> Scalar:
    return _gibbs(model).psi(n)


def split_prob(model: SplittingRule, sizes: Sequence[int]) -> Scalar:
    return model.split_prob(sizes)


def tree_prob(model: SplittingRule, t: FragTree, cross_check: bool = True) -> Scalar:
    """Markov branching probability: product of split probabilities.

    For exact binary Gibbs models with ``w(1) = 1`` the product is compared
    with the tree-weight form :func:`gibbs_tree_prob`.
    """
    splits = _splits(t)
    factors = []
    for sizes in splits:
        if model.binary and len(sizes) != 2:
            raise ValueError(f"binary model {model!r} given a vertex with {len(sizes)} children")
        f = model._split_prob(sizes)
        if not f:
            return model.zero
        factors.append(f)
    p = _product(factors, model)
    if cross_check and model.exact and model.binary and model.gibbs and model.w(1) == 1:
        q = _psi_form(model, splits, t.size)
        if p != q:
            raise ArithmeticError(f"split product {p} differs from tree-weight form {q}")
    return p


def _splits(t: FragTree) -> list[tuple[int, ...]]:
    """Child-size tuple of every internal vertex."""
    out = []
    stack = [t]
    while stack:
        v = stack.pop()
        kids = v.children
        if kids:
            out.append(tuple(c.labels.bit_count() for c in kids))
            stack.extend(kids)
    return out


def gibbs_tree_prob(model: GibbsModel, t: FragTree) -> Scalar:
    """``(1 / w(n)) * prod over vertices of psi(#A)`` for binary Gibbs models."""
    model = _gibbs(model)
    if not t.is_binary():
        raise ValueError("tree-weight form applies to binary trees")
    return _psi_form(model, _splits(t), t.size)


def _psi_form(model: GibbsModel, splits, n: int) -> Scalar:
    factors = [model.psi(sum(sizes)) for sizes in splits]
    factors.append(1 / model.w(n))
    return _product(factors, model)


def _product(factors: list, model: SplittingRule) -> Scalar:
    """Product with a single reduction at the end for exact factors."""
    if not model.exact:
        return math.prod(factors, start=model.one)
    num = den = 1
    for f in factors:
        num *= f.numerator
        den *= f.denominator
    return Fraction(num, den)


# -- exact verification ---------------------------------------------------


def check_consistency(model: SplittingRule, n_max: int) -> CheckReport:
    """Verify the sampling-consistency identities exactly up to total ``n_max``.

    Every composition ``(n_1, ..., n_k)`` with ``k >= 2`` must satisfy

        p(n) = sum_i p(.., n_i + 1, ..) + p(n, 1) + p(|n|, 1) p(n)

    (the binary case is ``p(i,j) = p(i+1,j) + p(i,j+1) + p(i+j,1) p(i,j)``).
    For Gibbs models with positive weights the reduced ratio form
    ``C_n = sum_i W_{n_i} + A_k + w(n)/c(n)`` is checked as well for
    ``k <= min(m, n)``.
    """
    model._require_exact("check_consistency")
    cache: dict[tuple[int, ...], Scalar] = {}

    def p(sizes):
        key = tuple(sorted(sizes))
        val = cache.get(key)
        if val is None:
            val = cache[key] = model._split_prob(key)
        return val

    checked = 0
    for n in range(2, n_max + 1):
        max_parts = 2 if model.binary else n
        for comp in compositions(n, min_parts=2, max_parts=max_parts):
            lhs = p(comp)
            rhs = sum((p(comp[:i] + (comp[i] + 1,) + comp[i + 1:]) for i in range(len(comp))), Fraction(0))
            if not model.binary:
                rhs += p(comp + (1,))
            rhs += p((n, 1)) * lhs
            checked += 1
            if lhs != rhs:
                return CheckReport(
                    "consistency",
                    False,
                    checked,
                    {"composition": list(comp), "lhs": lhs, "rhs": rhs, "identity": "split"},
                )
            if not model.binary and isinstance(model, GibbsModel):
                failure = _ratio_identity(model, comp)
                if failure is not None:
                    return CheckReport("consistency", False, checked, failure)
    return CheckReport("consistency", True, checked, details={"model": repr(model), "n_max": n_max})


def _ratio_identity(model: GibbsModel, comp: tuple[int, ...]) -> dict | None:
    n, k = sum(comp), len(comp)
    if model.max_blocks is not None and k > model.max_blocks:
        return None
    if any(model.w(j) == 0 for j in range(1, n + 2)) or model.a(k) == 0:
        return None
    lhs = model.C(n)
    rhs = sum((model.W(s) for s in comp), Fraction(0)) + model.A(k) + model.w(n) / model.norm(n)
    if lhs != rhs:
        return {"composition": list(comp), "lhs": lhs, "rhs": rhs, "identity": "ratio"}
    return None


def check_normalization(model: SplittingRule, n_max: int) -> CheckReport:
    """Split probabilities of all labelled partitions of ``[n]`` sum to one."""
    model._require_exact("check_normalization")
    checked = 0
    for n in range(2, n_max + 1):
        if model.binary:
            total = sum((comb(n - 1, k - 1) * model._split_prob((k, n - k)) for k in range(1, n)), Fraction(0))
        else:
            total = Fraction(0)
            for parts in integer_partitions(n):
                if len(parts) >= 2:
                    total += set_partition_count(parts) * model._split_prob(parts)
        checked += 1
        if total != 1:
            return CheckReport("normalization", False, checked, {"n": n, "total": total})
    return CheckReport("normalization", True, checked, details={"model": repr(model), "n_max": n_max})


def affine_ratio_check(model: GibbsModel, j_max: int = 3) -> CheckReport:
    """Check that weight ratios implied by consistency are affine in ``j``.

    Consistency of a binary Gibbs rule with ``w(1) = 1`` forces
    ``W_i + W_j = (Z(i+j+1) - w(i+j)) / Z(i+j)``; taking ``i = 1`` yields
    ``W_1, ..., W_{j_max}`` and consistency requires their increments to be
    equal.
    """
    model = _gibbs(model)
    if not model.binary:
        raise UnsupportedOperation("affine ratio check applies to binary models")
    model._require_exact("affine_ratio_check")

    def r(n):
        return (model.norm(n + 1) - model.w(n)) / model.norm(n)

    W = [None, r(2) / 2]
    for j in range(2, j_max + 1):
        W.append(r(j + 1) - W[1])
    increments = [W[j + 1] - W[j] for j in range(1, j_max)]
    passed = all(d == increments[0] for d in increments)
    witness = None if passed else {"W": W[1:], "increments": increments}
    return CheckReport("affine-ratios", passed, len(increments), witness, {"increments": increments})
