"""Integral representations: split measures on [0, 1] and paintboxes.

A binary rule can arise from a symmetric measure ``nu`` on ``(0, 1)``; its
moments ``M(i, j) = int x^i (1-x)^j nu(dx)`` then play the part of the
unnormalized split probabilities.  For Gibbs rules the moments must factor
as ``h(i+j) u(i) u(j)``.  Multifurcating Ewens-Pitman rules come instead from
random mass partitions (paintboxes); :func:`paintbox_moment` checks these by
simulation.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Sequence

import numpy as np
from scipy import integrate

from .models import CouponCollector, EwensPitman, SplittingRule, _check_composition
from .numeric import CheckReport, Scalar, UnsupportedOperation, fmt, parse_param, rising
from .rng import RngState, as_rng

__all__ = [
    "beta_moment",
    "quad_moment",
    "BetaMeasure",
    "PointMass",
    "DiscreteMeasure",
    "moment_matrix",
    "factorization_check",
    "gibbs_link_check",
    "paintbox_normalizer",
    "paintbox_exact",
    "PaintboxEstimate",
    "combine_estimates",
    "paintbox_moment",
]


# -- beta moments -----------------------------------------------------------


def _beta_float(beta) -> float:
    b = parse_param(beta)
    b = float(b)
    if not b > -2:
        raise ValueError(f"need beta > -2, got {b}")
    return b


def beta_moment(beta, i: int, j: int) -> float:
    """``int_0^1 x^(i+b) (1-x)^(j+b) dx`` via log-Gamma; ``2^-(i+j)`` for ``b = inf``."""
    b = _beta_float(beta)
    if b == math.inf:
        return 2.0 ** -(i + j)
    if i + b <= -1 or j + b <= -1:
        raise ValueError(f"moment ({i}, {j}) diverges for beta = {b}")
    return math.exp(math.lgamma(i + b + 1) + math.lgamma(j + b + 1) - math.lgamma(i + j + 2 * b + 2))


def _half_integral(a: float, c: float, tol: float) -> tuple[float, float]:
    """``int_0^(1/2) x^a (1-x)^c dx`` with ``x = u^(1/(a+1))``, which makes the integrand smooth."""
    q = 1.0 / (a + 1.0)

    def f(u):
        x = u**q
        return q * math.exp(c * math.log1p(-x))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, 0.0, 0.5 ** (a + 1.0), epsabs=0.0, epsrel=min(tol, 1e-10) / 10, limit=400)


def quad_moment(beta, i: int, j: int, tol: float = 1e-9) -> float:
    """Beta moment by adaptive quadrature, independent of the Gamma formula.

    The interval is split at ``1/2`` and each endpoint singularity is removed
    by a power substitution.  Raises ``ArithmeticError`` if the error
    estimate exceeds ``tol`` relative.
    """
    b = _beta_float(beta)
    if b == math.inf:
        raise ValueError("beta = inf is a point mass; use beta_moment")
    if tol <= 0:
        raise ValueError("tol must be positive")
    a, c = i + b, j + b
    if a <= -1 or c <= -1:
        raise ValueError(f"moment ({i}, {j}) diverges for beta = {b}")
    left, e1 = _half_integral(a, c, tol)
    right, e2 = _half_integral(c, a, tol)
    val = left + right
    if not math.isfinite(val) or e1 + e2 > tol * abs(val):
        raise ArithmeticError(f"quadrature did not converge for beta={b}, i={i}, j={j}")
    return val


# -- measures ---------------------------------------------------------------


class BetaMeasure:
    """``x^b (1-x)^b dx`` on ``(0, 1)``."""

    def __init__(self, beta):
        self.beta = _beta_float(beta)

    def moment(self, i: int, j: int) -> float:
        return beta_moment(self.beta, i, j)

    def __repr__(self):
        return f"BetaMeasure(beta={self.beta!r})"


class DiscreteMeasure:
    """Finite measure ``sum_k m_k delta_{x_k}`` on ``(0, 1)``.

    Rational atoms and masses give exact moments.
    """

    def __init__(self, atoms: Sequence, masses: Sequence | None = None):
        atoms = [parse_param(x) for x in atoms]
        if masses is None:
            masses = [Fraction(1, len(atoms))] * len(atoms)
        masses = [parse_param(m) for m in masses]
        if len(atoms) != len(masses) or not atoms:
            raise ValueError("need matching, non-empty atoms and masses")
        if any(not 0 < x < 1 for x in atoms) or any(m <= 0 for m in masses):
            raise ValueError("atoms must lie in (0, 1) with positive masses")
        self.atoms, self.masses = atoms, masses

    def moment(self, i: int, j: int) -> Scalar:
        return sum(m * x**i * (1 - x) ** j for x, m in zip(self.atoms, self.masses))

    def is_symmetric(self) -> bool:
        pairs = sorted(zip(self.atoms, self.masses))
        mirror = sorted((1 - x, m) for x, m in pairs)
        return pairs == mirror

    def __repr__(self):
        return f"DiscreteMeasure({[fmt(x) for x in self.atoms]}, {[fmt(m) for m in self.masses]})"


class PointMass(DiscreteMeasure):
    def __init__(self, x=Fraction(1, 2)):
        super().__init__([x], [1])

    def __repr__(self):
        return f"PointMass({fmt(self.atoms[0])})"


def moment_matrix(measure, i_max: int) -> dict[tuple[int, int], Scalar]:
    return {(i, j): measure.moment(i, j) for i in range(1, i_max + 1) for j in range(1, i_max + 1)}


def _rel(x, y) -> float:
    if x == y:
        return 0.0
    scale = max(abs(x), abs(y))
    return float(abs(x - y) / scale)


def factorization_check(measure, i_max: int = 10, tol: float = 1e-9, form: str = "gibbs") -> CheckReport:
    """Test how the moments ``M(i, j)`` of ``measure`` factor.

    ``form="gibbs"``: ``M(i, j) = h(i+j) u(i) u(j)`` for some ``h``, ``u``,
    tested through the cocycle identity
    ``M(i+1,j) M(j+1,k) M(i,k+1) = M(i,j+1) M(j,k+1) M(i+1,k)``, in which
    every ``h`` factor cancels.  This is what a Gibbs split rule needs.

    ``form="cross"``: ``M(i,j) M(i',j') = M(i,j') M(i',j)`` whenever
    ``i + j = i' + j'``.

    ``form="product"``: ``M(i, j) = u(i) u(j)`` literally, i.e. the matrix
    has rank one.

    Indices run over ``1..i_max``.  Reports the largest relative violation.
    """
    M = moment_matrix(measure, i_max)
    worst, witness, checked = 0.0, None, 0
    idx = range(1, i_max + 1)

    def record(v, key):
        nonlocal worst, witness, checked
        checked += 1
        if v > worst:
            worst, witness = v, key

    if form == "gibbs":
        for i in range(1, i_max):
            for j in range(1, i_max):
                for k in range(1, i_max):
                    lhs = M[i + 1, j] * M[j + 1, k] * M[i, k + 1]
                    rhs = M[i, j + 1] * M[j, k + 1] * M[i + 1, k]
                    record(_rel(lhs, rhs), {"i": i, "j": j, "k": k})
    elif form == "cross":
        for i in idx:
            for j in idx:
                for i2 in idx:
                    j2 = i + j - i2
                    if 1 <= j2 <= i_max and (i2, j2) > (i, j):
                        record(_rel(M[i, j] * M[i2, j2], M[i, j2] * M[i2, j]), {"i": i, "j": j, "i2": i2, "j2": j2})
    elif form == "product":
        for i in idx:
            for j in idx:
                for i2 in idx:
                    for j2 in idx:
                        if (i2, j2) > (i, j):
                            record(_rel(M[i, j] * M[i2, j2], M[i, j2] * M[i2, j]), {"i": i, "j": j, "i2": i2, "j2": j2})
    else:
        raise ValueError(f"unknown form {form!r}")
    passed = worst <= tol
    details = {"measure": repr(measure), "form": form, "max_violation": worst, "tol": tol}
    return CheckReport(f"factorization[{form}]", passed, checked, None if passed else {**witness, "violation": worst}, details)


def gibbs_link_check(beta, n_max: int = 14, tol: float = 1e-9) -> CheckReport:
    """``M(i, j) / (w(i) w(j))`` depends on ``i + j`` only, with exact ``w``."""
    from .models import BetaSplitting

    b = parse_param(beta)
    model = BetaSplitting(b)
    worst, checked, witness = 0.0, 0, None
    for n in range(2, n_max + 1):
        ratios = [beta_moment(b, i, n - i) / float(model.w(i) * model.w(n - i)) for i in range(1, n)]
        for i, r in enumerate(ratios, start=1):
            v = _rel(r, ratios[0])
            checked += 1
            if v > worst:
                worst, witness = v, {"n": n, "i": i}
    passed = worst <= tol
    return CheckReport("gibbs-link", passed, checked, None if passed else witness, {"max_violation": worst})


# -- paintboxes -------------------------------------------------------------


def _paintbox_regime(model: SplittingRule) -> str:
    if isinstance(model, CouponCollector):
        return "coupon"
    if isinstance(model, EwensPitman):
        if model.regime == "bounded":
            return "dirichlet"
        if model.regime == "standard" and model.alpha >= 0 and model.theta > -model.alpha:
            return "stick-breaking"
    raise UnsupportedOperation(
        f"no paintbox construction for {model!r}; supported are Ewens-Pitman with 0 <= alpha < 1 and"
        " theta > -alpha, Ewens-Pitman with alpha < 0 and theta = -m alpha, and the coupon collector"
    )


def paintbox_normalizer(model: SplittingRule, n: int) -> Scalar:
    """Probability that ``n`` paintbox draws do not all fall on one atom."""
    regime = _paintbox_regime(model)
    if regime == "coupon":
        return 1 - Fraction(model.m) ** (1 - n)
    a, t = model.alpha, model.theta
    if regime == "dirichlet":
        m = model.m
        return 1 - m * rising(-a, n) / rising(-m * a, n)
    return 1 - rising(1 - a, n - 1) / rising(t + 1, n - 1)


def paintbox_exact(model: SplittingRule, composition: Sequence[int]) -> Scalar:
    """``split_prob`` times the paintbox normalizer for the composition's total."""
    comp = _check_composition(composition)
    return model.split_prob(comp) * paintbox_normalizer(model, sum(comp))


@dataclass
class PaintboxEstimate:
    estimate: float
    stderr: float
    samples: int
    exact: Scalar
    method: str

    @property
    def z(self) -> float:
        """Standardized deviation from the exact value."""
        if self.stderr == 0:
            return 0.0 if self.estimate == float(self.exact) else math.inf
        return (self.estimate - float(self.exact)) / self.stderr

    def within(self, k: float = 3.0) -> bool:
        return abs(self.z) <= k


def combine_estimates(parts: Sequence[PaintboxEstimate]) -> PaintboxEstimate:
    """Pool independent estimates: sample-weighted mean, pooled variance.

    Each part's variance is recovered as ``samples * stderr**2``; between-part
    spread is added so the result matches a single run on all samples.
    """
    total = sum(p.samples for p in parts)
    mean = sum(p.estimate * p.samples for p in parts) / total
    ss = 0.0
    for p in parts:
        var = p.stderr**2 * p.samples
        ss += var * (p.samples - 1) + p.samples * (p.estimate - mean) ** 2
    var = ss / (total - 1) if total > 1 else 0.0
    return PaintboxEstimate(mean, math.sqrt(var / total), total, parts[0].exact, parts[0].method)


_CHUNK = 100_000
_STICKS = 128


def _groups(comp: tuple[int, ...]) -> list[list[int]]:
    out, pos = [], 0
    for size in comp:
        out.append(list(range(pos, pos + size)))
        pos += size
    return out


def _crp(n_points: int, alpha: float, theta: float, rng: np.random.Generator) -> list[int]:
    """Table labels of ``n_points`` customers of a two-parameter restaurant."""
    labels, counts = [], []
    for c in range(n_points):
        weights = [cnt - alpha for cnt in counts] + [theta + len(counts) * alpha]
        total = c + theta
        u = rng.random() * total
        acc = 0.0
        for t, wt in enumerate(weights):
            acc += wt
            if u < acc:
                break
        if t == len(counts):
            counts.append(1)
        else:
            counts[t] += 1
        labels.append(t)
    return labels


def _stick_chunk(comp, alpha, theta, size, gen) -> np.ndarray:
    """Indicators that i.i.d. draws from a stick-breaking paintbox form the blocks of ``comp``.

    Sticks are broken only for rows whose largest draw is not yet covered.
    """
    n = sum(comp)
    u = gen.random((size, n))
    top = u.max(axis=1)
    ids = np.full((size, n), -1, dtype=np.int64)
    left = np.zeros(size)
    rest = np.ones(size)
    active = np.arange(size)
    for i in range(1, _STICKS + 1):
        if active.size == 0:
            break
        piece = gen.beta(1.0 - alpha, theta + i * alpha, active.size) * rest[active]
        lo = left[active]
        hi = lo + piece
        ua = u[active]
        hit = (ua >= lo[:, None]) & (ua < hi[:, None])
        sub = ids[active]
        sub[hit] = i
        ids[active] = sub
        left[active] = hi
        rest[active] -= piece
        active = active[top[active] >= hi]
    # the unbroken tail is a rescaled paintbox of the same family with theta + K alpha
    tail_theta = theta + _STICKS * alpha
    for r in active:
        cols = np.nonzero(ids[r] < 0)[0]
        labels = _crp(len(cols), alpha, tail_theta, gen)
        ids[r, cols] = _STICKS + 1 + np.asarray(labels)
    return _block_indicator(ids, comp)


def _block_indicator(ids: np.ndarray, comp) -> np.ndarray:
    groups = _groups(comp)
    ok = np.ones(ids.shape[0], dtype=bool)
    reps = []
    for g in groups:
        first = ids[:, g[0]]
        for c in g[1:]:
            ok &= ids[:, c] == first
        reps.append(first)
    for a in range(len(reps)):
        for b in range(a + 1, len(reps)):
            ok &= reps[a] != reps[b]
    return ok.astype(float)


def _dirichlet_chunk(comp, alpha, m, size, gen) -> np.ndarray:
    """Conditional probability given ``s ~ Dirichlet(-alpha, ..., -alpha)``: sum over distinct atoms."""
    s = gen.dirichlet([-alpha] * m, size)
    out = np.zeros(size)
    for perm in permutations(range(m), len(comp)):
        term = np.ones(size)
        for atom, power in zip(perm, comp):
            term *= s[:, atom] ** power
        out += term
    return out


def _run(model, comp, regime, samples, rng: RngState) -> PaintboxEstimate:
    gen = rng.generator()
    total, total_sq, done = 0.0, 0.0, 0
    while done < samples:
        size = min(_CHUNK, samples - done)
        if regime == "stick-breaking":
            vals = _stick_chunk(comp, float(model.alpha), float(model.theta), size, gen)
        else:
            vals = _dirichlet_chunk(comp, float(model.alpha), model.m, size, gen)
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += size
    mean = float(total) / samples
    var = max(float(total_sq) / samples - mean**2, 0.0) * samples / max(samples - 1, 1)
    return PaintboxEstimate(mean, math.sqrt(var / samples), samples, paintbox_exact(model, comp), regime)


def paintbox_moment(
    model: SplittingRule, composition: Sequence[int], samples: int = 1_000_000, rng=None, workers: int = 1
) -> PaintboxEstimate:
    """Monte Carlo estimate of ``E[sum over distinct atoms of prod_j s_(i_j)^(n_j)]``.

    The expectation is taken over the model's random paintbox ``s``:

    * stick-breaking (``0 <= alpha < 1``, ``theta > -alpha``): ``n`` uniform
      draws are located on sticks ``V_i ~ Beta(1 - alpha, theta + i alpha)``,
      and the estimate is the frequency with which they form the blocks of
      the composition.  Draws beyond the first 128 sticks are resolved
      with the sequential seating rule of the remaining rescaled paintbox.
    * Dirichlet (``alpha < 0``, ``theta = -m alpha``): the conditional value
      given ``s`` is averaged.
    * coupon collector: the value is deterministic.

    With ``workers > 1`` the samples are split across independent child
    streams and pooled by :func:`combine_estimates`; the result depends on
    the seed and ``workers`` but not on thread scheduling.
    """
    comp = _check_composition(composition)
    regime = _paintbox_regime(model)
    if regime == "coupon":
        m, k, n = model.m, len(comp), sum(comp)
        exact_value = Fraction(math.perm(m, k), m**n)
        return PaintboxEstimate(float(exact_value), 0.0, samples, paintbox_exact(model, comp), regime)
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = as_rng(rng)
    if workers <= 1:
        return _run(model, comp, regime, samples, rng)
    streams = rng.spawn(workers)
    shares = [samples // workers + (1 if w < samples % workers else 0) for w in range(workers)]
    with ThreadPoolExecutor(workers) as pool:
        parts = list(pool.map(lambda a: _run(model, comp, regime, a[0], a[1]), zip(shares, streams)))
    return combine_estimates(parts)
