"""Hand-written closed forms for four beta-splitting rules.

These are reference values only; the generic pipeline in :mod:`fragtree.models`
and :mod:`fragtree.rates` never calls them.  Keys of :data:`REFERENCE_BETAS`
are ``-3/2`` (uniform), ``-1``, ``0`` (Yule) and ``inf`` (symmetric trie).
"""
from __future__ import annotations

import math
from fractions import Fraction
from math import comb, factorial

from .numeric import parse_param

REFERENCE_BETAS = (Fraction(-3, 2), Fraction(-1), Fraction(0), math.inf)

__all__ = ["REFERENCE_BETAS", "harmonic", "table_w", "table_Z", "table_psi", "table_lambda", "reference_row"]


def harmonic(n: int) -> Fraction:
    return sum((Fraction(1, k) for k in range(1, n + 1)), Fraction(0))


def _key(beta):
    b = parse_param(beta)
    if b not in REFERENCE_BETAS:
        raise ValueError(f"no closed form stored for beta = {beta}")
    return b


def table_w(beta, n: int) -> Fraction:
    b = _key(beta)
    if b == Fraction(-3, 2):
        return Fraction(factorial(2 * n - 2), 2 ** (2 * n - 2) * factorial(n - 1))
    if b == -1:
        return Fraction(factorial(n - 1))
    if b == 0:
        return Fraction(factorial(n))
    return Fraction(1)


def table_Z(beta, n: int) -> Fraction:
    """Normalization, defined for ``n >= 2``."""
    b = _key(beta)
    if n < 2:
        raise ValueError("Z(n) needs n >= 2")
    if b == Fraction(-3, 2):
        return 2 * table_w(b, n)
    if b == -1:
        return factorial(n - 1) * harmonic(n - 1)
    if b == 0:
        return Fraction(n - 1, 2) * factorial(n)
    return Fraction(2 ** (n - 1) - 1)


def table_psi(beta, n: int) -> Fraction:
    b = _key(beta)
    if n < 2:
        raise ValueError("psi(n) needs n >= 2")
    if b == Fraction(-3, 2):
        return Fraction(1, 2)
    if b == -1:
        return 1 / harmonic(n - 1)
    if b == 0:
        return Fraction(2, n - 1)
    return Fraction(1, 2 ** (n - 1) - 1)


def table_lambda(beta, n: int, lam2=1) -> Fraction:
    """Split rate with ``lambda_2 = lam2``, ``n >= 2``."""
    b = _key(beta)
    if n < 2:
        raise ValueError("lambda_n needs n >= 2")
    lam2 = parse_param(lam2)
    if b == Fraction(-3, 2):
        value = Fraction((n - 1) * comb(2 * n - 2, n - 1), 2 ** (2 * n - 3))
    elif b == -1:
        value = harmonic(n - 1)
    elif b == 0:
        value = Fraction(3 * n - 3, n + 1)
    else:
        value = 2 * (1 - Fraction(1, 2 ** (n - 1)))
    return lam2 * value


def reference_row(beta, n: int) -> dict:
    """``w, Z, psi, lambda`` at ``n``; ``Z``, ``psi`` and ``lambda`` are ``None`` for ``n = 1``."""
    row = {"n": n, "w": table_w(beta, n)}
    if n >= 2:
        row.update(Z=table_Z(beta, n), psi=table_psi(beta, n), lam=table_lambda(beta, n))
    else:
        row.update(Z=None, psi=None, lam=None)
    return row
