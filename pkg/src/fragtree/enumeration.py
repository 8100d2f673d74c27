"""Exhaustive enumeration of fragmentations, shapes and signatures."""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import comb
from typing import Iterator

from .models import GibbsModel, SplittingRule
from .numeric import UnsupportedOperation
from .trees import (
    LEAF_SHAPE,
    FragTree,
    Shape,
    Signature,
    count_labelings,
    full_mask,
    labels_of,
    make_shape,
    shape,
    shape_signature,
)

BINARY_CAP = 12
ALL_CAP = 9

__all__ = [
    "BINARY_CAP",
    "ALL_CAP",
    "enum_binary",
    "enum_all",
    "count_fragmentations",
    "binary_shapes",
    "labeled_shape_counts",
    "SignatureEntry",
    "SignatureTable",
    "signature_table",
    "find_collisions",
    "signatures_by_recursion",
    "verify_w_expansion",
]


def _check_cap(n: int, cap: int) -> None:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n > cap:
        raise ValueError(f"n = {n} exceeds the enumeration cap {cap}")


def _subsets(mask: int) -> Iterator[int]:
    """Subsets of ``mask`` by increasing size, then lexicographically."""
    bits = [1 << (i - 1) for i in labels_of(mask)]
    for r in range(len(bits) + 1):
        for c in combinations(bits, r):
            yield sum(c)


def enum_binary(n: int, cap: int = BINARY_CAP) -> Iterator[FragTree]:
    """Every binary fragmentation of ``[n]`` exactly once.

    The block containing the smallest label is chosen first at each split,
    so unordered pairs of children are never generated twice.  Subtrees on
    blocks of at most ``_MEMO_SIZE`` labels are cached for the duration of
    the call.
    """
    _check_cap(n, cap)
    yield from _binary(full_mask(n), {})


_MEMO_SIZE = 7


def _binary(mask: int, memo: dict) -> Iterator[FragTree]:
    if mask & (mask - 1) == 0:
        yield FragTree(mask)
        return
    if mask.bit_count() <= _MEMO_SIZE:
        cached = memo.get(mask)
        if cached is None:
            cached = memo[mask] = list(_binary_splits(mask, memo))
        yield from cached
    else:
        yield from _binary_splits(mask, memo)


def _binary_splits(mask: int, memo: dict) -> Iterator[FragTree]:
    low = mask & -mask
    rest = mask ^ low
    make = FragTree._trusted
    for sub in _subsets(rest):
        if sub == rest:
            continue
        left = low | sub
        rights = list(_binary(mask ^ left, memo))
        for tl in _binary(left, memo):
            for tr in rights:
                yield make(mask, (tl, tr))


def _set_partitions(mask: int) -> Iterator[list[int]]:
    if mask == 0:
        yield []
        return
    low = mask & -mask
    rest = mask ^ low
    for sub in _subsets(rest):
        for tail in _set_partitions(rest ^ sub):
            yield [low | sub] + tail


def enum_all(n: int, cap: int = ALL_CAP) -> Iterator[FragTree]:
    """Every fragmentation of ``[n]`` (all arities ``k >= 2``) exactly once."""
    _check_cap(n, cap)
    yield from _all(full_mask(n))


def _all(mask: int) -> Iterator[FragTree]:
    if mask & (mask - 1) == 0:
        yield FragTree(mask)
        return
    for blocks in _set_partitions(mask):
        if len(blocks) < 2:
            continue
        for kids in product(*[list(_all(b)) for b in blocks]):
            yield FragTree(mask, kids)


@lru_cache(maxsize=None)
def count_fragmentations(n: int, binary: bool = True) -> int:
    """Number of (binary) fragmentations of an ``n``-set, by the same first-block recursion."""
    if n == 1:
        return 1
    if binary:
        return sum(comb(n - 1, i - 1) * count_fragmentations(i) * count_fragmentations(n - i) for i in range(1, n))
    # set partitions with >= 2 blocks, weighting each block by its own count
    return sum(_bell_counts(n, k) for k in range(2, n + 1))


@lru_cache(maxsize=None)
def _bell_counts(n: int, k: int) -> int:
    if n == 0:
        return 1 if k == 0 else 0
    if k == 0:
        return 0
    return sum(
        comb(n - 1, i - 1) * count_fragmentations(i, False) * _bell_counts(n - i, k - 1) for i in range(1, n - k + 2)
    )


@lru_cache(maxsize=None)
def binary_shapes(n: int) -> tuple[Shape, ...]:
    """All binary shapes with ``n`` leaves, in canonical order."""
    if n == 1:
        return (LEAF_SHAPE,)
    out = []
    for n1 in range(1, n // 2 + 1):
        for s1 in binary_shapes(n1):
            for s2 in binary_shapes(n - n1):
                if n1 == n - n1 and s2 < s1:
                    continue
                out.append(make_shape((s1, s2)))
    return tuple(sorted(out))


@lru_cache(maxsize=None)
def labeled_shape_counts(n: int) -> dict[Shape, int]:
    """Number of binary fragmentations of ``[n]`` per shape.

    Counted through the labelled generation rule (block with the smallest
    label of size ``i``: ``C(n-1, i-1)`` label choices), without using
    automorphisms.
    """
    if n == 1:
        return {LEAF_SHAPE: 1}
    counts: Counter = Counter()
    for i in range(1, n):
        ways = comb(n - 1, i - 1)
        for s1, c1 in labeled_shape_counts(i).items():
            for s2, c2 in labeled_shape_counts(n - i).items():
                counts[make_shape((s1, s2))] += ways * c1 * c2
    return dict(counts)


@dataclass
class SignatureEntry:
    signature: Signature
    shapes: list[Shape] = field(default_factory=list)
    labelings: list[int] = field(default_factory=list)

    @property
    def Q(self) -> int:
        """Number of fragmentations with this signature."""
        return sum(self.labelings)


@dataclass
class SignatureTable:
    n: int
    entries: dict[Signature, SignatureEntry]

    def total(self) -> int:
        return sum(e.Q for e in self.entries.values())

    def signatures(self) -> set[Signature]:
        return set(self.entries)

    def collisions(self) -> list[SignatureEntry]:
        return [e for e in self.entries.values() if len(e.shapes) >= 2]


def signature_table(n: int, cap: int = BINARY_CAP, literal_cap: int = 7) -> SignatureTable:
    """Group binary fragmentations of ``[n]`` by signature and shape.

    Labelling counts per shape come from :func:`labeled_shape_counts` and are
    checked against ``n! / |Aut|``.  For ``n <= literal_cap`` the trees are
    also enumerated one by one and tallied by shape.
    """
    _check_cap(n, cap)
    counts = labeled_shape_counts(n)
    if n <= literal_cap:
        tally = Counter(shape(t) for t in enum_binary(n, cap))
        if dict(tally) != counts:
            raise ArithmeticError(f"enumerated shape tallies disagree with labelling counts at n={n}")
    entries: dict[Signature, SignatureEntry] = {}
    for s in sorted(counts):
        q = counts[s]
        if q != count_labelings(s):
            raise ArithmeticError(f"labelling count {q} != automorphism formula {count_labelings(s)} for {s}")
        sig = shape_signature(s)
        entry = entries.setdefault(sig, SignatureEntry(sig))
        entry.shapes.append(s)
        entry.labelings.append(q)
    return SignatureTable(n, entries)


def find_collisions(n: int, cap: int = BINARY_CAP) -> list[tuple[Signature, list[Shape]]]:
    """Signatures shared by two or more binary shapes with ``n`` leaves."""
    return [(e.signature, list(e.shapes)) for e in signature_table(n, cap, literal_cap=0).collisions()]


def signatures_by_recursion(n: int) -> set[Signature]:
    """``Sig_n`` built from ``Sig_{n1} + Sig_{n2} + 1_n`` over ``n1 + n2 = n``."""
    return _sigs(n)


@lru_cache(maxsize=None)
def _sigs(n: int) -> frozenset:
    if n == 1:
        return frozenset({(1,)})
    out = set()
    for n1 in range(1, n // 2 + 1):
        for s1 in _sigs(n1):
            for s2 in _sigs(n - n1):
                v = [0] * n
                for j, c in enumerate(s1):
                    v[j] += c
                for j, c in enumerate(s2):
                    v[j] += c
                v[n - 1] += 1
                out.add(tuple(v))
    return frozenset(out)


def verify_w_expansion(model: SplittingRule, n: int) -> bool:
    """Check ``w(n) = sum_sigma Q_sigma prod_j psi(j)**sigma(j)`` exactly."""
    if not isinstance(model, GibbsModel) or not model.binary:
        raise UnsupportedOperation("the w-expansion applies to binary Gibbs models")
    model._require_exact("verify_w_expansion")
    if n > 10:
        raise ValueError("w-expansion check is capped at n = 10")
    table = signature_table(n)
    total = Fraction(0)
    for sig, entry in table.entries.items():
        term = Fraction(entry.Q)
        for j, count in enumerate(sig, start=1):
            if count:
                term *= model.psi(j) ** count
        total += term
    return total == model.w(n)
