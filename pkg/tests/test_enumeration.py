import math
from fractions import Fraction as F

import pytest

from fragtree.enumeration import (
    binary_shapes,
    count_fragmentations,
    enum_all,
    enum_binary,
    find_collisions,
    signature_table,
    signatures_by_recursion,
    verify_w_expansion,
)
from fragtree.models import BetaSplitting, EwensPitman
from fragtree.numeric import UnsupportedOperation
from fragtree.trees import signature, validate


def double_factorial_count(n):
    return math.factorial(2 * n - 2) // (2 ** (n - 1) * math.factorial(n - 1))


@pytest.mark.parametrize("n, expected", [(1, 1), (3, 3), (4, 15)])
def test_binary_counts_small(n, expected):
    assert sum(1 for _ in enum_binary(n)) == expected


@pytest.mark.parametrize("n", range(1, 9))
def test_binary_enumeration_is_complete_and_distinct(n):
    trees = list(enum_binary(n))
    assert len(trees) == len(set(trees)) == double_factorial_count(n) == count_fragmentations(n)
    if n <= 6:
        assert all(validate(t) and t.is_binary() for t in trees)


@pytest.mark.parametrize("n, expected", [(2, 1), (3, 4), (4, 26), (5, 236)])
def test_all_counts(n, expected):
    trees = list(enum_all(n))
    assert len(trees) == len(set(trees)) == expected == count_fragmentations(n, binary=False)


def test_count_recursion_matches_formula():
    for n in range(1, 16):
        assert count_fragmentations(n) == double_factorial_count(n)


def test_caps():
    with pytest.raises(ValueError):
        next(enum_binary(13))
    with pytest.raises(ValueError):
        next(enum_all(10))
    assert sum(1 for _ in enum_binary(4, cap=4)) == 15


def test_signature_table_n4():
    table = signature_table(4)
    assert table.total() == 15
    assert {s: e.Q for s, e in table.entries.items()} == {(4, 1, 1, 1): 12, (4, 2, 0, 1): 3}


@pytest.mark.parametrize("n", range(1, 11))
def test_signature_table_keys_follow_recursion(n):
    table = signature_table(n)
    assert table.signatures() == signatures_by_recursion(n)
    assert table.total() == double_factorial_count(n)


def test_signatures_from_trees_n7():
    assert {signature(t) for t in enum_binary(7)} == signatures_by_recursion(7)


def test_no_collisions_up_to_eight():
    for n in range(1, 9):
        assert find_collisions(n) == []


def test_collision_at_nine():
    found = dict(find_collisions(9))
    assert (9, 3, 1, 2, 1, 0, 0, 0, 1) in found
    assert len(found[(9, 3, 1, 2, 1, 0, 0, 0, 1)]) == 2
    assert len(found) == 1


def test_shape_counts():
    assert [len(binary_shapes(n)) for n in range(1, 11)] == [1, 1, 1, 2, 3, 6, 11, 23, 46, 98]


def test_w_expansion_examples():
    assert verify_w_expansion(BetaSplitting(F(-3, 2)), 6)
    assert BetaSplitting(F(-3, 2)).w(6) == F(945, 32)
    assert verify_w_expansion(BetaSplitting(math.inf), 5)
    for b in (F(-1), 0, F(5, 2)):
        assert verify_w_expansion(BetaSplitting(b), 2)


@pytest.mark.parametrize("beta", [F(-3, 2), F(-1, 3), 0, 4, math.inf])
def test_w_expansion_holds(beta):
    for n in range(1, 10):
        assert verify_w_expansion(BetaSplitting(beta), n)


def test_w_expansion_preconditions():
    with pytest.raises(UnsupportedOperation):
        verify_w_expansion(EwensPitman(F(1, 2), 0), 4)
    with pytest.raises(UnsupportedOperation):
        verify_w_expansion(BetaSplitting(0.5), 4)
