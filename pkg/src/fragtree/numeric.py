"""Scalars, parameter parsing and check reports shared across modules.

Exact values are :class:`fractions.Fraction`; approximate values are Python
floats.  Arithmetic between a Fraction and a float already demotes to float,
so the exactness flag of a result is simply its type (see :func:`is_exact`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator, Union

Scalar = Union[Fraction, float]


class InadmissibleModel(ValueError):
    """Parameters outside every admissible regime."""


class UnsupportedOperation(ValueError):
    """Operation not defined for the model's regime or numeric mode."""


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def parse_param(x) -> Fraction | float:
    """Parse a model parameter.

    Integers and ``"p/q"`` strings give exact Fractions; decimal strings and
    floats give floats (float mode); ``"inf"`` gives ``math.inf``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("boolean parameter")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    s = str(x).strip()
    if s.lower() in ("inf", "+inf", "infinity", "∞"):
        return math.inf
    if s.lower() in ("-inf", "-infinity", "-∞"):
        return -math.inf
    if any(ch in s for ch in ".eE"):
        return float(s)
    return Fraction(s)


def fmt(x) -> str:
    """Render a scalar: ``p/q`` for exact values, repr-precision for floats."""
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return fmt(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return fmt(obj)
    return obj


@dataclass
class CheckReport:
    """Outcome of a verification routine.

    ``witness`` describes the first failure (``None`` when passed).
    """

    name: str
    passed: bool
    checked: int = 0
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return jsonable(
            {
                "check": self.name,
                "passed": self.passed,
                "checked": self.checked,
                "witness": self.witness,
                **({"details": self.details} if self.details else {}),
            }
        )


def compositions(n: int, min_parts: int = 1, max_parts: int | None = None) -> Iterator[tuple[int, ...]]:
    """Ordered tuples of positive integers summing to ``n``."""
    if max_parts is None:
        max_parts = n

    def go(rest: int, prefix: tuple[int, ...]):
        if rest == 0:
            if len(prefix) >= min_parts:
                yield prefix
            return
        if len(prefix) == max_parts:
            return
        for first in range(1, rest + 1):
            yield from go(rest - first, prefix + (first,))

    yield from go(n, ())


def integer_partitions(n: int, max_part: int | None = None) -> Iterator[tuple[int, ...]]:
    """Non-increasing tuples of positive integers summing to ``n``."""
    if max_part is None:
        max_part = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in integer_partitions(n - first, first):
            yield (first,) + rest


def set_partition_count(parts: tuple[int, ...]) -> int:
    """Number of set partitions of ``[sum(parts)]`` with these block sizes."""
    n = sum(parts)
    count = math.factorial(n)
    for p in parts:
        count //= math.factorial(p)
    for mult in _multiplicities(parts):
        count //= math.factorial(mult)
    return count


def _multiplicities(parts):
    seen: dict[int, int] = {}
    for p in parts:
        seen[p] = seen.get(p, 0) + 1
    return seen.values()


def rising(x, k: int):
    """Rising factorial ``x (x+1) ... (x+k-1)``."""
    out = Fraction(1) if is_exact(x) else 1.0
    for i in range(k):
        out *= x + i
    return out
