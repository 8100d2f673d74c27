"""Fragmentation trees over finite label sets.

A fragmentation of a finite set ``B`` is a collection of subsets of ``B``
containing ``B`` itself, in which every non-singleton vertex is partitioned
into ``k >= 2`` children, recursively down to singletons.  Label sets are
stored as integer bitmasks (bit ``i - 1`` for label ``i``) and labels are
limited to ``1..64``.
"""
from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Iterator, NamedTuple, Sequence

MAX_LABEL = 64


def mask_of(labels: Iterable[int]) -> int:
    """Bitmask of an iterable of positive labels."""
    mask = 0
    for i in labels:
        if not 1 <= i <= MAX_LABEL:
            raise ValueError(f"label {i} outside 1..{MAX_LABEL}")
        mask |= 1 << (i - 1)
    return mask


def as_mask(labels: int | Iterable[int]) -> int:
    if isinstance(labels, int):
        return labels
    return mask_of(labels)


def labels_of(mask: int) -> tuple[int, ...]:
    """Ascending labels in ``mask``."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length())
        mask ^= low
    return tuple(out)


def min_label(mask: int) -> int:
    return (mask & -mask).bit_length()


def popcount(mask: int) -> int:
    return mask.bit_count()


def full_mask(n: int) -> int:
    """Mask of ``[n] = {1, ..., n}``."""
    return (1 << n) - 1


class FragTree:
    """Immutable fragmentation tree.

    ``labels`` is the bitmask of the root block; ``children`` are subtrees,
    kept in canonical order (ascending minimum label).  The constructor does
    not check the partition property so that malformed trees can still be
    built and passed to :func:`validate`.
    """

    __slots__ = ("labels", "children", "_hash")

    def __init__(self, labels: int | Iterable[int], children: Iterable[FragTree] = ()):
        mask = as_mask(labels)
        kids = tuple(sorted(children, key=lambda c: (c.labels & -c.labels, c.labels)))
        object.__setattr__(self, "labels", mask)
        object.__setattr__(self, "children", kids)
        object.__setattr__(self, "_hash", hash((mask, kids)))

    @classmethod
    def _trusted(cls, mask: int, kids: tuple) -> FragTree:
        """Construct without sorting; ``kids`` must already be canonical."""
        self = object.__new__(cls)
        object.__setattr__(self, "labels", mask)
        object.__setattr__(self, "children", kids)
        object.__setattr__(self, "_hash", hash((mask, kids)))
        return self

    def __setattr__(self, name, value):
        raise AttributeError("FragTree is immutable")

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, FragTree):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.labels == other.labels
            and self.children == other.children
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"FragTree({self.nested()!r})"

    def __reduce__(self):
        return (FragTree, (self.labels, self.children))

    # -- constructors -----------------------------------------------------

    @classmethod
    def leaf(cls, label: int) -> FragTree:
        return cls(1 << (label - 1))

    @classmethod
    def from_nested(cls, nested) -> FragTree:
        """Build from nested sequences, e.g. ``[[1, 2], 3]``.

        Integers are leaves; a sequence is an internal vertex whose label set
        is the union of its children.
        """
        if isinstance(nested, int):
            return cls.leaf(nested)
        kids = [cls.from_nested(s) for s in nested]
        mask = 0
        for k in kids:
            mask |= k.labels
        return cls(mask, kids)

    @classmethod
    def from_sets(cls, sets: Iterable[int | Iterable[int]]) -> FragTree:
        """Build from the set-of-sets representation of a fragmentation.

        Singletons of the root may be omitted.  Raises ``ValueError`` if the
        collection is not laminar with a unique maximal element.
        """
        masks = {as_mask(s) for s in sets}
        masks.discard(0)
        if not masks:
            raise ValueError("empty collection")
        root = max(masks, key=popcount)
        if any(m & ~root for m in masks):
            raise ValueError("collection has no unique root")
        masks.update(_singletons(root))
        return _from_masks(root, masks)

    @classmethod
    def from_masks(cls, masks: Iterable[int]) -> FragTree:
        """Like :meth:`from_sets` for an iterable of bitmasks."""
        return cls.from_sets(masks)

    # -- queries ----------------------------------------------------------

    @property
    def size(self) -> int:
        return self.labels.bit_count()

    @property
    def members(self) -> tuple[int, ...]:
        return labels_of(self.labels)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def arity(self) -> int:
        return len(self.children)

    def vertices(self) -> Iterator[FragTree]:
        """Pre-order traversal of all vertices (subtrees)."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def internal(self) -> Iterator[FragTree]:
        return (v for v in self.vertices() if v.children)

    def as_sets(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(v.members) for v in self.vertices())

    def masks(self) -> frozenset[int]:
        return frozenset(v.labels for v in self.vertices())

    def is_binary(self) -> bool:
        return all(len(v.children) in (0, 2) for v in self.vertices())

    def nested(self):
        """Inverse of :meth:`from_nested`."""
        if not self.children:
            if self.size == 1:
                return min_label(self.labels)
            return list(self.members)
        return [c.nested() for c in self.children]

    def find(self, mask: int) -> FragTree | None:
        for v in self.vertices():
            if v.labels == mask:
                return v
        return None

    def path_to(self, mask: int) -> list[FragTree]:
        """Vertices from the root down to the vertex labelled ``mask``."""
        path = [self]
        node = self
        while node.labels != mask:
            for c in node.children:
                if c.labels & mask == mask:
                    node = c
                    break
            else:
                raise KeyError(f"{labels_of(mask)} is not a vertex")
            path.append(node)
        return path


def _singletons(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low
        mask ^= low


def _from_masks(root: int, masks: set[int]) -> FragTree:
    below = sorted((m for m in masks if m != root and m & root == m), key=popcount, reverse=True)
    kids = []
    covered = 0
    for m in below:
        if m & covered == 0:
            kids.append(m)
            covered |= m
        elif m & covered != m:
            raise ValueError("collection is not laminar")
    if covered and covered != root:
        raise ValueError("children do not cover their parent")
    if not kids and popcount(root) > 1:
        raise ValueError("non-singleton leaf")
    sub = {m for m in masks if m & root == m and m != root}
    return FragTree(root, [_from_masks(k, {m for m in sub if m & k == m}) for k in kids])


class Validation(NamedTuple):
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate(t: FragTree) -> Validation:
    """Check the fragmentation invariants; report the first violated clause."""
    for v in t.vertices():
        if v.labels <= 0:
            return Validation(False, "empty vertex")
        if v.labels >> MAX_LABEL:
            return Validation(False, f"label above {MAX_LABEL}")
        if not v.children:
            if v.size != 1:
                return Validation(False, f"leaf {set(v.members)} is not a singleton")
            continue
        if v.size == 1:
            return Validation(False, f"singleton {set(v.members)} has children")
        if len(v.children) < 2:
            return Validation(False, f"k >= 2 violated at {set(v.members)}")
        union = 0
        for c in v.children:
            if c.labels & union:
                return Validation(False, f"children of {set(v.members)} overlap")
            union |= c.labels
        if union != v.labels:
            return Validation(False, f"children do not partition {set(v.members)}")
        mins = [min_label(c.labels) for c in v.children]
        if mins != sorted(mins):
            return Validation(False, f"children of {set(v.members)} not in canonical order")
    return Validation(True)


def restrict(t: FragTree, A: int | Iterable[int]) -> FragTree:
    """Reduced subtree ``{C & A : C in t, C & A non-empty}`` rooted at ``A``.

    Vertices that coincide after intersecting are collapsed, which contracts
    single-child chains.
    """
    mask = as_mask(A)
    if mask == 0:
        raise ValueError("restriction to the empty set")
    if mask & ~t.labels:
        raise ValueError(f"{labels_of(mask)} is not a subset of the root {t.members}")
    return _restrict(t, mask)


def _restrict(t: FragTree, mask: int) -> FragTree:
    if t.labels == mask:
        return t
    kept = [c for c in t.children if c.labels & mask]
    if len(kept) == 1:
        return _restrict(kept[0], mask & kept[0].labels)
    return FragTree(mask & t.labels, [_restrict(c, c.labels & mask) for c in kept])


Signature = tuple  # sigma[j - 1] = number of vertices with j labels


def signature(t: FragTree) -> Signature:
    """Counts of vertex sizes: ``sig[j-1] = #{A in t : #A = j}``."""
    counts = [0] * t.size
    for v in t.vertices():
        counts[v.size - 1] += 1
    return tuple(counts)


class Shape(NamedTuple):
    """Unlabelled rooted tree; ``children`` sorted ascending.

    Tuples order by leaf count first and then lexicographically by children,
    which gives a total order and a unique canonical form per isomorphism
    class.
    """

    leaves: int
    children: tuple = ()


LEAF_SHAPE = Shape(1, ())


def make_shape(children: Iterable[Shape]) -> Shape:
    kids = tuple(sorted(children))
    return Shape(sum(c.leaves for c in kids), kids)


def shape(t: FragTree) -> Shape:
    if not t.children:
        return Shape(t.size, ())
    return make_shape(shape(c) for c in t.children)


def shape_signature(s: Shape) -> Signature:
    counts = [0] * s.leaves
    stack = [s]
    while stack:
        node = stack.pop()
        counts[node.leaves - 1] += 1
        stack.extend(node.children)
    return tuple(counts)


def automorphisms(s: Shape) -> int:
    """Order of the automorphism group of a leaf-labelled shape.

    Product over vertices of ``m!`` for every group of ``m`` identical child
    shapes.
    """
    total = 1
    stack = [s]
    while stack:
        node = stack.pop()
        for mult in Counter(node.children).values():
            total *= math.factorial(mult)
        stack.extend(node.children)
    return total


def count_labelings(s: Shape) -> int:
    """Number of fragmentations of ``[n]`` with shape ``s``: ``n! / |Aut|``."""
    return math.factorial(s.leaves) // automorphisms(s)


def canonical_labeling(s: Shape, start: int = 1) -> FragTree:
    """A representative fragmentation of ``[start, start + n)`` with shape ``s``."""
    if not s.children:
        return FragTree.leaf(start)
    kids = []
    nxt = start
    for c in s.children:
        kids.append(canonical_labeling(c, nxt))
        nxt += c.leaves
    return FragTree(mask_of(range(start, nxt)), kids)


def relabel(t: FragTree, perm: Sequence[int] | dict[int, int]) -> FragTree:
    """Apply a label bijection (``perm[i]`` or ``perm[i-1]`` for a sequence)."""
    if isinstance(perm, dict):
        f = perm.__getitem__
    else:
        f = lambda i: perm[i - 1]  # noqa: E731
    def go(v: FragTree) -> FragTree:
        return FragTree(mask_of(f(i) for i in v.members), [go(c) for c in v.children])
    return go(t)
