"""Random generation of fragmentation trees.

Two exact samplers are provided:

* :func:`sample_branching` runs the Markov branching recursion top-down
  (binary rules only);
* :func:`sample_growth` adds leaves ``2, 3, ..., n`` one at a time using the
  attachment probabilities of a consistent rule.  This is the sampler for
  multifurcating rules.

In exact mode every discrete draw is an integer draw against a common
denominator, so sampling is unbiased up to the quality of the bit stream.
Float-mode draws use cumulative sums; a uniform that lands past the last
cumulative value (rounding) is assigned to the last outcome with positive
mass.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Hashable, Iterable, Mapping, Sequence

from .models import GibbsModel, SplittingRule, tree_prob
from .numeric import Scalar, UnsupportedOperation, is_exact
from .rng import RngState, as_rng
from .trees import FragTree, full_mask, labels_of, popcount, restrict

__all__ = [
    "Categorical",
    "AttachmentDistribution",
    "attachment_distribution",
    "attach",
    "grow",
    "GrowthChain",
    "BranchingSampler",
    "sample_growth",
    "sample_branching",
    "growth_law",
    "branching_law",
    "restriction_law",
    "empirical_law",
    "tv_distance",
]


class Categorical:
    """Prepared discrete distribution over ``outcomes``.

    Outcomes with zero mass are dropped.  Exact masses are scaled to
    integers over their least common denominator.
    """

    __slots__ = ("outcomes", "cum", "total", "exact")

    def __init__(self, outcomes: Iterable, masses: Iterable[Scalar]):
        pairs = [(o, m) for o, m in zip(outcomes, masses) if m]
        if not pairs:
            raise ValueError("no outcome has positive mass")
        if any(m < 0 for _, m in pairs):
            raise ValueError("negative mass")
        self.outcomes = [o for o, _ in pairs]
        self.exact = all(is_exact(m) for _, m in pairs)
        cum = []
        if self.exact:
            denom = 1
            for _, m in pairs:
                denom = math.lcm(denom, Fraction(m).denominator)
            acc = 0
            for _, m in pairs:
                acc += int(Fraction(m) * denom)
                cum.append(acc)
        else:
            acc = 0.0
            for _, m in pairs:
                acc += float(m)
                cum.append(acc)
        self.cum = cum
        self.total = acc

    def draw(self, rng: RngState):
        if self.exact:
            r = rng.below(self.total)
        else:
            r = rng.random() * self.total
        idx = bisect_right(self.cum, r)
        if idx >= len(self.outcomes):
            idx = len(self.outcomes) - 1
        return self.outcomes[idx]


@dataclass
class AttachmentDistribution:
    """Conditional law of where leaf ``n + 1`` joins a tree on ``[n]``.

    ``below[A]`` is the mass of inserting a new vertex ``A + {n+1}`` with
    children ``A`` and ``{n+1}``; ``to[B]`` is the mass of adding ``{n+1}``
    as an extra block of the split of ``B`` (multifurcating rules only).
    Keys are vertex bitmasks.
    """

    tree: FragTree
    below: dict[int, Scalar] = field(default_factory=dict)
    to: dict[int, Scalar] = field(default_factory=dict)

    def total(self) -> Scalar:
        return sum(self.below.values()) + sum(self.to.values())

    def sites(self) -> list[tuple[tuple[str, int], Scalar]]:
        out = [(("below", m), p) for m, p in self.below.items()]
        out += [(("to", m), p) for m, p in self.to.items()]
        return out


def attachment_distribution(model: SplittingRule, t: FragTree, method: str | None = None) -> AttachmentDistribution:
    """Exact attachment masses for growing ``t`` by one leaf.

    ``method="ratio"`` multiplies, along the path from the root, the ratio of
    the enlarged split probability to the current one and ends with
    ``p(#A, 1)``; ``method="gibbs"`` uses the weight ratios ``W`` and
    normalization ratios ``C`` of a Gibbs rule.  The default is ``"gibbs"``
    for Gibbs rules and ``"ratio"`` otherwise.

    Raises ``ValueError`` if ``t`` has probability zero or the masses do not
    sum to one (the rule is not consistent).
    """
    if method is None:
        method = "gibbs" if model.gibbs else "ratio"
    if method == "gibbs" and not isinstance(model, GibbsModel):
        raise UnsupportedOperation(f"{model!r} is not of Gibbs form")
    if method not in ("gibbs", "ratio"):
        raise ValueError(f"unknown method {method!r}")
    dist = AttachmentDistribution(t)
    multi = not model.binary
    p = model._split_prob

    def zero_prob(v):
        return ValueError(f"tree has probability zero under {model!r} (vertex {set(v.members)})")

    def walk(v: FragTree, prefix: Scalar) -> None:
        n_v = v.size
        if method == "ratio":
            dist.below[v.labels] = prefix * (p((n_v, 1)) if n_v > 1 else model.one)
        else:
            dist.below[v.labels] = prefix * model.a(2) * model.w(n_v) * model.w(1) / model.norm(n_v + 1)
        if not v.children:
            return
        sizes = tuple(c.size for c in v.children)
        if method == "ratio":
            here = p(sizes)
            if not here:
                raise zero_prob(v)
            if multi:
                dist.to[v.labels] = prefix * p(sizes + (1,)) / here
            for idx, c in enumerate(v.children):
                grown = sizes[:idx] + (sizes[idx] + 1,) + sizes[idx + 1:]
                walk(c, prefix * p(grown) / here)
        else:
            k = len(sizes)
            c_ratio = model.norm(n_v) / model.norm(n_v + 1)
            if not model.a(k) or any(not model.w(s) for s in sizes):
                raise zero_prob(v)
            if multi:
                dist.to[v.labels] = prefix * model.A(k) * model.w(1) * c_ratio
            for c in v.children:
                walk(c, prefix * model.W(c.size) * c_ratio)

    walk(t, model.one)
    total = dist.total()
    if model.exact:
        ok = total == 1
    else:
        ok = math.isclose(total, 1.0, rel_tol=1e-9)
    if not ok:
        raise ValueError(f"attachment masses sum to {total}; {model!r} is not consistent")
    return dist


def attach(t: FragTree, kind: str, mask: int, label: int | None = None) -> FragTree:
    """Add a new leaf ``label`` (default ``#t + 1``) at the given site.

    ``kind="below"`` inserts ``A + {label}`` above vertex ``A``;
    ``kind="to"`` adds ``{label}`` as a new child block of ``B``.  The new
    label is added to every vertex on the path from the root.
    """
    if label is None:
        label = t.size + 1
    bit = 1 << (label - 1)
    if t.labels & bit:
        raise ValueError(f"label {label} already present")
    new_leaf = FragTree(bit)

    def go(v: FragTree) -> FragTree:
        if v.labels == mask:
            if kind == "below":
                return FragTree(v.labels | bit, (v, new_leaf))
            if kind == "to":
                if not v.children:
                    raise ValueError("cannot attach to a leaf")
                return FragTree(v.labels | bit, v.children + (new_leaf,))
            raise ValueError(f"unknown attachment kind {kind!r}")
        return FragTree(v.labels | bit, [go(c) if c.labels & mask == mask else c for c in v.children])

    if t.labels & mask != mask:
        raise KeyError(f"{labels_of(mask)} is not a vertex of the tree")
    return go(t)


def grow(model: SplittingRule, t: FragTree, rng=None) -> FragTree:
    """One step of the growth chain: attach leaf ``#t + 1`` at a random site."""
    rng = as_rng(rng)
    dist = attachment_distribution(model, t)
    sites, masses = zip(*dist.sites())
    kind, mask = Categorical(sites, masses).draw(rng)
    return attach(t, kind, mask)


class GrowthChain:
    """Growth sampler with memoized transition tables (tree -> next-tree law)."""

    def __init__(self, model: SplittingRule):
        self.model = model
        self._next: dict[FragTree, Categorical] = {}

    def step(self, t: FragTree, rng: RngState) -> FragTree:
        table = self._next.get(t)
        if table is None:
            dist = attachment_distribution(self.model, t)
            sites = dist.sites()
            table = Categorical([attach(t, k, m) for (k, m), _ in sites], [q for _, q in sites])
            self._next[t] = table
        return table.draw(rng)

    def sample(self, n: int, rng: RngState) -> FragTree:
        t = FragTree.leaf(1)
        for _ in range(n - 1):
            t = self.step(t, rng)
        return t


def _check_n(n: int) -> None:
    if not 1 <= n <= 64:
        raise ValueError(f"n must be in 1..64, got {n}")


def sample_growth(model: SplittingRule, n: int, rng=None, size: int | None = None):
    """Tree on ``[n]`` grown leaf by leaf from ``{1}``; a list if ``size`` is given."""
    _check_n(n)
    rng = as_rng(rng)
    chain = GrowthChain(model)
    if size is None:
        return chain.sample(n, rng)
    return [chain.sample(n, rng) for _ in range(size)]


class BranchingSampler:
    """Top-down Markov branching sampler for binary rules.

    At a block of size ``m`` the size ``i`` of the child containing the
    smallest label is drawn with probability ``C(m-1, i-1) p(i, m-i)``; its
    ``i - 1`` companions are then a uniformly chosen subset of the remaining
    labels.
    """

    def __init__(self, model: SplittingRule):
        if not model.binary:
            raise UnsupportedOperation(f"top-down sampling is for binary rules; use sample_growth for {model!r}")
        self.model = model
        self._sizes: dict[int, Categorical] = {}
        self._blocks: dict[tuple[int, int], list[int]] = {}
        self._trees: dict[frozenset, FragTree] = {}

    def _size_table(self, m: int) -> Categorical:
        table = self._sizes.get(m)
        if table is None:
            sizes = range(1, m)
            masses = [comb(m - 1, i - 1) * self.model._split_prob((i, m - i)) for i in sizes]
            table = self._sizes[m] = Categorical(sizes, masses)
        return table

    def _choices(self, mask: int, i: int) -> list[int]:
        key = (mask, i)
        blocks = self._blocks.get(key)
        if blocks is None:
            low = mask & -mask
            rest = [1 << (j - 1) for j in labels_of(mask ^ low)]
            blocks = [low + sum(c) for c in combinations(rest, i - 1)]
            self._blocks[key] = blocks
        return blocks

    def sample_masks(self, root: int, rng: RngState) -> frozenset:
        """Bitmasks of the non-singleton vertices of one sampled tree."""
        out = []
        stack = [root]
        while stack:
            mask = stack.pop()
            if mask & (mask - 1) == 0:
                continue
            out.append(mask)
            i = self._size_table(popcount(mask)).draw(rng)
            blocks = self._choices(mask, i)
            left = blocks[rng.below(len(blocks))]
            stack.append(left)
            stack.append(mask ^ left)
        return frozenset(out)

    def sample(self, n: int, rng: RngState) -> FragTree:
        key = self.sample_masks(full_mask(n), rng)
        tree = self._trees.get(key)
        if tree is None:
            tree = self._trees[key] = FragTree.from_masks(key | {full_mask(n)})
        return tree


def sample_branching(model: SplittingRule, n: int, rng=None, size: int | None = None):
    """Markov branching tree on ``[n]``; a list if ``size`` is given."""
    _check_n(n)
    rng = as_rng(rng)
    sampler = BranchingSampler(model)
    if size is None:
        return sampler.sample(n, rng)
    return [sampler.sample(n, rng) for _ in range(size)]


# -- exact laws -----------------------------------------------------------


def growth_law(model: SplittingRule, n: int, method: str | None = None) -> dict[FragTree, Scalar]:
    """Exact law of the growth chain at ``n`` leaves (forward equations)."""
    law: dict[FragTree, Scalar] = {FragTree.leaf(1): model.one}
    for _ in range(n - 1):
        nxt: dict[FragTree, Scalar] = {}
        for t, pt in law.items():
            for (kind, mask), q in attachment_distribution(model, t, method).sites():
                if q:
                    t2 = attach(t, kind, mask)
                    nxt[t2] = nxt.get(t2, 0) + pt * q
        law = nxt
    return law


def branching_law(model: SplittingRule, n: int) -> dict[FragTree, Scalar]:
    """Markov branching probabilities of all trees on ``[n]`` with positive mass."""
    from .enumeration import enum_all, enum_binary

    trees = enum_binary(n) if model.binary else enum_all(n)
    law = {}
    for t in trees:
        p = tree_prob(model, t)
        if p:
            law[t] = p
    return law


def restriction_law(law: Mapping[FragTree, Scalar], A) -> dict[FragTree, Scalar]:
    """Push a law on trees forward through restriction to ``A``."""
    out: dict[FragTree, Scalar] = {}
    for t, p in law.items():
        r = restrict(t, A)
        out[r] = out.get(r, 0) + p
    return out


def empirical_law(samples: Iterable[Hashable]) -> dict:
    counts = Counter(samples)
    total = sum(counts.values())
    return {k: v / total for k, v in counts.items()}


def tv_distance(p: Mapping, q: Mapping) -> float:
    """Total variation distance ``(1/2) sum |p - q|``."""
    keys = set(p) | set(q)
    return sum(abs(p.get(k, 0) - q.get(k, 0)) for k in keys) / 2
