"""Uniform binary trees from the beta = -3/2 rule.

Every binary tree on [n] is equally likely, and the growth chain places the
new leaf on each of the 2n - 1 edges with the same probability.
"""
from collections import Counter
from fractions import Fraction

from fragtree import BetaSplitting, RngState, attachment_distribution, sample_growth, tree_prob
from fragtree.io import to_newick

model = BetaSplitting(Fraction(-3, 2))
t = sample_growth(model, 6, RngState(7))
print("sampled tree:", to_newick(t))
print("probability:", tree_prob(model, t))

dist = attachment_distribution(model, t)
print("attachment masses:", sorted({str(q) for q in dist.below.values()}))

counts = Counter(sample_growth(model, 4, RngState(1), size=30_000))
print(f"{len(counts)} distinct trees on [4]; frequencies:")
for tree, c in counts.most_common():
    print(f"  {to_newick(tree):<16} {c / 30_000:.4f}")
