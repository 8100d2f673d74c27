"""Split rates of the Yule rule, recovered splitting probabilities, edge lengths."""
from fractions import Fraction

from fragtree import BetaSplitting, RngState, invert_rates, rate_table
from fragtree.io import to_newick
from fragtree.rates import check_complete_monotonicity, lambda_from_measure, sample_timed

model = BetaSplitting(0)
lam = rate_table(model, 12)
for n, value in lam.items():
    print(f"lambda_{n:<2} = {str(value):>6}   from the measure: {lambda_from_measure(0, n):.10f}")

table = invert_rates(lam)
print("p(k, 6-k) from the rates:", [str(table[6][k]) for k in range(1, 6)])
print("p(k, 6-k) from the rule: ", [str(model.split_prob((k, 6 - k))) for k in range(1, 6)])

print("complete monotonicity:", check_complete_monotonicity(rate_table(model, 16), order=4, n_max=12).passed)

# lambda_3 = 7/5 lambda_2 cannot come from a binary rule
try:
    invert_rates([Fraction(1), Fraction(7, 5)])
except ValueError as exc:
    print("rejected:", exc)

timed = sample_timed(model, 6, 1, RngState(3))
print("timed tree:", to_newick(timed.tree, timed.lengths))
