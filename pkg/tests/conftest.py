from fractions import Fraction

from hypothesis import HealthCheck, settings, strategies as st

from fragtree.models import BetaSplitting, EwensPitman
from fragtree.rng import RngState
from fragtree.samplers import sample_growth
from fragtree.trees import relabel

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_BINARY = BetaSplitting(0)
_MULTI = EwensPitman(Fraction(1, 2), Fraction(1, 2))


@st.composite
def frag_trees(draw, min_n=1, max_n=9, binary=None):
    """Random fragmentations of ``[n]`` with shuffled labels."""
    n = draw(st.integers(min_n, max_n))
    is_binary = draw(st.booleans()) if binary is None else binary
    seed = draw(st.integers(0, 2**32 - 1))
    tree = sample_growth(_BINARY if is_binary else _MULTI, n, RngState(seed))
    perm = draw(st.permutations(range(1, n + 1)))
    return relabel(tree, perm)


@st.composite
def trees_with_subset(draw, **kw):
    t = draw(frag_trees(**kw))
    members = t.members
    sub = draw(st.sets(st.sampled_from(members), min_size=1))
    return t, sorted(sub)


# one line per acceptance criterion, printed after the run
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
