import numpy as np
import pytest
from hypothesis import strategies as st

from treebic.tree import random_trivalent_tree


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@st.composite
def trivalent_trees(draw, min_n=3, max_n=7):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_trivalent_tree(n, np.random.default_rng(seed))


def pattern_with_silent_edges(tree, silent, rng):
    """Zero pattern of an exact model distribution whose ``silent`` edges carry no signal."""
    from fractions import Fraction

    from treebic.moments import model_probs, random_rational_theta
    from treebic.patterns import CountTable, classify_pattern, isolated_edges, sample_covariance

    theta = random_rational_theta(tree, rng)
    for u, v in silent:
        theta.edges[v] = (theta.edges[v][0],) * 2
    # keep every non-silent edge informative
    for u, v in tree.edges:
        t0, t1 = theta.edges[v]
        if (u, v) not in silent and t0 == t1:
            theta.edges[v] = (t0, Fraction(1) - t0 if t0 != Fraction(1, 2) else Fraction(1, 3))
    table = CountTable(tree.n, model_probs(theta, tree))
    return classify_pattern(tree, isolated_edges(tree, sample_covariance(table), 0))


@st.composite
def silent_patterns(draw, min_n=3, max_n=7):
    tree = draw(trivalent_trees(min_n, max_n))
    mask = draw(st.lists(st.booleans(), min_size=tree.n_e, max_size=tree.n_e))
    silent = {e for e, m in zip(tree.edges, mask) if m}
    seed = draw(st.integers(0, 2**32 - 1))
    return tree, pattern_with_silent_edges(tree, silent, np.random.default_rng(seed))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
