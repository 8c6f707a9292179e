from fractions import Fraction as F

import pytest

from treebic.errors import TreeError
from treebic.newton import ExponentSet, monomial_rlct, principal_part_nondegenerate
from treebic.patterns import classify_pattern
from treebic.qdelta import (
    all_deltas, build_Q_delta, build_path_network, gamma_Q_structure_check, in_gamma_Q,
    multiplicity_proven, newton_pair, pair_edge_polytope, rooted_trivalent_shapes,
    trivalent_shapes, verify_score_via_newton,
)
from treebic.score import RlctPair, score_pattern
from treebic.tree import RootedTree, caterpillar_tree, quartet_tree, star_tree

QUARTET_EDGES = [("a", "1"), ("a", "2"), ("b", "3"), ("b", "4"), ("a", "b")]


def test_q_delta_three_leaf_star():
    q = build_Q_delta(star_tree(3, "h"))
    assert sorted(q.exponents.points) == sorted([(2, 2, 0), (2, 0, 2), (0, 2, 2)])


def test_q_delta_quartet_coordinates():
    q = build_Q_delta(quartet_tree(), ["a", "b"])
    assert q.edges == QUARTET_EDGES
    assert q.coordinates == ["y_a", "y_b", "x_a1", "x_a2", "x_b3", "x_b4", "x_ab"]
    assert q.point(("1", "2")) == (2, 0, 2, 2, 0, 0, 0)
    assert q.point(("3", "4")) == (0, 2, 0, 0, 2, 2, 0)
    assert q.exponents.d == q.tree.n_e + 2


@pytest.mark.parametrize("tree", [quartet_tree(), caterpillar_tree(6), caterpillar_tree(5, "c2")])
def test_terminal_edge_sum(tree):
    for delta in all_deltas(tree):
        q = build_Q_delta(tree, delta)
        m = len(q.marked)
        n_term = len(tree.terminal_edges)
        assert all(sum(p[m:m + n_term]) == 4 for p in q.exponents.points)
        assert principal_part_nondegenerate(q.exponents)


def test_newton_examples():
    assert newton_pair(quartet_tree()) == RlctPair(1, 1)
    cat = caterpillar_tree(5)
    assert newton_pair(cat) == RlctPair(F(5, 4), 1)
    cherry = RootedTree(["1", "2"], "1", [("1", "2")], ["1", "2"])
    assert newton_pair(cherry) == RlctPair(F(1, 2), 1)
    with pytest.raises(ValueError):
        verify_score_via_newton(star_tree(3, "h"))


def test_delta_must_mark_inner_nodes():
    with pytest.raises(ValueError):
        build_Q_delta(quartet_tree(), ["1"])


def test_shape_counts():
    assert [len(trivalent_shapes(n)) for n in (4, 5, 6, 7)] == [1, 1, 2, 2]
    assert [len(rooted_trivalent_shapes(n)) for n in (4, 5, 6, 7)] == [2, 4, 7, 13]


def test_threshold_n_over_4_small():
    for n in (4, 5):
        for t in rooted_trivalent_shapes(n):
            for delta in all_deltas(t):
                pair = newton_pair(t, delta)
                assert pair.threshold == F(n, 4)
                if multiplicity_proven(t, delta):
                    assert pair.multiplicity == 1


def test_unproven_regime_multiplicity_is_reported():
    # root h1 marked, one neighbour marked: multiplicity is computed, not assumed
    t = quartet_tree().rerooted("a")
    pair = newton_pair(t, ["a"])
    assert pair.threshold == 1 and pair.multiplicity >= 1


def test_all_zero_pattern_end_to_end():
    for n in (4, 5, 6):
        for t in rooted_trivalent_shapes(n):
            degenerate = tuple(t.inner_nodes)
            newton = newton_pair(t, degenerate)
            rep = score_pattern(t, classify_pattern(t, t.edges))
            correction = F(-1, 4) if rep.regime.endswith("-A") else F(0)
            assert F(n, 2) + newton.threshold + correction == rep.coefficient


def test_path_network_marked_root_quartet():
    net = build_path_network(quartet_tree(), ["a", "b"])
    assert net.size == 4
    assert net.barycenter == (1, 1, 1, 1, 1, 1, 0)


def test_path_network_unmarked_root_quartet():
    t = quartet_tree()
    net = build_path_network(t, [])
    assert net.size == 8
    assert net.barycenter == (1,) * 5
    assert set(net.edge_cover(t).values()) == {4}
    net = build_path_network(t, ["b"])
    assert net.barycenter[0] == F(1, 2)


def test_path_network_leaf_root():
    t = quartet_tree().rerooted("1")
    net = build_path_network(t, ["a", "b"])
    assert net.size == 8


@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_path_network_properties(n):
    for t in rooted_trivalent_shapes(n):
        for delta in all_deltas(t):
            net = build_path_network(t, delta)
            cover = net.edge_cover(t)
            expect = 2 if t.root in delta else 4
            assert all(cover[e] == expect for e in t.terminal_edges)
            assert net.size == (n if t.root in delta else 2 * n)
            assert all(v <= F(4, n) for v in net.barycenter)


def test_path_network_needs_trivalent():
    with pytest.raises(TreeError):
        build_path_network(star_tree(4))


def test_pair_edge_polytope_quartet():
    rep = pair_edge_polytope(quartet_tree())
    assert rep.edges == QUARTET_EDGES
    assert rep.vertices[0] == (1, 1, 0, 0, 0)       # pair (1, 2)
    assert rep.vertices[1] == (1, 0, 1, 0, 1)       # pair (1, 3)
    assert rep.dimension == 4 and rep.on_hyperplane
    assert rep.claimed_facets == 6 and rep.brute_force_facets == 6 and rep.ok


def test_pair_edge_polytope_errors():
    with pytest.raises(TreeError):
        pair_edge_polytope(star_tree(4))


def test_gamma_structure_quartet():
    t = quartet_tree()
    q = build_Q_delta(t, ["a", "b"])
    assert q.point(("1", "3"))[0] == 2
    assert in_gamma_Q(q, q.point(("1", "3")))
    assert gamma_Q_structure_check(t, ["a", "b"]).ok
    bad = list(q.point(("1", "3")))
    bad[2] += 2
    assert not in_gamma_Q(q, bad)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_gamma_structure_all(n):
    for t in rooted_trivalent_shapes(n):
        for delta in all_deltas(t):
            assert gamma_Q_structure_check(t, delta).ok
