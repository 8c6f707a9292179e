import json

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import trivalent_trees
from treebic.errors import TreeError
from treebic.tree import (
    caterpillar_tree, load_tree, parse_tree, quartet_tree, random_trivalent_tree, star_tree,
)

QUARTET = {"root": "a", "leaves": ["1", "2", "3", "4"],
           "edges": [["a", "1"], ["a", "2"], ["a", "b"], ["b", "3"], ["b", "4"]]}


def test_parse_star():
    t = parse_tree({"root": "h", "edges": [["h", "1"], ["h", "2"], ["h", "3"]]})
    assert (t.n, t.n_v, t.n_e) == (3, 4, 3)
    assert t.leaves == ("1", "2", "3")


def test_parse_quartet():
    t = parse_tree(QUARTET)
    assert (t.n, t.n_v, t.n_e) == (4, 6, 5)
    assert t == quartet_tree()


def test_leaf_order_is_declared_order():
    doc = dict(QUARTET, leaves=["4", "3", "2", "1"])
    t = parse_tree(doc)
    assert t.leaf_index("4") == 0 and t.leaf_index("1") == 3


@pytest.mark.parametrize("edges, message", [
    ([["a", "b"], ["b", "c"], ["c", "a"], ["a", "1"], ["b", "2"], ["c", "3"]], "cycle"),
    ([["a", "1"], ["a", "2"], ["a", "1"]], "duplicate edge"),
    ([["a", "1"], ["a", "2"], ["b", "3"], ["b", "4"]], "disconnected"),
])
def test_parse_errors(edges, message):
    with pytest.raises(TreeError, match=message):
        parse_tree({"root": "a", "edges": edges})


def test_root_must_be_a_node():
    with pytest.raises(TreeError, match="not a node"):
        parse_tree(dict(QUARTET, root="z"))


def test_degree_two_rejected():
    with pytest.raises(TreeError, match="degree-two"):
        parse_tree({"root": "r",
                    "edges": [["r", "m"], ["m", "x"], ["x", "1"], ["x", "2"], ["r", "3"]]})


def test_leaf_root_allowed():
    t = parse_tree({"root": "1", "edges": [["1", "h"], ["h", "2"], ["h", "3"]]})
    assert t.is_leaf("1") and t.root == "1" and t.n == 3


def test_bad_json_text():
    with pytest.raises(TreeError, match="invalid JSON"):
        parse_tree("{not json")


def test_load_tree_roundtrip(tmp_path):
    path = tmp_path / "q.json"
    path.write_text(json.dumps(quartet_tree().to_dict()))
    assert load_tree(str(path)) == quartet_tree()


def test_path_edges_quartet():
    t = quartet_tree()
    assert t.path_edges("1", "2").edges == {("a", "1"), ("a", "2")}
    assert t.path_edges("1", "3").edges == {("a", "1"), ("a", "b"), ("b", "3")}
    with pytest.raises(TreeError):
        t.path_edges("1", "1")
    with pytest.raises(TreeError, match="unknown"):
        t.path_edges("1", "zz")


def test_spanning_subtree():
    t = quartet_tree()
    sub, r = t.spanning_subtree(["3", "4"])
    assert r == "b" and set(sub.edges) == {("b", "3"), ("b", "4")}
    sub, r = t.spanning_subtree(t.leaves)
    assert r == "a" and set(sub.edges) == set(t.edges)
    sub, r = star_tree(3, "h").spanning_subtree(["1", "2"])
    assert r == "h" and set(sub.edges) == {("h", "1"), ("h", "2")}
    with pytest.raises(TreeError):
        t.spanning_subtree(["1"])
    with pytest.raises(TreeError):
        t.spanning_subtree(["1", "a"])


def test_spanning_subtree_from_leaf_root():
    t = quartet_tree().rerooted("1")
    sub, r = t.spanning_subtree(["3", "4"])
    assert r == "b"
    sub, r = t.spanning_subtree(["1", "3"])
    assert r == "1"


def test_node_separates():
    t = quartet_tree()
    assert t.node_separates("a", "1", "3")
    assert not t.node_separates("b", "1", "2")
    assert t.node_separates("a", "1", "2")
    assert not t.node_separates("1", "1", "2")


def test_is_trivalent():
    assert quartet_tree().is_trivalent()
    assert star_tree(3).is_trivalent()
    assert not star_tree(4).is_trivalent()


def test_caterpillar_shape():
    t = caterpillar_tree(6)
    assert t.is_trivalent() and t.n == 6 and len(t.inner_nodes) == 4


@settings(max_examples=60, deadline=None)
@given(trivalent_trees(min_n=3, max_n=9))
def test_trivalent_counts(t):
    assert t.n_v == t.n_e + 1
    assert t.n_v == 2 * t.n - 2
    assert t.n_e == 2 * t.n - 3
    assert len(t.inner_nodes) == t.n - 2


@settings(max_examples=60, deadline=None)
@given(trivalent_trees(min_n=3, max_n=8))
def test_path_symmetric_difference(t):
    leaves = t.leaves
    for i in leaves[:3]:
        for j in leaves:
            for k in leaves:
                if len({i, j, k}) < 3:
                    continue
                eij = t.path_edges(i, j).edges
                ejk = t.path_edges(j, k).edges
                assert t.path_edges(i, k).edges == eij ^ ejk


@settings(max_examples=40, deadline=None)
@given(trivalent_trees(min_n=3, max_n=8))
def test_spanning_all_leaves_is_whole_tree(t):
    sub, _ = t.spanning_subtree(t.leaves)
    expected = {frozenset(e) for e in t.edges}
    assert {frozenset(e) for e in sub.edges} == expected


def test_rerooting_keeps_undirected_tree(rng):
    t = random_trivalent_tree(6, rng)
    for v in t.nodes:
        r = t.rerooted(v)
        assert r.root == v
        assert {frozenset(e) for e in r.edges} == {frozenset(e) for e in t.edges}
        assert r.leaves == t.leaves
