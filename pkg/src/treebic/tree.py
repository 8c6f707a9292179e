"""Rooted binary-variable trees.

Node ids are opaque strings. Edges are ``(parent, child)`` pairs directed
away from the root; the leaf order is the order declared by the caller and
identifies leaves with ``0..n-1`` everywhere else in the package.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .errors import TreeError

Edge = tuple[str, str]


@dataclass(frozen=True)
class EdgePath:
    endpoints: tuple[str, str]
    edges: frozenset[Edge]

    def __len__(self) -> int:
        return len(self.edges)


class RootedTree:
    """Immutable rooted tree.

    The constructor checks structure only (connected, acyclic, edges directed
    away from the root, leaves are exactly the degree-one nodes). Input-level
    policy such as rejecting degree-two inner nodes lives in :func:`parse_tree`,
    because spanning subtrees legitimately contain such nodes.
    """

    def __init__(self, nodes: Sequence[str], root: str, edges: Sequence[Edge],
                 leaves: Sequence[str]):
        nodes = tuple(str(v) for v in nodes)
        edges = tuple((str(u), str(v)) for u, v in edges)
        leaves = tuple(str(v) for v in leaves)
        root = str(root)

        if len(set(nodes)) != len(nodes):
            raise TreeError("duplicate node id")
        node_set = set(nodes)
        if root not in node_set:
            raise TreeError(f"root {root!r} is not a node")
        if len(set(edges)) != len(edges):
            raise TreeError("duplicate edge")
        seen_pairs = set()
        for u, v in edges:
            if u not in node_set or v not in node_set:
                raise TreeError(f"edge ({u!r}, {v!r}) uses an unknown node")
            if u == v:
                raise TreeError("cycle detected: self loop")
            key = frozenset((u, v))
            if key in seen_pairs:
                raise TreeError("duplicate edge")
            seen_pairs.add(key)

        adj: dict[str, list[str]] = {v: [] for v in nodes}
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)

        # connectivity / acyclicity from the root
        order = [root]
        seen = {root}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    order.append(w)
                    queue.append(w)
        if len(edges) != len(nodes) - 1:
            if len(edges) >= len(nodes):
                raise TreeError("cycle detected")
            raise TreeError("disconnected")
        if len(seen) != len(nodes):
            # n-1 edges but unreachable nodes means a cycle elsewhere
            raise TreeError("cycle detected")

        parent: dict[str, str] = {}
        for u, v in edges:
            if v in parent:
                raise TreeError(f"node {v!r} has two parents")
            parent[v] = u
        if root in parent:
            raise TreeError("edges must be directed away from the root")

        degree = {v: len(adj[v]) for v in nodes}
        expected_leaves = {v for v in nodes if degree[v] == 1}
        if len(set(leaves)) != len(leaves):
            raise TreeError("duplicate leaf id")
        if set(leaves) != expected_leaves:
            raise TreeError("declared leaves must be exactly the degree-one nodes")
        if len(leaves) < 2:
            raise TreeError("a tree needs at least two leaves")

        self.nodes = nodes
        self.root = root
        self.edges = edges
        self.leaves = leaves
        self._parent = parent
        self._adj = {v: tuple(ws) for v, ws in adj.items()}
        self._children = {v: tuple(w for w in adj[v] if parent.get(w) == v) for v in nodes}
        self._degree = degree
        self._bfs = tuple(order)
        depth = {root: 0}
        for v in order[1:]:
            depth[v] = depth[parent[v]] + 1
        self._depth = depth
        self._leaf_index = {v: i for i, v in enumerate(leaves)}
        self._edge_index = {e: k for k, e in enumerate(edges)}

    # ---- basic bookkeeping ------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.leaves)

    @property
    def n_v(self) -> int:
        return len(self.nodes)

    @property
    def n_e(self) -> int:
        return len(self.edges)

    @property
    def inner_nodes(self) -> tuple[str, ...]:
        return tuple(v for v in self.nodes if v not in self._leaf_index)

    @property
    def terminal_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e[0] in self._leaf_index or e[1] in self._leaf_index)

    @property
    def inner_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges
                     if e[0] not in self._leaf_index and e[1] not in self._leaf_index)

    def is_leaf(self, v: str) -> bool:
        return v in self._leaf_index

    def leaf_index(self, v: str) -> int:
        try:
            return self._leaf_index[v]
        except KeyError:
            raise TreeError(f"{v!r} is not a leaf") from None

    def edge_index(self, e: Edge) -> int:
        return self._edge_index[e]

    def parent(self, v: str) -> str | None:
        self._check(v)
        return self._parent.get(v)

    def children(self, v: str) -> tuple[str, ...]:
        self._check(v)
        return self._children[v]

    def neighbors(self, v: str) -> tuple[str, ...]:
        self._check(v)
        return self._adj[v]

    def degree(self, v: str) -> int:
        self._check(v)
        return self._degree[v]

    def incident_edges(self, v: str) -> tuple[Edge, ...]:
        self._check(v)
        out = []
        if v in self._parent:
            out.append((self._parent[v], v))
        out.extend((v, c) for c in self._children[v])
        return tuple(out)

    def bfs_order(self) -> tuple[str, ...]:
        """Nodes in breadth-first order from the root (parents before children)."""
        return self._bfs

    def depth(self, v: str) -> int:
        self._check(v)
        return self._depth[v]

    def _check(self, v: str) -> None:
        if v not in self._adj:
            raise TreeError(f"unknown node id {v!r}")

    # ---- paths and subtrees -----------------------------------------------
    def path_edges(self, i: str, j: str) -> EdgePath:
        self._check(i)
        self._check(j)
        if i == j:
            raise TreeError("path endpoints must differ")
        edges = set()
        a, b = i, j
        while self._depth[a] > self._depth[b]:
            edges.add((self._parent[a], a))
            a = self._parent[a]
        while self._depth[b] > self._depth[a]:
            edges.add((self._parent[b], b))
            b = self._parent[b]
        while a != b:
            edges.add((self._parent[a], a))
            edges.add((self._parent[b], b))
            a, b = self._parent[a], self._parent[b]
        return EdgePath((i, j), frozenset(edges))

    def path_nodes(self, i: str, j: str) -> list[str]:
        """Nodes on the i-j path, in order from i to j."""
        up_i, up_j = [i], [j]
        a, b = i, j
        while self._depth[a] > self._depth[b]:
            a = self._parent[a]
            up_i.append(a)
        while self._depth[b] > self._depth[a]:
            b = self._parent[b]
            up_j.append(b)
        while a != b:
            a, b = self._parent[a], self._parent[b]
            up_i.append(a)
            up_j.append(b)
        return up_i + up_j[-2::-1]

    def path_root(self, i: str, j: str) -> str:
        """Node of the i-j path closest to the root, r(ij)."""
        return min(self.path_nodes(i, j), key=self._depth.__getitem__)

    def node_separates(self, w: str, u: str, v: str) -> bool:
        """True iff ``w`` is an interior node of the u-v path."""
        self._check(w)
        if u == v:
            raise TreeError("u and v must differ")
        nodes = self.path_nodes(u, v)
        return w in nodes[1:-1]

    def spanning_subtree(self, leaf_set: Iterable[str]) -> tuple["RootedTree", str]:
        """Minimal subtree T(I) containing the leaves in ``leaf_set`` and its root r(I)."""
        leaf_set = list(dict.fromkeys(leaf_set))
        for v in leaf_set:
            self._check(v)
            if v not in self._leaf_index:
                raise TreeError(f"{v!r} is not a leaf")
        if len(leaf_set) < 2:
            raise TreeError("need at least two leaves")
        first = leaf_set[0]
        nodes = {first}
        for other in leaf_set[1:]:
            nodes.update(self.path_nodes(first, other))
        sub_root = min(nodes, key=self._depth.__getitem__)
        edges = [e for e in self.edges if e[0] in nodes and e[1] in nodes]
        node_list = [v for v in self.nodes if v in nodes]
        ordered = sorted(leaf_set, key=self._leaf_index.__getitem__)
        return RootedTree(node_list, sub_root, edges, ordered), sub_root

    def is_trivalent(self) -> bool:
        return all(self._degree[v] == 3 for v in self.inner_nodes)

    def leaf_pairs(self) -> list[tuple[str, str]]:
        return list(combinations(self.leaves, 2))

    def rerooted(self, new_root: str) -> "RootedTree":
        """Same undirected tree rooted at ``new_root``; leaf order preserved."""
        self._check(new_root)
        parent = {new_root: None}
        queue = deque([new_root])
        edges = []
        while queue:
            u = queue.popleft()
            for w in self._adj[u]:
                if w not in parent:
                    parent[w] = u
                    edges.append((u, w))
                    queue.append(w)
        return RootedTree(self.nodes, new_root, edges, self.leaves)

    # ---- serialisation -----------------------------------------------------
    def to_dict(self) -> dict:
        return {"root": self.root, "leaves": list(self.leaves),
                "edges": [list(e) for e in self.edges]}

    def __eq__(self, other) -> bool:
        if not isinstance(other, RootedTree):
            return NotImplemented
        return (self.root == other.root and self.leaves == other.leaves
                and set(self.edges) == set(other.edges) and set(self.nodes) == set(other.nodes))

    def __hash__(self) -> int:
        return hash((self.root, self.leaves, frozenset(self.edges)))

    def __repr__(self) -> str:
        return f"RootedTree(root={self.root!r}, n={self.n}, n_e={self.n_e})"


def parse_tree(doc: dict | str, allow_degree_two: bool = False) -> RootedTree:
    """Build a tree from the JSON edge-list document.

    ``doc`` is either the decoded object or its JSON text:
    ``{"root": id, "leaves": [id, ...], "edges": [[parent, child], ...]}``.
    Leaves may be omitted, in which case degree-one nodes are taken in
    first-appearance order.
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise TreeError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "root" not in doc or "edges" not in doc:
        raise TreeError("tree document needs 'root' and 'edges'")
    try:
        edges = [(str(u), str(v)) for u, v in doc["edges"]]
    except (TypeError, ValueError):
        raise TreeError("edges must be [parent, child] pairs") from None
    root = str(doc["root"])
    nodes: list[str] = []
    for e in edges:
        for v in e:
            if v not in nodes:
                nodes.append(v)
    if not edges:
        raise TreeError("tree has no edges")
    if root not in nodes:
        raise TreeError(f"root {root!r} is not a node")
    degree = {v: 0 for v in nodes}
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    if "leaves" in doc:
        leaves = [str(v) for v in doc["leaves"]]
    else:
        leaves = [v for v in nodes if degree[v] == 1]
    _check_cycle(nodes, edges)
    tree = RootedTree(nodes, root, edges, leaves)
    if not allow_degree_two:
        bad = [v for v in tree.inner_nodes if tree.degree(v) == 2]
        if bad:
            raise TreeError(f"degree-two inner node(s) not allowed: {bad}")
    return tree


def _check_cycle(nodes: list[str], edges: list[Edge]) -> None:
    seen = set()
    for u, v in edges:
        key = frozenset((u, v))
        if u != v and key in seen:
            raise TreeError("duplicate edge")
        seen.add(key)
    # union-find so a cycle is reported as such even when edge counts look fine
    parent = {v: v for v in nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            raise TreeError("cycle detected")
        parent[ru] = rv


def load_tree(path: str) -> RootedTree:
    with open(path) as fh:
        return parse_tree(fh.read())


# ---- small constructors used by tests, examples and the validator -----------

def star_tree(n: int = 3, root: str | None = None) -> RootedTree:
    """Star with centre ``h`` and leaves ``1..n``; rooted at the centre unless told otherwise."""
    leaves = [str(i) for i in range(1, n + 1)]
    tree = RootedTree(["h"] + leaves, "h", [("h", v) for v in leaves], leaves)
    return tree if root is None or root == "h" else tree.rerooted(root)


def quartet_tree(root: str = "a") -> RootedTree:
    """Quartet ``12|34`` with inner nodes ``a`` (cherry 1,2) and ``b`` (cherry 3,4)."""
    tree = RootedTree(["a", "1", "2", "b", "3", "4"], "a",
                      [("a", "1"), ("a", "2"), ("a", "b"), ("b", "3"), ("b", "4")],
                      ["1", "2", "3", "4"])
    return tree if root == "a" else tree.rerooted(root)


def caterpillar_tree(n: int, root: str | None = None) -> RootedTree:
    """Trivalent caterpillar on leaves ``1..n`` (n >= 3) with spine ``c1..c{n-2}``."""
    if n < 3:
        raise TreeError("caterpillar needs n >= 3")
    spine = [f"c{k}" for k in range(1, n - 1)]
    leaves = [str(i) for i in range(1, n + 1)]
    edges = [(spine[0], "1"), (spine[0], "2")]
    for k in range(1, len(spine)):
        edges.append((spine[k - 1], spine[k]))
        edges.append((spine[k], str(k + 2)))
    edges.append((spine[-1], str(n)))
    tree = RootedTree(spine + leaves, spine[0], edges, leaves)
    return tree if root is None else tree.rerooted(root)


def random_trivalent_tree(n: int, rng, root: str | None = None,
                          leaf_root: bool | None = None) -> RootedTree:
    """Uniformly grown random trivalent tree on leaves ``1..n``.

    Leaves are attached one at a time by subdividing a random edge. The root
    is ``root`` if given, else a random inner node (or a random leaf when
    ``leaf_root`` is true; a coin flip when it is None).
    """
    if n < 2:
        raise TreeError("need n >= 2")
    if n == 2:
        tree = RootedTree(["1", "2"], "1", [("1", "2")], ["1", "2"])
        return tree
    undirected = [("h1", "1"), ("h1", "2"), ("h1", "3")]
    inner = ["h1"]
    for k in range(4, n + 1):
        u, v = undirected.pop(int(rng.integers(len(undirected))))
        w = f"h{len(inner) + 1}"
        inner.append(w)
        undirected += [(u, w), (w, v), (w, str(k))]
    leaves = [str(i) for i in range(1, n + 1)]
    base = RootedTree(inner + leaves, "h1", _orient(undirected, "h1"), leaves)
    if root is None:
        if leaf_root is None:
            leaf_root = bool(rng.integers(2))
        pool = leaves if leaf_root else inner
        root = pool[int(rng.integers(len(pool)))]
    return base.rerooted(root)


def _orient(undirected: list[Edge], root: str) -> list[Edge]:
    adj: dict[str, list[str]] = {}
    for u, v in undirected:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    out, seen, queue = [], {root}, deque([root])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                out.append((u, w))
                queue.append(w)
    return out
