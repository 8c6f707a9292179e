"""Newton-polyhedron checks of the zero-covariance coefficient on trivalent trees.

``Q_delta`` has one squared monomial per leaf pair ``(i, j)``: the product of
``eta_e`` over the path ``E(ij)``, times ``s_{r(ij)}`` when ``delta`` marks the
top node of the path. Coordinates are ``y_v`` for marked nodes (in BFS order)
followed by ``x_e`` for terminal edges and then inner edges.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .errors import TreeError
from .lp import affine_dimension, nullspace, rank
from .newton import ExponentSet, NewtonResult, monomial_rlct
from .score import RlctPair
from .tree import Edge, RootedTree, _orient


# ---------------------------------------------------------------------------
# Coordinates and Q_delta
# ---------------------------------------------------------------------------

def edge_order(tree: RootedTree) -> list[Edge]:
    return list(tree.terminal_edges) + list(tree.inner_edges)


def check_delta(tree: RootedTree, delta: Iterable[str]) -> tuple[str, ...]:
    delta = set(delta)
    bad = [v for v in delta if v not in tree.nodes or tree.is_leaf(v)]
    if bad:
        raise ValueError(f"delta may only mark inner nodes, got {sorted(bad)}")
    return tuple(v for v in tree.bfs_order() if v in delta)


@dataclass
class QDelta:
    tree: RootedTree
    marked: tuple[str, ...]
    edges: list[Edge]
    pairs: list[tuple[str, str]]
    exponents: ExponentSet

    @property
    def coordinates(self) -> list[str]:
        return [f"y_{v}" for v in self.marked] + [f"x_{u}{v}" for u, v in self.edges]

    def point(self, pair: tuple[str, str]) -> tuple[int, ...]:
        return self.exponents.points[self.pairs.index(pair)]


def pair_point(tree: RootedTree, marked: tuple[str, ...], edges: list[Edge],
               i: str, j: str, scale: int = 2) -> tuple[int, ...]:
    path = tree.path_edges(i, j).edges
    top = tree.path_root(i, j)
    return tuple(scale if v == top else 0 for v in marked) + \
        tuple(scale if e in path else 0 for e in edges)


def build_Q_delta(tree: RootedTree, delta: Iterable[str] = ()) -> QDelta:
    marked = check_delta(tree, delta)
    edges = edge_order(tree)
    pairs = tree.leaf_pairs()
    pts = [pair_point(tree, marked, edges, i, j) for i, j in pairs]
    # ExponentSet drops duplicate points; distinct paths always give distinct points.
    return QDelta(tree, marked, edges, pairs, ExponentSet(pts))


def verify_score_via_newton(tree: RootedTree, delta: Iterable[str] = ()) -> NewtonResult:
    """Threshold and multiplicity of ``Q_delta`` at the origin."""
    if tree.n == 3:
        raise ValueError("the three-leaf tree is excluded; use the three-leaf formulas")
    if tree.n != 2 and not tree.is_trivalent():
        raise TreeError("Q_delta needs a trivalent tree")
    return monomial_rlct(build_Q_delta(tree, delta).exponents)


def multiplicity_proven(tree: RootedTree, delta: Iterable[str]) -> bool:
    """Whether multiplicity one is guaranteed: root unmarked, or root and all its neighbours marked."""
    delta = set(delta)
    r = tree.root
    return r not in delta or all(v in delta for v in tree.neighbors(r))


# ---------------------------------------------------------------------------
# Path networks
# ---------------------------------------------------------------------------

@dataclass
class PathNetwork:
    paths: Counter                 # (leaf, leaf) -> multiplicity
    barycenter: tuple[Fraction, ...]
    core: Edge

    @property
    def size(self) -> int:
        return sum(self.paths.values())

    def edge_cover(self, tree: RootedTree) -> dict[Edge, int]:
        cover = {e: 0 for e in tree.edges}
        for (i, j), m in self.paths.items():
            for e in tree.path_edges(i, j).edges:
                cover[e] += m
        return cover


def _away(tree: RootedTree, v: str, towards: str) -> list[str]:
    return sorted(w for w in tree.neighbors(v) if w != towards)


def build_path_network(tree: RootedTree, delta: Iterable[str] = ()) -> PathNetwork:
    """Canonical network of leaf-to-leaf paths whose barycenter certifies ``(4/n) 1`` in the polyhedron.

    With a marked root: ``n`` paths grown from the cherry paths around a core
    edge at the root. Otherwise: ``2n`` paths, every edge covered four times.
    Choices (core edge, extension order) follow sorted node ids.
    """
    if not tree.is_trivalent() or tree.n < 4:
        raise TreeError("path networks need a trivalent tree with at least four leaves")
    marked = check_delta(tree, delta)
    r = tree.root
    rooted_variant = r in marked
    if tree.is_leaf(r):
        a = tree.neighbors(r)[0]
    else:
        a = r
    b = min(w for w in tree.neighbors(a) if not tree.is_leaf(w))
    ends_a = _away(tree, a, b)
    ends_b = _away(tree, b, a)

    # Partial paths are (end, end) pairs of nodes; each grows at non-leaf ends.
    if rooted_variant:
        partial = [tuple(ends_a), tuple(ends_a), tuple(ends_b), tuple(ends_b)]
        extra = 1
    else:
        partial = [(x, y) for x in ends_a for y in ends_b]
        partial += [tuple(ends_a)] * 2 + [tuple(ends_b)] * 2
        extra = 2
    frontier = [(v, u) for u, ends in ((a, ends_a), (b, ends_b)) for v in ends]
    while frontier:
        frontier.sort()
        v, came = frontier.pop(0)
        if tree.is_leaf(v):
            continue
        c6, c7 = _away(tree, v, came)
        hits = [k for k, p in enumerate(partial) if v in p]
        half = len(hits) // 2
        for idx, k in enumerate(hits):
            new = c6 if idx < half else c7
            x, y = partial[k]
            partial[k] = (new, y) if x == v else (x, new)
        partial += [(c6, c7)] * extra
        frontier += [(c6, v), (c7, v)]

    order = {leaf: k for k, leaf in enumerate(tree.leaves)}
    paths = Counter(tuple(sorted(p, key=order.get)) for p in partial)
    edges = edge_order(tree)
    total = [Fraction(0)] * (len(marked) + len(edges))
    for (i, j), m in paths.items():
        for k, v in enumerate(pair_point(tree, marked, edges, i, j)):
            total[k] += m * v
    size = sum(paths.values())
    return PathNetwork(paths, tuple(t / size for t in total), (a, b))


# ---------------------------------------------------------------------------
# Pair-edge incidence polytope
# ---------------------------------------------------------------------------

@dataclass
class PolytopeReport:
    n: int
    edges: list[Edge]
    vertices: list[tuple[int, ...]]
    dimension: int
    on_hyperplane: bool
    claimed_valid: bool
    claimed_facets: int
    brute_force_facets: int | None
    facets_match: bool | None
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.dimension == 2 * self.n - 4 and self.on_hyperplane and self.claimed_valid
                and self.claimed_facets == 3 * (self.n - 2) and self.facets_match is not False)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": [list(e) for e in self.edges],
            "n_vertices": len(self.vertices),
            "dimension": self.dimension,
            "on_hyperplane": self.on_hyperplane,
            "claimed_valid": self.claimed_valid,
            "claimed_facets": self.claimed_facets,
            "brute_force_facets": self.brute_force_facets,
            "facets_match": self.facets_match,
            "ok": self.ok,
        }


def node_inequalities(tree: RootedTree, edges: list[Edge]) -> list[tuple[int, ...]]:
    """Normals of ``x_e1 + x_e2 - x_e3 >= 0`` for each inner node and each choice of ``e3``."""
    idx = {e: k for k, e in enumerate(edges)}
    out = []
    for v in tree.inner_nodes:
        inc = tree.incident_edges(v)
        for e3 in inc:
            a = [0] * len(edges)
            for e in inc:
                a[idx[e]] = -1 if e == e3 else 1
            out.append(tuple(a))
    return out


def polytope_facets(vertices: list[tuple]) -> list[frozenset[int]]:
    """Facets of a polytope as sets of vertex indices, by brute force over vertex subsets."""
    pts = [tuple(Fraction(v) for v in p) for p in vertices]
    dim = affine_dimension(pts)
    # Project onto coordinates on which the affine hull is a graph.
    diffs = [[a - b for a, b in zip(p, pts[0])] for p in pts[1:]]
    coords = _independent_coordinates(diffs, dim)
    proj = [tuple(p[c] for c in coords) for p in pts]
    found: set[frozenset[int]] = set()
    for sub in combinations(range(len(proj)), dim):
        base = proj[sub[0]]
        eqs = [[a - b for a, b in zip(proj[k], base)] for k in sub[1:]]
        ns = nullspace(eqs, dim)
        if len(ns) != 1:
            continue
        a = ns[0]
        c = sum(x * y for x, y in zip(a, base))
        vals = [sum(x * y for x, y in zip(a, p)) - c for p in proj]
        if all(v >= 0 for v in vals) or all(v <= 0 for v in vals):
            found.add(frozenset(k for k, v in enumerate(vals) if v == 0))
    return sorted(found, key=sorted)


def _independent_coordinates(diffs, dim) -> list[int]:
    chosen: list[int] = []
    for c in range(len(diffs[0])):
        trial = chosen + [c]
        if rank([[row[k] for k in trial] for row in diffs]) == len(trial):
            chosen = trial
        if len(chosen) == dim:
            break
    return chosen


def pair_edge_polytope(tree: RootedTree, brute_force: bool | None = None) -> PolytopeReport:
    """Path-indicator vertices and a check of dimension, equation and the node facets."""
    if not tree.is_trivalent() or tree.n < 4:
        raise TreeError("the pair-edge polytope check needs a trivalent tree with n >= 4")
    edges = edge_order(tree)
    verts = [pair_point(tree, (), edges, i, j, scale=1) for i, j in tree.leaf_pairs()]
    dim = affine_dimension(verts)
    n_term = len(tree.terminal_edges)
    on_plane = all(sum(v[:n_term]) == 2 for v in verts)
    claimed = node_inequalities(tree, edges)
    valid = True
    tight_sets = []
    for a in claimed:
        vals = [sum(x * y for x, y in zip(a, v)) for v in verts]
        if any(val < 0 for val in vals):
            valid = False
        tight = [v for v, val in zip(verts, vals) if val == 0]
        if affine_dimension(tight) != dim - 1:
            valid = False
        tight_sets.append(frozenset(k for k, val in enumerate(vals) if val == 0))
    distinct = len(set(tight_sets))
    if brute_force is None:
        brute_force = tree.n <= 5
    bf_count = match = None
    if brute_force:
        facets = polytope_facets(verts)
        bf_count = len(facets)
        match = set(facets) == set(tight_sets)
    return PolytopeReport(tree.n, edges, verts, dim, on_plane, valid, distinct, bf_count, match)


# ---------------------------------------------------------------------------
# Structure of the Newton polytope of Q_delta
# ---------------------------------------------------------------------------

def f_r(tree: RootedTree, marked: tuple[str, ...], edges: list[Edge], x) -> list[Fraction]:
    """The affine lift from edge coordinates to the marked-node coordinates."""
    idx = {e: k for k, e in enumerate(edges)}
    out = []
    for v in marked:
        kids = [x[idx[(v, c)]] for c in tree.children(v)]
        if v == tree.root:
            out.append(Fraction(sum(kids)) / 2)
        else:
            out.append(Fraction(sum(kids) - x[idx[(tree.parent(v), v)]]) / 2)
    return out


def in_gamma_Q(q: QDelta, point) -> bool:
    """Membership in the Newton polytope of ``Q_delta`` by its equations and inequalities."""
    m = len(q.marked)
    y, x = list(point[:m]), list(point[m:])
    if any(Fraction(a) != b for a, b in zip(y, f_r(q.tree, q.marked, q.edges, x))):
        return False
    n_term = len(q.tree.terminal_edges)
    if sum(x[:n_term]) != 4:
        return False
    return all(sum(a * b for a, b in zip(normal, x)) >= 0
               for normal in node_inequalities(q.tree, q.edges))


@dataclass
class GammaReport:
    generators_ok: bool
    lift_ok: bool
    barycenter_ok: bool
    negative_control_rejected: bool

    @property
    def ok(self) -> bool:
        return self.generators_ok and self.lift_ok and self.barycenter_ok and self.negative_control_rejected


def gamma_Q_structure_check(tree: RootedTree, delta: Iterable[str] = ()) -> GammaReport:
    q = build_Q_delta(tree, delta)
    m = len(q.marked)
    gens = q.exponents.points
    gens_ok = all(in_gamma_Q(q, p) for p in gens)
    lift_ok = all(f_r(tree, q.marked, q.edges, p[m:]) == list(p[:m]) for p in gens)
    net = build_path_network(tree, q.marked)
    bary_ok = in_gamma_Q(q, net.barycenter)
    bad = list(gens[0])
    bad[m] += 1  # breaks the terminal-edge equation
    return GammaReport(gens_ok, lift_ok, bary_ok, not in_gamma_Q(q, bad))


# ---------------------------------------------------------------------------
# Enumeration of trivalent shapes
# ---------------------------------------------------------------------------

def _canon(tree: RootedTree, v: str, parent: str | None) -> str:
    kids = sorted(_canon(tree, w, v) for w in tree.neighbors(v) if w != parent)
    return "(" + "".join(kids) + ")"


def rooted_shape_key(tree: RootedTree) -> str:
    """Isomorphism key of a rooted tree with unlabelled leaves."""
    return _canon(tree, tree.root, None)


def trivalent_shapes(n: int) -> list[RootedTree]:
    """Unrooted trivalent shapes with ``n >= 3`` leaves (returned rooted at ``h1``)."""
    if n < 3:
        raise ValueError("need n >= 3")
    shapes = {"star": [("h1", "1"), ("h1", "2"), ("h1", "3")]}
    for k in range(4, n + 1):
        nxt = {}
        for und in shapes.values():
            inner = len({v for e in und for v in e if v.startswith("h")})
            for pos in range(len(und)):
                u, v = und[pos]
                w = f"h{inner + 1}"
                new = und[:pos] + und[pos + 1:] + [(u, w), (w, v), (w, str(k))]
                t = _from_undirected(new, k)
                key = min(rooted_shape_key(t.rerooted(x)) for x in t.nodes)
                nxt.setdefault(key, new)
        shapes = nxt
    return [_from_undirected(u, n) for u in shapes.values()]


def _from_undirected(und: list[Edge], n: int) -> RootedTree:
    leaves = [str(i) for i in range(1, n + 1)]
    inner = sorted({v for e in und for v in e if v.startswith("h")}, key=lambda s: int(s[1:]))
    return RootedTree(inner + leaves, "h1", _orient(und, "h1"), leaves)


def rooted_trivalent_shapes(n: int) -> list[RootedTree]:
    """Every rooting (inner node or leaf) of every shape, up to rooted isomorphism."""
    out = {}
    for shape in trivalent_shapes(n):
        for v in shape.nodes:
            t = shape.rerooted(v)
            out.setdefault(rooted_shape_key(t), t)
    return list(out.values())


def all_deltas(tree: RootedTree) -> list[tuple[str, ...]]:
    inner = list(tree.inner_nodes)
    return [tuple(v for k, v in enumerate(inner) if mask >> k & 1) for mask in range(1 << len(inner))]


def newton_pair(tree: RootedTree, delta: Iterable[str] = ()) -> RlctPair:
    return verify_score_via_newton(tree, delta).pair
