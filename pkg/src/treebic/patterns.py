"""Count tables, sample covariances and the covariance zero pattern on a tree."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import DataError
from .moments import _n_from_len, mask_to_pattern, pattern_to_mask, probs_to_lambda
from .tree import Edge, RootedTree

SYNTHETIC_TOL = Fraction(1, 10**8)


@dataclass
class CountTable:
    """Pattern counts; ``counts[mask]`` is an exact nonnegative ``Fraction``."""
    n: int
    counts: list

    def __post_init__(self):
        if len(self.counts) != 1 << self.n:
            raise DataError("counts must have length 2**n")
        if any(c < 0 for c in self.counts):
            raise DataError("counts must be nonnegative")
        if self.N <= 0:
            raise DataError("empty count table (N = 0)")

    @property
    def N(self) -> Fraction:
        return sum(self.counts, Fraction(0))

    @property
    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.counts)

    def proportions(self) -> list[Fraction]:
        N = self.N
        return [c / N for c in self.counts]

    def rows(self) -> list[tuple[str, Fraction]]:
        return [(mask_to_pattern(a, self.n), c) for a, c in enumerate(self.counts)]

    @classmethod
    def from_mapping(cls, rows: Mapping[str, object], n: int | None = None) -> "CountTable":
        if not rows:
            raise DataError("empty count table")
        lengths = {len(p) for p in rows}
        if len(lengths) != 1:
            raise DataError("patterns have different lengths")
        width = lengths.pop()
        if n is not None and width != n:
            raise DataError(f"patterns have length {width}, tree has {n} leaves")
        counts = [Fraction(0)] * (1 << width)
        for pat, c in rows.items():
            if set(pat) - {"0", "1"}:
                raise DataError(f"pattern {pat!r} is not a binary string")
            counts[pattern_to_mask(pat)] = _to_fraction(c)
        return cls(width, counts)

    @classmethod
    def from_probs(cls, p, N=1) -> "CountTable":
        n = _n_from_len(len(p))
        return cls(n, [_to_fraction(x) * _to_fraction(N) for x in p])


def _to_fraction(x) -> Fraction:
    try:
        if isinstance(x, np.integer):
            return Fraction(int(x))
        if isinstance(x, (float, np.floating)):
            if not math.isfinite(x):
                raise ValueError
            return Fraction(float(x))
        return Fraction(str(x).strip()) if isinstance(x, str) else Fraction(x)
    except (ValueError, ZeroDivisionError):
        raise DataError(f"invalid count {x!r}") from None


def parse_counts_csv(text: str, n: int | None = None) -> CountTable:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("counts file is empty") from None
    if header != ["pattern", "count"]:
        raise DataError("counts file must have header 'pattern,count'")
    rows: dict[str, Fraction] = {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not x.strip() for x in rec):
            continue
        if len(rec) != 2:
            raise DataError(f"line {lineno}: expected two fields")
        pat, count = rec[0].strip(), rec[1].strip()
        if pat in rows:
            raise DataError(f"line {lineno}: duplicate pattern {pat}")
        rows[pat] = _to_fraction(count)
    return CountTable.from_mapping(rows, n)


def load_counts(path: str, n: int | None = None) -> CountTable:
    with open(path, newline="") as fh:
        return parse_counts_csv(fh.read(), n)


def counts_to_csv(table: CountTable) -> str:
    out = ["pattern,count"]
    for pat, c in table.rows():
        out.append(f"{pat},{c if c.denominator == 1 else float(c)!r}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Covariances and isolated edges
# ---------------------------------------------------------------------------

def sample_covariance(table: CountTable) -> list[list[Fraction]]:
    """Exact covariance matrix of the leaf variables under the empirical distribution."""
    lam = probs_to_lambda(table.proportions())
    n = table.n
    means = [lam[1 << i] for i in range(n)]
    return [[(lam[(1 << i) | (1 << j)] if i != j else means[i]) - means[i] * means[j]
             for j in range(n)] for i in range(n)]


def default_tol(table: CountTable) -> Fraction | float:
    """``1e-8`` for synthetic (fractional) tables, else ``sqrt(log n / N)``."""
    if not table.is_integral:
        return SYNTHETIC_TOL
    return math.sqrt(math.log(table.n) / float(table.N))


def isolated_edges(tree: RootedTree, cov, tol=0) -> frozenset[Edge]:
    """Edges every one of whose supporting leaf pairs has ``|cov| <= tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    live: set[Edge] = set()
    for a, b in tree.leaf_pairs():
        i, j = tree.leaf_index(a), tree.leaf_index(b)
        if abs(cov[i][j]) > tol:
            live |= tree.path_edges(a, b).edges
    return frozenset(e for e in tree.edges if e not in live)


# ---------------------------------------------------------------------------
# Zero pattern
# ---------------------------------------------------------------------------

@dataclass
class SComponent:
    """Connected component of the forest (V, E minus isolated edges)."""
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    leaves: tuple[str, ...]  # leaves of T inside the component
    l2: int

    @property
    def n_v(self) -> int:
        return len(self.nodes)

    @property
    def n_e(self) -> int:
        return len(self.edges)


@dataclass
class TComponent:
    """Class of isolated edges glued together through degenerate nodes."""
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    boundary: tuple[str, ...]  # nodes of degree one inside the class
    root_inside: bool          # global root is an inner node of this class


@dataclass
class ZeroPattern:
    isolated_edges: frozenset
    degenerate_nodes: frozenset
    forest_degrees: dict
    l1: int       # degenerate inner nodes
    l2: int
    l3: int
    n_deg1: int   # nodes of forest degree one (leaves of T not cut off)
    s_components: list = field(default_factory=list)
    t_components: list = field(default_factory=list)
    promoted: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "isolated_edges": sorted(list(e) for e in self.isolated_edges),
            "degenerate_nodes": sorted(self.degenerate_nodes),
            "l1": self.l1, "l2": self.l2, "l3": self.l3,
        }


def classify_pattern(tree: RootedTree, isolated: Iterable[Edge]) -> ZeroPattern:
    iso = set(isolated)
    unknown = iso - set(tree.edges)
    if unknown:
        raise DataError(f"edges not in tree: {sorted(unknown)}")
    promoted = []
    while True:
        deg = {v: sum(e not in iso for e in tree.incident_edges(v)) for v in tree.nodes}
        bad = [v for v in tree.inner_nodes if deg[v] == 1]
        if not bad:
            break
        # Cannot happen for thresholded covariances; kept so downstream formulas stay defined.
        v = bad[0]
        e = next(e for e in tree.incident_edges(v) if e not in iso)
        iso.add(e)
        promoted.append(e)

    inner = tree.inner_nodes
    degenerate = frozenset(v for v in inner if deg[v] == 0)
    l2 = sum(deg[v] == 2 for v in inner)
    l3 = sum(deg[v] == 3 for v in inner)
    n_deg1 = sum(deg[v] == 1 for v in tree.nodes)

    live = [e for e in tree.edges if e not in iso]
    s_comps = []
    for comp_edges in _edge_components(live, lambda v: True):
        nodes = sorted({x for e in comp_edges for x in e}, key=tree.bfs_order().index)
        s_comps.append(SComponent(
            nodes=tuple(nodes),
            edges=tuple(comp_edges),
            leaves=tuple(v for v in tree.leaves if v in nodes),
            l2=sum(deg[v] == 2 for v in nodes),
        ))

    dead = [e for e in tree.edges if e in iso]
    t_comps = []
    for comp_edges in _edge_components(dead, lambda v: v in degenerate):
        nodes = {x for e in comp_edges for x in e}
        cdeg = {v: sum(v in e for e in comp_edges) for v in nodes}
        order = tree.bfs_order()
        t_comps.append(TComponent(
            nodes=tuple(sorted(nodes, key=order.index)),
            edges=tuple(comp_edges),
            boundary=tuple(sorted((v for v in nodes if cdeg[v] == 1), key=order.index)),
            root_inside=cdeg.get(tree.root, 0) >= 2,
        ))

    return ZeroPattern(
        isolated_edges=frozenset(iso),
        degenerate_nodes=degenerate,
        forest_degrees=deg,
        l1=len(degenerate), l2=l2, l3=l3, n_deg1=n_deg1,
        s_components=s_comps, t_components=t_comps, promoted=promoted,
    )


def _edge_components(edges: list[Edge], glue) -> list[list[Edge]]:
    """Group edges that share a node accepted by ``glue`` (transitively)."""
    parent = list(range(len(edges)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    at: dict[str, list[int]] = {}
    for k, e in enumerate(edges):
        for v in e:
            at.setdefault(v, []).append(k)
    for v, ks in at.items():
        if glue(v):
            for k in ks[1:]:
                parent[find(k)] = find(ks[0])
    groups: dict[int, list[Edge]] = {}
    for k, e in enumerate(edges):
        groups.setdefault(find(k), []).append(e)
    return list(groups.values())


def pattern_from_counts(tree: RootedTree, table: CountTable, tol=None) -> tuple[ZeroPattern, object]:
    if table.n != tree.n:
        raise DataError(f"count table has {table.n} leaves, tree has {tree.n}")
    tol = default_tol(table) if tol is None else tol
    cov = sample_covariance(table)
    return classify_pattern(tree, isolated_edges(tree, cov, tol)), tol


def empirical_loglik(table: CountTable) -> float:
    """``sum_alpha N_alpha log(N_alpha / N)`` with ``0 log 0 = 0``."""
    N = float(table.N)
    c = np.array([float(x) for x in table.counts])
    nz = c > 0
    return float(np.sum(c[nz] * np.log(c[nz] / N)))
