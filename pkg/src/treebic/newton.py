"""Real log-canonical thresholds of monomial ideals via Newton polyhedra.

For ``f = sum of squared monomials`` the Newton polyhedron is
``conv(points) + R^d_{>=0}``, where each point is a doubled generator
exponent. The threshold is ``1/t*`` for the smallest ``t`` with
``t (1 + h)`` in the polyhedron (``h`` = prior exponents), and the
multiplicity is the codimension of the smallest face containing that point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .errors import CapacityError
from .lp import OPTIMAL, linprog_exact, nullspace, rank
from .score import RlctPair

MAX_FACE_DIM = 14
MAX_BRUTE_DIM = 8


@dataclass
class ExponentSet:
    points: list[tuple[int, ...]]
    prior: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.points:
            raise ValueError("exponent set is empty")
        pts = [tuple(int(v) for v in p) for p in self.points]
        d = len(pts[0])
        if d == 0 or any(len(p) != d for p in pts):
            raise ValueError("exponent vectors must share a positive dimension")
        if any(v < 0 for p in pts for v in p):
            raise ValueError("exponents must be nonnegative")
        self.points = list(dict.fromkeys(pts))
        if self.prior is None:
            self.prior = (0,) * d
        self.prior = tuple(int(v) for v in self.prior)
        if len(self.prior) != d or any(v < 0 for v in self.prior):
            raise ValueError("prior exponents must be nonnegative with one entry per coordinate")

    @property
    def d(self) -> int:
        return len(self.points[0])

    @property
    def direction(self) -> list[int]:
        return [1 + h for h in self.prior]


@dataclass
class NewtonResult:
    threshold: object            # Fraction, or math.inf without a pole
    multiplicity: int
    t_star: Fraction
    weights: list = field(default_factory=list)      # convex combination hitting t* (1 + h)
    certificate: list = field(default_factory=list)  # supporting normal w with min_a w.a = t*

    @property
    def pair(self) -> RlctPair:
        return RlctPair(self.threshold, self.multiplicity)


def in_newton_polyhedron(points: Sequence[Sequence], x: Sequence) -> bool:
    """Whether ``x`` lies in ``conv(points) + R^d_{>=0}`` (exact LP feasibility)."""
    m, d = len(points), len(x)
    A_ub = [[Fraction(points[k][j]) for k in range(m)] for j in range(d)]
    res = linprog_exact([0] * m, A_ub, list(x), [[1] * m], [1])
    return res.status == OPTIMAL


def hitting_time(E: ExponentSet) -> tuple[Fraction, list[Fraction]]:
    """Solve ``min t`` with ``sum_a lam_a a_j <= t (1 + h_j)``, ``sum lam = 1``."""
    m, d = len(E.points), E.d
    dirn = E.direction
    # variables: lam_1..lam_m, t
    A_ub = [[E.points[k][j] for k in range(m)] + [-dirn[j]] for j in range(d)]
    res = linprog_exact([0] * m + [1], A_ub, [0] * d, [[1] * m + [0]], [1])
    if res.status != OPTIMAL:
        raise RuntimeError(f"hitting-time LP ended with status {res.status}")
    return res.x[m], res.x[:m]


def supporting_certificate(E: ExponentSet) -> tuple[Fraction, list[Fraction]]:
    """Dual program: ``max mu`` over ``w >= 0`` with ``w.(1+h) <= 1`` and ``w.a >= mu`` for all points."""
    m, d = len(E.points), E.d
    dirn = E.direction
    # variables: w_1..w_d, mu (mu >= 0 is harmless because every w.a >= 0)
    A_ub = [[-E.points[k][j] for j in range(d)] + [1] for k in range(m)]
    A_ub.append(list(dirn) + [0])
    res = linprog_exact([0] * d + [-1], A_ub, [0] * m + [1])
    if res.status != OPTIMAL:
        raise RuntimeError(f"certificate LP ended with status {res.status}")
    return res.x[d], res.x[:d]


def normal_cone_dimension(points: Sequence[Sequence], p: Sequence) -> int:
    """Dimension of the normal cone of ``conv(points) + R^d_{>=0}`` at a boundary point ``p``.

    The cone is ``{a >= 0 : a.(v - p) >= 0 for all points v}``. One LP finds the
    constraints that are strict somewhere on the cone; the rest are implicit
    equalities and their rank is the codimension of the cone.
    """
    d = len(p)
    rows = [[Fraction(v[j]) - Fraction(p[j]) for j in range(d)] for v in points]
    unit = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    cons = rows + unit
    K = len(cons)
    # variables: a (d), z (K); maximise sum z with cons_k . a >= z_k, z_k <= 1
    A_ub = []
    b_ub = []
    for k, g in enumerate(cons):
        A_ub.append([-v for v in g] + [Fraction(int(i == k)) for i in range(K)])
        b_ub.append(0)
    for k in range(K):
        A_ub.append([0] * d + [Fraction(int(i == k)) for i in range(K)])
        b_ub.append(1)
    res = linprog_exact([0] * d + [-1] * K, A_ub, b_ub)
    if res.status != OPTIMAL:
        raise RuntimeError(f"normal-cone LP ended with status {res.status}")
    z = res.x[d:]
    implicit = [cons[k] for k in range(K) if z[k] == 0]
    return d - (rank(implicit) if implicit else 0)


def monomial_rlct(E: ExponentSet, check: bool = True) -> NewtonResult:
    """RLCT of ``sum_a x^a`` (``a`` = doubled exponents) against the prior ``x^h``."""
    d = E.d
    if any(all(v == 0 for v in p) for p in E.points):
        return NewtonResult(math.inf, d, Fraction(0))
    t_star, weights = hitting_time(E)
    mu, w = supporting_certificate(E)
    if check and mu != t_star:
        raise RuntimeError(f"primal {t_star} and dual {mu} optimal values disagree")
    p = [t_star * h for h in E.direction]
    mult = normal_cone_dimension(E.points, p)
    return NewtonResult(1 / t_star, mult, t_star, weights, w)


def principal_part_nondegenerate(E: ExponentSet, max_dim: int = MAX_FACE_DIM) -> bool:
    """Nondegeneracy of the principal part for a sum of squared monomials.

    On every face the restricted polynomial is a sum of squares of monomials,
    hence strictly positive on the torus, so it has no singular zero there.
    The check only validates the input shape.
    """
    if E.d > max_dim:
        raise CapacityError(f"dimension {E.d} exceeds the face-enumeration cap {max_dim}")
    if any(v % 2 for p in E.points for v in p):
        raise ValueError("odd exponent: not a sum of squared monomials")
    return True


def _primitive(vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
    lead = next(v for v in vec if v)
    vec = [v / abs(lead) for v in vec]
    den = math.lcm(*(v.denominator for v in vec))
    ints = [int(v * den) for v in vec]
    g = math.gcd(*ints)
    return tuple(Fraction(v // g) for v in ints)


def newton_facets(points: Sequence[Sequence], max_dim: int = MAX_BRUTE_DIM) -> list[tuple[tuple, Fraction]]:
    """Facets ``a.x >= c`` of ``conv(points) + R^d_{>=0}`` by brute force (small ``d``).

    Each facet hyperplane is spanned by some affinely independent points
    together with coordinate directions along which it is parallel.
    """
    pts = [tuple(Fraction(v) for v in p) for p in dict.fromkeys(tuple(p) for p in points)]
    d = len(pts[0])
    if d > max_dim:
        raise CapacityError(f"brute-force facet enumeration is capped at d={max_dim}")
    found: dict[tuple, Fraction] = {}
    for k in range(1, min(len(pts), d) + 1):
        for zero in combinations(range(d), d - k):
            for sub in combinations(pts, k):
                eqs = [[a - b for a, b in zip(q, sub[0])] for q in sub[1:]]
                eqs += [[Fraction(int(i == j)) for j in range(d)] for i in zero]
                ns = nullspace(eqs, d)
                if len(ns) != 1:
                    continue
                a = ns[0]
                if all(v <= 0 for v in a):
                    a = [-v for v in a]
                if any(v < 0 for v in a):
                    continue
                a = _primitive(a)
                c = sum(x * y for x, y in zip(a, sub[0]))
                if all(sum(x * y for x, y in zip(a, q)) >= c for q in pts):
                    found[a] = c
    return sorted(found.items())


def face_codimension(points: Sequence[Sequence], x: Sequence) -> int:
    """Codimension of the smallest face containing boundary point ``x`` (brute-force facets)."""
    tight = [list(a) for a, c in newton_facets(points)
             if sum(ai * Fraction(xi) for ai, xi in zip(a, x)) == c]
    return rank(tight) if tight else 0
