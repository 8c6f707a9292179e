"""Coordinate changes for binary tree models.

Probability vectors are dense sequences of length ``2**n`` indexed by a
bitmask ``alpha`` whose bit ``i`` is the state of leaf ``i`` (declared leaf
order). Moment vectors use the same indexing, with ``lam[mask]`` the
expectation of the product of the leaves in ``mask``.

Everything here works on plain Python numbers, so passing ``Fraction``
entries gives exact results and passing floats gives the float mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConstraintError, DataError, TreeError
from .tree import Edge, RootedTree

MAX_LEAVES = 16


def _n_from_len(size: int) -> int:
    n = size.bit_length() - 1
    if size < 2 or 1 << n != size:
        raise DataError(f"vector length {size} is not a power of two >= 2")
    if n > MAX_LEAVES:
        raise DataError(f"n={n} exceeds the cap of {MAX_LEAVES} leaves")
    return n


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def bits(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def pattern_to_mask(pattern: str) -> int:
    """``'0110'`` -> mask with bits 1 and 2 set (character k is leaf k)."""
    return sum(1 << k for k, ch in enumerate(pattern) if ch == "1")


def mask_to_pattern(mask: int, n: int) -> str:
    return "".join("1" if mask >> k & 1 else "0" for k in range(n))


def subset_mask(tree: RootedTree, leaves: Iterable[str | int]) -> int:
    mask = 0
    for v in leaves:
        mask |= 1 << (v if isinstance(v, int) else tree.leaf_index(v))
    return mask


# ---------------------------------------------------------------------------
# p <-> lambda <-> central moments
# ---------------------------------------------------------------------------

def probs_to_lambda(p: Sequence) -> list:
    """Non-central moments: ``lam[A] = sum of p[B] over B containing A``."""
    n = _n_from_len(len(p))
    lam = list(p)
    for i in range(n):
        bit = 1 << i
        for mask in range(len(lam)):
            if not mask & bit:
                lam[mask] = lam[mask] + lam[mask | bit]
    return lam


def lambda_to_probs(lam: Sequence, check: bool = True) -> list:
    """Inverse of :func:`probs_to_lambda` (Moebius inversion on supersets).

    With ``check`` the result must lie in the probability simplex, otherwise
    :class:`DataError` is raised.
    """
    n = _n_from_len(len(lam))
    if lam[0] != 1:
        raise DataError("lambda of the empty set must equal 1")
    p = list(lam)
    for i in range(n):
        bit = 1 << i
        for mask in range(len(p)):
            if not mask & bit:
                p[mask] = p[mask] - p[mask | bit]
    if check:
        bad = [mask_to_pattern(a, n) for a, v in enumerate(p) if v < 0]
        if bad:
            raise DataError(f"moments are outside the probability simplex (negative at {bad[:4]})")
    return p


def lambda_to_central(lam: Sequence) -> tuple[list, list]:
    """Means and central moments from non-central moments.

    Returns ``(means, mu)`` where ``mu`` is indexed by mask; ``mu[0] = 1`` and
    ``mu[{i}] = 0`` by definition, and for ``|I| >= 2``
    ``mu[I] = sum_{J <= I} (-1)^|J| lam[I \\ J] prod_{i in J} lam[i]``.
    """
    n = _n_from_len(len(lam))
    if lam[0] != 1:
        raise DataError("lambda of the empty set must equal 1")
    means = [lam[1 << i] for i in range(n)]
    zero = lam[0] - lam[0]
    mu = [zero] * len(lam)
    mu[0] = lam[0]
    for mask in range(1, len(lam)):
        if popcount(mask) < 2:
            continue
        total = zero
        sub = mask
        while True:
            term = lam[mask ^ sub]
            for i in bits(sub):
                term = term * means[i]
            total = total - term if popcount(sub) & 1 else total + term
            if sub == 0:
                break
            sub = (sub - 1) & mask
        mu[mask] = total
    return means, mu


def central_to_lambda(means: Sequence, mu: Sequence) -> list:
    """Back-substitution inverse of :func:`lambda_to_central`, by subset size."""
    n = len(means)
    size = 1 << n
    if len(mu) != size:
        raise DataError("mu must have length 2**n")
    one = mu[0] if mu[0] == 1 else 1
    lam: list = [None] * size
    lam[0] = one
    for i in range(n):
        lam[1 << i] = means[i]
    for mask in sorted(range(1, size), key=popcount):
        if popcount(mask) < 2:
            continue
        # mu[I] = lam[I] + sum over nonempty J of (-1)^|J| lam[I\J] prod_J means
        rest = 0
        sub = mask
        while sub:
            term = lam[mask ^ sub]
            for i in bits(sub):
                term = term * means[i]
            rest = rest - term if popcount(sub) & 1 else rest + term
            sub = (sub - 1) & mask
        lam[mask] = mu[mask] - rest
    return lam


# ---------------------------------------------------------------------------
# Partition posets and tree cumulants
# ---------------------------------------------------------------------------

Partition = frozenset  # frozenset of frozensets of leaf ids


class PartitionPoset:
    """Partitions of the leaf set of a subtree obtained by deleting inner edges.

    Elements are deduplicated; the order is refinement. Moebius values are
    computed on demand by the recursion ``mu(p, p) = 1`` and
    ``mu(p, q) = -sum_{p <= d < q} mu(p, d)``.
    """

    def __init__(self, subtree: RootedTree):
        self.subtree = subtree
        inner = subtree.inner_edges
        leaves = set(subtree.leaves)
        elements: list[Partition] = []
        seen = set()
        for keep in product((True, False), repeat=len(inner)):
            removed = {e for e, k in zip(inner, keep) if not k}
            part = _components(subtree, removed, leaves)
            if part not in seen:
                seen.add(part)
                elements.append(part)
        self.elements = elements
        self.top: Partition = frozenset({frozenset(leaves)})
        self._mu: dict[tuple[Partition, Partition], int] = {}

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, item) -> bool:
        return item in set(self.elements)

    @staticmethod
    def leq(pi: Partition, nu: Partition) -> bool:
        return all(any(b <= c for c in nu) for b in pi)

    def mobius(self, pi: Partition, nu: Partition) -> int:
        if pi not in self or nu not in self:
            raise ValueError("partition is not an element of the poset")
        if not self.leq(pi, nu):
            raise ValueError("mobius needs pi <= nu")
        return self._mobius(pi, nu)

    def _mobius(self, pi: Partition, nu: Partition) -> int:
        key = (pi, nu)
        if key in self._mu:
            return self._mu[key]
        if pi == nu:
            val = 1
        else:
            val = -sum(self._mobius(pi, d) for d in self.elements
                       if d != nu and self.leq(pi, d) and self.leq(d, nu))
        self._mu[key] = val
        return val


def _components(tree: RootedTree, removed: set[Edge], leaves: set[str]) -> Partition:
    adj: dict[str, list[str]] = {v: [] for v in tree.nodes}
    for u, v in tree.edges:
        if (u, v) not in removed:
            adj[u].append(v)
            adj[v].append(u)
    seen: set[str] = set()
    blocks = []
    for start in tree.nodes:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    stack.append(w)
        block = frozenset(comp & leaves)
        if block:
            blocks.append(block)
    return frozenset(blocks)


def build_partition_poset(subtree: RootedTree) -> PartitionPoset:
    return PartitionPoset(subtree)


@lru_cache(maxsize=64)
def _cumulant_expansions(tree: RootedTree) -> dict[int, list[tuple[int, tuple[int, ...]]]]:
    """For every leaf subset I (|I| >= 2): nonzero ``(mobius coef, block masks)`` terms."""
    out = {}
    for mask in range(1 << tree.n):
        if popcount(mask) < 2:
            continue
        names = [tree.leaves[i] for i in bits(mask)]
        sub, _ = tree.spanning_subtree(names)
        poset = PartitionPoset(sub)
        terms = []
        for pi in poset.elements:
            if any(len(b) == 1 for b in pi):
                continue  # a singleton block carries a zero central moment
            coef = poset.mobius(pi, poset.top)
            if coef:
                terms.append((coef, tuple(subset_mask(tree, b) for b in pi)))
        out[mask] = terms
    return out


@dataclass
class CumulantVector:
    means: list
    kappa: dict = field(default_factory=dict)  # mask -> value, |mask| >= 2

    def __getitem__(self, mask: int):
        return self.kappa[mask]


def cumulants_from_moments(lam: Sequence, mu: Sequence, tree: RootedTree) -> CumulantVector:
    """Tree cumulants ``kappa_I = sum_pi m(pi, 1) prod_B mu_B`` over the edge-removal poset of T(I)."""
    n = _n_from_len(len(lam))
    if n != tree.n:
        raise DataError("vector size does not match the tree")
    means = [lam[1 << i] for i in range(n)]
    kappa = {}
    zero = lam[0] - lam[0]
    for mask, terms in _cumulant_expansions(tree).items():
        total = zero
        for coef, blocks in terms:
            term = coef
            for b in blocks:
                term = term * mu[b]
            total = total + term
        kappa[mask] = total
    return CumulantVector(means, kappa)


def probs_to_cumulants(p: Sequence, tree: RootedTree) -> CumulantVector:
    lam = probs_to_lambda(p)
    _, mu = lambda_to_central(lam)
    return cumulants_from_moments(lam, mu, tree)


# ---------------------------------------------------------------------------
# Parameters: theta (conditional probabilities) and omega (s, eta)
# ---------------------------------------------------------------------------

@dataclass
class ThetaPoint:
    """``root`` is P(Y_r = 1); ``edges[child] = (P(1 | parent=0), P(1 | parent=1))``."""
    root: object
    edges: dict

    def as_vector(self, tree: RootedTree) -> list:
        out = [self.root]
        for _, v in tree.edges:
            out.extend(self.edges[v])
        return out

    @classmethod
    def from_vector(cls, vec: Sequence, tree: RootedTree) -> "ThetaPoint":
        if len(vec) != 2 * tree.n_e + 1:
            raise DataError(f"theta needs {2 * tree.n_e + 1} entries")
        edges = {v: (vec[1 + 2 * k], vec[2 + 2 * k]) for k, (_, v) in enumerate(tree.edges)}
        return cls(vec[0], edges)


@dataclass
class OmegaPoint:
    s: dict    # node -> s_v = 1 - 2 E[Y_v]
    eta: dict  # (parent, child) -> theta_{1|1} - theta_{1|0}


def theta_to_omega(theta: ThetaPoint, tree: RootedTree) -> OmegaPoint:
    lam = {tree.root: theta.root}
    eta = {}
    for v in tree.bfs_order()[1:]:
        u = tree.parent(v)
        t0, t1 = theta.edges[v]
        lam[v] = t0 * (1 - lam[u]) + t1 * lam[u]
        eta[(u, v)] = t1 - t0
    s = {v: 1 - 2 * lam[v] for v in tree.nodes}
    return OmegaPoint(s, eta)


def omega_constraints_ok(omega: OmegaPoint, tree: RootedTree, tol=0) -> bool:
    s, eta = omega.s, omega.eta
    if not (-1 - tol <= s[tree.root] <= 1 + tol):
        return False
    for u, v in tree.edges:
        e = eta[(u, v)]
        a = (1 - s[u]) * e
        b = (1 + s[u]) * e
        if not (-(1 + s[v]) - tol <= a <= (1 - s[v]) + tol):
            return False
        if not (-(1 - s[v]) - tol <= b <= (1 + s[v]) + tol):
            return False
    return True


def omega_to_theta(omega: OmegaPoint, tree: RootedTree, tol=0) -> ThetaPoint:
    if not omega_constraints_ok(omega, tree, tol):
        raise ConstraintError("omega violates the parameter-space constraints")
    s, eta = omega.s, omega.eta
    edges = {}
    for u, v in tree.edges:
        e = eta[(u, v)]
        t0 = (1 - s[v]) / 2 - e * (1 - s[u]) / 2
        edges[v] = (t0, t0 + e)
    return ThetaPoint((1 - s[tree.root]) / 2, edges)


def model_probs(theta: ThetaPoint, tree: RootedTree) -> list:
    """Leaf marginal ``p_alpha(theta)``, summing the hidden states out by pruning.

    The message of node ``v`` is indexed by its own state and by the states of
    the leaves below it only, so its size is ``2 * 2**(leaves below v)``.
    """
    one = theta.root - theta.root + 1
    zero = one - one
    msgs: dict[str, tuple[list[int], list[list]]] = {}
    for v in reversed(tree.bfs_order()):
        if tree.is_leaf(v):
            below = [tree.leaf_index(v)]
            table = [[one, zero], [zero, one]]
        else:
            below = []
            table = [[one], [one]]
        for c in tree.children(v):
            t0, t1 = theta.edges[c]
            c_below, mc = msgs.pop(c)
            width = len(table[0])
            for b, t in ((0, t0), (1, t1)):
                edge = [(1 - t) * x0 + t * x1 for x0, x1 in zip(mc[0], mc[1])]
                table[b] = [table[b][lo] * e for e in edge for lo in range(width)]
            below += c_below
        msgs[v] = (below, table)
    below, table = msgs[tree.root]
    pr = theta.root
    out = [zero] * (1 << tree.n)
    for local in range(len(table[0])):
        alpha = sum(1 << k for j, k in enumerate(below) if local >> j & 1)
        out[alpha] = (1 - pr) * table[0][local] + pr * table[1][local]
    return out


def model_probs_batch(theta: np.ndarray, tree: RootedTree) -> np.ndarray:
    """Vectorised float version of :func:`model_probs`.

    ``theta`` has shape ``(S, 2 n_e + 1)`` laid out as in
    :meth:`ThetaPoint.as_vector`; the result has shape ``(S, 2**n)``.
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    S = theta.shape[0]
    n = tree.n
    size = 1 << n
    alphas = np.arange(size)
    col = {v: 1 + 2 * k for k, (_, v) in enumerate(tree.edges)}
    msgs = {}
    for v in reversed(tree.bfs_order()):
        if tree.is_leaf(v):
            bit = (alphas >> tree.leaf_index(v)) & 1
            m = np.stack([(bit == 0), (bit == 1)]).astype(float)
            m = np.broadcast_to(m, (S, 2, size)).copy()
        else:
            m = np.ones((S, 2, size))
        for c in tree.children(v):
            mc = msgs.pop(c)
            k = col[c]
            for b in (0, 1):
                t = theta[:, k + b][:, None]
                m[:, b, :] *= (1 - t) * mc[:, 0, :] + t * mc[:, 1, :]
        msgs[v] = m
    m = msgs[tree.root]
    pr = theta[:, 0][:, None]
    return (1 - pr) * m[:, 0, :] + pr * m[:, 1, :]


def kappa_from_params(omega: OmegaPoint, leaves: Iterable[str], tree: RootedTree):
    """Monomial tree-cumulant parameterisation on a trivalent tree.

    ``kappa_I = 1/4 (1 - s_{r(I)}^2) prod_{v in V(I)\\I} s_v^(deg v - 2) prod_{e in E(I)} eta_e``
    with degrees taken in the spanning subtree T(I).
    """
    if not tree.is_trivalent():
        raise TreeError("the monomial parameterisation needs a trivalent tree")
    leaves = list(leaves)
    sub, r = tree.spanning_subtree(leaves)
    s, eta = omega.s, omega.eta
    val = (1 - s[r] * s[r]) / 4
    for v in sub.nodes:
        if sub.is_leaf(v):
            continue
        for _ in range(sub.degree(v) - 2):
            val = val * s[v]
    for e in sub.edges:
        val = val * eta[e]
    return val


def kappa_all_from_params(omega: OmegaPoint, tree: RootedTree) -> dict:
    out = {}
    for mask in range(1 << tree.n):
        if popcount(mask) >= 2:
            out[mask] = kappa_from_params(omega, [tree.leaves[i] for i in bits(mask)], tree)
    return out


def means_from_params(omega: OmegaPoint, tree: RootedTree) -> list:
    return [(1 - omega.s[v]) / 2 for v in tree.leaves]


def random_rational_theta(tree: RootedTree, rng, denominator: int = 24,
                          interior: bool = True) -> ThetaPoint:
    """Random theta with entries ``k / denominator`` (strictly inside (0, 1) when ``interior``)."""
    lo, hi = (1, denominator - 1) if interior else (0, denominator)

    def draw():
        return Fraction(int(rng.integers(lo, hi + 1)), denominator)

    return ThetaPoint(draw(), {v: (draw(), draw()) for _, v in tree.edges})


def theta_from_mapping(tree: RootedTree, root, edges: Mapping) -> ThetaPoint:
    missing = [v for _, v in tree.edges if v not in edges]
    if missing:
        raise DataError(f"theta is missing edges into {missing}")
    return ThetaPoint(root, {v: tuple(edges[v]) for _, v in tree.edges})
