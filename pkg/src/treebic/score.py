"""Closed-form learning coefficients for binary latent tree models."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering

from .em import A2Report, check_A2
from .errors import UnsupportedRegimeError
from .patterns import CountTable, ZeroPattern, empirical_loglik, pattern_from_counts
from .tree import RootedTree

SCHEMA_VERSION = "1.0"


@total_ordering
@dataclass(frozen=True)
class RlctPair:
    """Threshold and multiplicity; ``multiplicity=None`` means known only to be at least 1.

    The threshold is a ``Fraction``, or ``math.inf`` when there is no pole.

    Pairs are ordered by threshold, then by reversed multiplicity: a larger
    multiplicity at the same threshold is the smaller pair.
    """
    threshold: Fraction
    multiplicity: int | None = 1

    def __post_init__(self):
        if self.threshold != math.inf:
            object.__setattr__(self, "threshold", Fraction(self.threshold))
        if self.multiplicity is not None and self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")

    def _key(self, other: "RlctPair"):
        if self.threshold == other.threshold and None in (self.multiplicity, other.multiplicity) \
                and self.multiplicity != other.multiplicity:
            raise TypeError("cannot order pairs with equal thresholds and unknown multiplicity")
        return (self.threshold, -(self.multiplicity or 0)), (other.threshold, -(other.multiplicity or 0))

    def __lt__(self, other: "RlctPair") -> bool:
        a, b = self._key(other)
        return a < b

    def __str__(self) -> str:
        m = "unknown (>= 1)" if self.multiplicity is None else str(self.multiplicity)
        return f"({self.threshold}, {m})"


@dataclass
class ScoreReport:
    coefficient: Fraction
    multiplicity: int | None
    loglog_known: bool
    regime: str
    l1: int
    l2: int
    l3: int
    components: list
    max_loglik: float | None = None
    N: float | None = None
    warnings: list = field(default_factory=list)

    @property
    def pair(self) -> RlctPair:
        return RlctPair(self.coefficient, self.multiplicity)

    @property
    def log_evidence(self) -> float | None:
        """``l_N - lambda log N + (m - 1) log log N``; the last term is dropped when m is unknown."""
        if self.max_loglik is None or self.N is None:
            return None
        val = self.max_loglik - float(self.coefficient) * math.log(self.N)
        if self.multiplicity is not None and self.multiplicity > 1:
            val += (self.multiplicity - 1) * math.log(math.log(self.N))
        return val

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "lambda": frac_str(self.coefficient),
            "lambda_float": float(self.coefficient),
            "multiplicity": self.multiplicity,
            "loglog_known": self.loglog_known,
            "regime": self.regime,
            "l1": self.l1, "l2": self.l2, "l3": self.l3,
            "components": self.components,
            "max_loglik": self.max_loglik,
            "log_evidence": self.log_evidence,
            "warnings": list(self.warnings),
        }


def frac_str(x: Fraction) -> str:
    if x == math.inf:
        return "inf"
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def regular_coefficient(tree: RootedTree) -> Fraction:
    return Fraction(tree.n_v + tree.n_e, 2)


def smooth_score(tree: RootedTree, pattern: ZeroPattern) -> RlctPair:
    """``((n_v + n_e - 2 l2) / 2, 1)``; valid when no inner node is degenerate."""
    if pattern.degenerate_nodes:
        raise UnsupportedRegimeError("smooth formula needs every inner node to be nondegenerate")
    return RlctPair(Fraction(tree.n_v + tree.n_e - 2 * pattern.l2, 2), 1)


def singular_regime(tree: RootedTree, pattern: ZeroPattern) -> str:
    """``'A'``, ``'B'`` or ``'C'`` according to the root and its neighbours."""
    deg = pattern.degenerate_nodes
    r = tree.root
    if r not in deg:
        return "B"
    nbr = [v in deg for v in tree.neighbors(r)]
    if not any(nbr):
        return "A"
    if all(nbr):
        return "B"
    return "C"


def trivalent_singular_score(tree: RootedTree, pattern: ZeroPattern) -> ScoreReport:
    if not pattern.degenerate_nodes:
        pair = smooth_score(tree, pattern)
        return _report(tree, pattern, pair, True, "smooth")
    if not tree.is_trivalent():
        raise UnsupportedRegimeError(
            "no closed form is available for degenerate nodes on a non-trivalent tree")
    if tree.n == 3:
        pair = three_leaf_score(tree, pattern)
        return _report(tree, pattern, pair, True, "three-leaf-special")
    base = Fraction(3 * tree.n + pattern.l2 + 5 * pattern.l3, 4)
    regime = singular_regime(tree, pattern)
    if regime == "A":
        pair = RlctPair(base - Fraction(1, 4), 1)
    elif regime == "B":
        pair = RlctPair(base, 1)
    else:
        pair = RlctPair(base, None)
    return _report(tree, pattern, pair, regime != "C", f"trivalent-singular-case-{regime}")


def three_leaf_score(tree: RootedTree, pattern: ZeroPattern) -> RlctPair:
    """Three-leaf values: 7/2, 5/2, and 2 (inner root) or 9/4 (leaf root) when every edge is isolated."""
    if tree.n != 3:
        raise ValueError("three_leaf_score needs a tree with three leaves")
    if not pattern.degenerate_nodes:
        return smooth_score(tree, pattern)
    if tree.is_leaf(tree.root):
        return RlctPair(Fraction(9, 4), 1)
    return RlctPair(Fraction(2), 1)


def decompose_contributions(tree: RootedTree, pattern: ZeroPattern) -> list[dict]:
    """Itemised coefficient: mean coordinates, forest components and isolated-edge classes."""
    items = [{"kind": "means", "contribution": frac_str(Fraction(tree.n, 2))}]
    for comp in pattern.s_components:
        val = Fraction(comp.n_v + comp.n_e - len(comp.leaves) - 2 * comp.l2, 2)
        items.append({
            "kind": "forest",
            "edges": [list(e) for e in comp.edges],
            "leaves": list(comp.leaves),
            "contribution": frac_str(val),
        })
    for comp in pattern.t_components:
        size = len(comp.boundary)
        val = Fraction(size - 1 if comp.root_inside and size == 3 else size, 4)
        items.append({
            "kind": "isolated",
            "edges": [list(e) for e in comp.edges],
            "boundary": list(comp.boundary),
            "root_inside": comp.root_inside,
            "contribution": frac_str(val),
        })
    return items


def decomposition_total(items: list[dict]) -> Fraction:
    return sum((Fraction(it["contribution"]) for it in items), Fraction(0))


def _report(tree, pattern, pair, loglog_known, regime) -> ScoreReport:
    comps = decompose_contributions(tree, pattern) if tree.is_trivalent() else []
    warnings = []
    if pattern.promoted:
        warnings.append(f"promoted {len(pattern.promoted)} edge(s) to isolated")
    return ScoreReport(pair.threshold, pair.multiplicity, loglog_known, regime,
                       pattern.l1, pattern.l2, pattern.l3, comps, warnings=warnings)


def score_pattern(tree: RootedTree, pattern: ZeroPattern) -> ScoreReport:
    """Dispatch to the smooth, three-leaf or trivalent singular formula."""
    return trivalent_singular_score(tree, pattern)


@dataclass
class ScoreConfig:
    tol: object = None          # None selects the data-driven default
    a2_tol: float = 1e-6
    seed: int = 0
    check_model: bool = True


def full_score(tree: RootedTree, counts: CountTable, config: ScoreConfig | None = None) -> ScoreReport:
    config = config or ScoreConfig()
    pattern, _ = pattern_from_counts(tree, counts, config.tol)
    report = score_pattern(tree, pattern)
    report.N = float(counts.N)
    if config.check_model:
        a2 = check_A2(counts, tree, tol=config.a2_tol, rng=config.seed)
    else:
        a2 = A2Report(all(c > 0 for c in counts.counts), None, None)
    report.warnings.extend(a2.messages)
    if a2.in_model is False:
        report.max_loglik = a2.fit.loglik
        report.warnings.append("heuristic: A2 violated, likelihood from fitted model")
    else:
        report.max_loglik = empirical_loglik(counts)
        if not a2.positive:
            report.warnings.append("heuristic: A2 violated")
    return report
