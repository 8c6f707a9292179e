"""Learning coefficients and singular BIC scores for binary latent tree models."""
from .errors import CapacityError, ConstraintError, DataError, TreeError, UnsupportedRegimeError
from .estimator import TreeMarginalLikelihood
from .newton import ExponentSet, monomial_rlct
from .patterns import CountTable, load_counts, pattern_from_counts
from .score import RlctPair, ScoreConfig, ScoreReport, full_score, score_pattern
from .tree import RootedTree, load_tree, parse_tree, quartet_tree, star_tree

__all__ = [
    "CapacityError", "ConstraintError", "CountTable", "DataError", "ExponentSet", "RlctPair",
    "RootedTree", "ScoreConfig", "ScoreReport", "TreeError", "TreeMarginalLikelihood",
    "UnsupportedRegimeError", "full_score", "load_counts", "load_tree", "monomial_rlct",
    "parse_tree", "pattern_from_counts", "quartet_tree", "score_pattern", "star_tree",
]
