"""scikit-learn style front end for scoring a fixed rooted tree against binary data."""
from __future__ import annotations

from collections.abc import Mapping

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DataError
from .patterns import CountTable
from .score import ScoreConfig, full_score
from .tree import RootedTree, parse_tree


def as_count_table(X, n: int) -> CountTable:
    """Accept a ``CountTable``, a ``{pattern: count}`` mapping or an ``(N, n)`` 0/1 array."""
    if isinstance(X, CountTable):
        table = X
    elif isinstance(X, Mapping):
        table = CountTable.from_mapping(X, n)
    else:
        arr = check_array(X, dtype=None, ensure_min_samples=1)
        if not np.isin(arr, (0, 1)).all():
            raise DataError("observations must be 0/1")
        arr = arr.astype(np.int64)
        if arr.shape[1] != n:
            raise DataError(f"expected {n} columns (one per leaf), got {arr.shape[1]}")
        masks = (arr << np.arange(n)).sum(axis=1)
        counts = np.bincount(masks, minlength=1 << n)
        table = CountTable(n, [int(c) for c in counts])
    if table.n != n:
        raise DataError(f"data has {table.n} leaves, tree has {n}")
    return table


class TreeMarginalLikelihood(BaseEstimator):
    """Asymptotic log marginal likelihood of a binary latent tree model.

    Parameters
    ----------
    tree : RootedTree or dict
        The rooted tree; a dict is parsed like a tree JSON document.
    tol : float or None
        Threshold for treating a sample covariance as zero. ``None`` picks
        ``1e-8`` for fractional (synthetic) counts and ``sqrt(log n / N)``
        otherwise.
    a2_tol : float
        Largest sup-norm distance between the data and the fitted model that
        still counts as lying on the model.
    random_state : int
        Seed for the EM restarts in the model-membership check.
    check_model : bool
        Run the EM membership check (trivalent trees with at most five leaves).

    Attributes
    ----------
    report_ : ScoreReport
    rlct_ : Fraction
        Learning coefficient lambda.
    multiplicity_ : int or None
        ``None`` when only known to be at least one.
    max_loglik_ : float
    n_samples_ : float
    """

    def __init__(self, tree=None, tol=None, a2_tol=1e-6, random_state=0, check_model=True):
        self.tree = tree
        self.tol = tol
        self.a2_tol = a2_tol
        self.random_state = random_state
        self.check_model = check_model

    def _tree(self) -> RootedTree:
        if isinstance(self.tree, RootedTree):
            return self.tree
        if self.tree is None:
            raise ValueError("a tree is required")
        return parse_tree(self.tree)

    def _config(self) -> ScoreConfig:
        return ScoreConfig(tol=self.tol, a2_tol=self.a2_tol, seed=self.random_state,
                           check_model=self.check_model)

    def fit(self, X, y=None):
        tree = self._tree()
        table = as_count_table(X, tree.n)
        report = full_score(tree, table, self._config())
        self.tree_ = tree
        self.report_ = report
        self.rlct_ = report.coefficient
        self.multiplicity_ = report.multiplicity
        self.max_loglik_ = report.max_loglik
        self.n_samples_ = report.N
        return self

    def score(self, X=None, y=None) -> float:
        """Asymptotic log evidence of ``X`` (of the training data when ``X`` is None)."""
        check_is_fitted(self, "report_")
        if X is None:
            return self.report_.log_evidence
        table = as_count_table(X, self.tree_.n)
        return full_score(self.tree_, table, self._config()).log_evidence
