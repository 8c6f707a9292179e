import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from treebic.errors import DataError
from treebic.estimator import TreeMarginalLikelihood, as_count_table
from treebic.moments import model_probs, random_rational_theta
from treebic.patterns import CountTable
from treebic.tree import quartet_tree, star_tree


def sample_rows(tree, rng, size):
    p = np.array([float(x) for x in model_probs(random_rational_theta(tree, rng), tree)])
    masks = rng.choice(len(p), size=size, p=p)
    return (masks[:, None] >> np.arange(tree.n)) & 1


def test_params_and_clone():
    est = TreeMarginalLikelihood(tree=quartet_tree(), tol=0.05)
    params = est.get_params()
    assert params["tol"] == 0.05 and params["check_model"] is True
    twin = clone(est)
    assert twin.get_params()["tol"] == 0.05


def test_fit_on_rows(rng):
    t = quartet_tree()
    X = sample_rows(t, rng, 5000)
    est = TreeMarginalLikelihood(tree=t.to_dict(), check_model=False).fit(X)
    assert est.n_samples_ == 5000
    assert est.rlct_ == est.report_.coefficient
    assert math.isfinite(est.score())


def test_rows_and_counts_agree(rng):
    t = star_tree(3, "h")
    X = sample_rows(t, rng, 300)
    table = as_count_table(X, 3)
    masks = (X << np.arange(3)).sum(axis=1)
    assert table.counts == [int((masks == a).sum()) for a in range(8)]
    a = TreeMarginalLikelihood(tree=t, check_model=False).fit(X)
    b = TreeMarginalLikelihood(tree=t, check_model=False).fit(table)
    assert a.score() == b.score()


def test_fit_on_mapping():
    est = TreeMarginalLikelihood(tree=star_tree(3, "h")).fit({p: 5 for p in
                                                              ("000", "001", "010", "011", "100", "101", "110", "111")})
    assert est.rlct_ == 2 and est.multiplicity_ == 1


def test_score_other_data(rng):
    t = quartet_tree()
    est = TreeMarginalLikelihood(tree=t, check_model=False).fit(sample_rows(t, rng, 2000))
    other = sample_rows(t, rng, 1000)
    assert est.score(other) != est.score()


def test_errors(rng):
    est = TreeMarginalLikelihood(tree=quartet_tree())
    with pytest.raises(NotFittedError):
        est.score()
    with pytest.raises(DataError):
        est.fit(np.array([[0, 1, 2, 0]]))
    with pytest.raises(DataError):
        est.fit(np.zeros((3, 5), dtype=int))
    with pytest.raises(DataError):
        est.fit(CountTable(3, [1] * 8))
    with pytest.raises(ValueError):
        TreeMarginalLikelihood().fit(np.zeros((2, 2)))
