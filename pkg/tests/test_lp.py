from fractions import Fraction as F

import numpy as np
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from treebic.lp import (
    INFEASIBLE, OPTIMAL, UNBOUNDED, affine_dimension, linprog_exact, nullspace, rank, rref,
)


def test_small_lp():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    res = linprog_exact([-1, -1], [[1, 2], [3, 1]], [4, 6])
    assert res.status == OPTIMAL
    assert res.x == [F(8, 5), F(6, 5)] and res.value == F(-14, 5)


def test_equality_and_infeasible():
    res = linprog_exact([1, 1], A_eq=[[1, -1]], b_eq=[F(1, 3)])
    assert res.status == OPTIMAL and res.x == [F(1, 3), 0]
    assert linprog_exact([1], [[1]], [-1]).status == INFEASIBLE
    assert linprog_exact([-1, 0], [[0, 1]], [1]).status == UNBOUNDED


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook rule; Bland's rule must terminate.
    c = [F(-3, 4), 150, F(-1, 50), 6]
    A = [[F(1, 4), -60, F(-1, 25), 9], [F(1, 2), -90, F(-1, 50), 3], [0, 0, 1, 0]]
    res = linprog_exact(c, A, [0, 0, 1])
    assert res.status == OPTIMAL and res.value == F(-1, 20)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 5))
def test_matches_highs(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.integers(-5, 6, size=(m, n))
    b = rng.integers(0, 10, size=m)
    c = rng.integers(-5, 6, size=n)
    Aeq = rng.integers(0, 3, size=(1, n))
    beq = [int(Aeq.sum())]  # x = 1 is feasible for the equality row
    ours = linprog_exact(c.tolist(), A.tolist(), b.tolist(), Aeq.tolist(), beq)
    ref = linprog(c, A_ub=A, b_ub=b, A_eq=Aeq, b_eq=beq, bounds=(0, None), method="highs")
    status = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}[ref.status]
    assert ours.status == status
    if status == OPTIMAL:
        assert abs(float(ours.value) - ref.fun) < 1e-7
        x = ours.x
        assert all(v >= 0 for v in x)
        assert all(sum(a * v for a, v in zip(row, x)) <= bb for row, bb in zip(A.tolist(), b.tolist()))


def test_linear_algebra():
    M = [[1, 2, 3], [2, 4, 6], [1, 0, 1]]
    assert rank(M) == 2
    R, piv = rref(M)
    assert piv == [0, 1]
    ns = nullspace(M, 3)
    assert len(ns) == 1
    assert all(sum(a * b for a, b in zip(row, ns[0])) == 0 for row in M)
    assert len(nullspace([], 2)) == 2
    assert affine_dimension([(0, 0), (1, 1), (2, 2)]) == 1
    assert affine_dimension([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]) == 3
