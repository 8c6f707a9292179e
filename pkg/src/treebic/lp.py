"""Exact rational linear programming and a few exact linear-algebra helpers.

The simplex method below is a dense two-phase tableau implementation with
Bland's rule, so it terminates and every reported value is an exact
``Fraction``. It is meant for the small programs arising from Newton
polyhedra (tens of rows and columns), not for general use.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


@dataclass
class LPResult:
    status: str
    x: list | None = None
    value: Fraction | None = None


def linprog_exact(c: Sequence, A_ub: Sequence[Sequence] = (), b_ub: Sequence = (),
                  A_eq: Sequence[Sequence] = (), b_eq: Sequence = ()) -> LPResult:
    """Minimise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and ``x >= 0``."""
    nvar = len(c)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    slack_of: list[int | None] = []
    n_ub = len(A_ub)
    ncol = nvar + n_ub
    for k, (row, b) in enumerate(zip(A_ub, b_ub)):
        r = [Fraction(v) for v in row] + [Fraction(0)] * n_ub
        r[nvar + k] = Fraction(1)
        rows.append(r)
        rhs.append(Fraction(b))
        slack_of.append(nvar + k)
    for row, b in zip(A_eq, b_eq):
        rows.append([Fraction(v) for v in row] + [Fraction(0)] * n_ub)
        rhs.append(Fraction(b))
        slack_of.append(None)
    for r in rows:
        if len(r) != ncol:
            raise ValueError("constraint row has the wrong length")

    # Rows with a nonnegative rhs and their own slack start basic on it;
    # everything else gets an artificial variable.
    basis: list[int] = []
    art_cols = []
    for i in range(len(rows)):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]
        elif slack_of[i] is not None:
            basis.append(slack_of[i])
            continue
        art_cols.append(i)
        basis.append(-1)
    n_art = len(art_cols)
    total = ncol + n_art
    for i in range(len(rows)):
        rows[i].extend([Fraction(0)] * n_art)
    for k, i in enumerate(art_cols):
        rows[i][ncol + k] = Fraction(1)
        basis[i] = ncol + k

    tab = _Tableau(rows, rhs, basis)
    if n_art:
        phase1 = [Fraction(0)] * ncol + [Fraction(1)] * n_art
        tab.solve(phase1, allowed=total)
        if tab.objective(phase1) != 0:
            return LPResult(INFEASIBLE)
        tab.drive_out(range(ncol, total))
    cost = [Fraction(v) for v in c] + [Fraction(0)] * (total - nvar)
    status = tab.solve(cost, allowed=ncol)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    x = tab.solution(total)[:nvar]
    return LPResult(OPTIMAL, x, sum((ci * xi for ci, xi in zip(cost, x)), Fraction(0)))


class _Tableau:
    def __init__(self, rows, rhs, basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def objective(self, cost) -> Fraction:
        return sum((cost[b] * self.rhs[i] for i, b in enumerate(self.basis)), Fraction(0))

    def solution(self, ncol) -> list[Fraction]:
        x = [Fraction(0)] * ncol
        for i, b in enumerate(self.basis):
            x[b] = self.rhs[i]
        return x

    def _reduced(self, cost, allowed):
        red = list(cost[:allowed])
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                for j in range(allowed):
                    if row[j]:
                        red[j] -= cb * row[j]
        return red

    def pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        piv = row[col]
        if piv != 1:
            row = [v / piv for v in row]
            self.rows[r] = row
            self.rhs[r] = self.rhs[r] / piv
        nz = [j for j, v in enumerate(row) if v]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[col]
            if f:
                for j in nz:
                    other[j] -= f * row[j]
                self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = col

    def solve(self, cost, allowed: int) -> str:
        while True:
            red = self._reduced(cost, allowed)
            basic = set(self.basis)
            enter = next((j for j in range(allowed) if red[j] < 0 and j not in basic), None)
            if enter is None:
                return OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best[0] or (ratio == best[0] and self.basis[i] < self.basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return UNBOUNDED
            self.pivot(best[1], enter)

    def drive_out(self, artificial) -> None:
        art = set(artificial)
        for i in range(len(self.rows)):
            if self.basis[i] in art:
                col = next((j for j, v in enumerate(self.rows[i]) if v and j not in art), None)
                if col is not None:
                    self.pivot(i, col)


# ---------------------------------------------------------------------------
# Exact linear algebra
# ---------------------------------------------------------------------------

def rref(matrix: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    m = [[Fraction(v) for v in row] for row in matrix]
    pivots: list[int] = []
    if not m:
        return m, pivots
    ncol = len(m[0])
    r = 0
    for col in range(ncol):
        piv = next((i for i in range(r, len(m)) if m[i][col]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][col]
        m[r] = [v / p for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col]:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(matrix: Sequence[Sequence]) -> int:
    return len(rref(matrix)[1])


def nullspace(matrix: Sequence[Sequence], ncol: int | None = None) -> list[list[Fraction]]:
    if not matrix:
        if ncol is None:
            raise ValueError("ncol is needed for an empty matrix")
        return [[Fraction(int(i == j)) for j in range(ncol)] for i in range(ncol)]
    m, pivots = rref(matrix)
    ncol = len(m[0])
    free = [j for j in range(ncol) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncol
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -m[i][f]
        basis.append(v)
    return basis


def affine_dimension(points: Sequence[Sequence]) -> int:
    if not points:
        return -1
    base = points[0]
    return rank([[Fraction(a) - Fraction(b) for a, b in zip(p, base)] for p in points[1:]]) \
        if len(points) > 1 else 0
