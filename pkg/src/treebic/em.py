"""Maximum-likelihood fitting of the latent tree model and the A2 diagnostic."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .moments import ThetaPoint, model_probs_batch
from .patterns import CountTable
from .tree import RootedTree

FIT_MAX_LEAVES = 5


@dataclass
class FitResult:
    theta: np.ndarray       # layout of ThetaPoint.as_vector
    probs: np.ndarray
    loglik: float
    residual: float         # max |p(theta) - p_hat|

    def theta_point(self, tree: RootedTree) -> ThetaPoint:
        return ThetaPoint.from_vector([float(x) for x in self.theta], tree)


def _joint_tables(tree: RootedTree):
    """All 2**n_v node configurations: node bits and the leaf pattern they induce."""
    nodes = tree.bfs_order()
    n_v = len(nodes)
    configs = np.arange(1 << n_v)
    state = {v: (configs >> k) & 1 for k, v in enumerate(nodes)}
    pattern = np.zeros_like(configs)
    for i, leaf in enumerate(tree.leaves):
        pattern |= state[leaf] << i
    return state, pattern


def em_fit(table: CountTable, tree: RootedTree, rng=None, restarts: int = 8,
           max_iter: int = 2000, tol: float = 1e-12) -> FitResult:
    """EM over the full joint of node states, followed by a bounded least-squares polish."""
    rng = np.random.default_rng(rng)
    counts = np.array([float(c) for c in table.counts])
    N = counts.sum()
    phat = counts / N
    state, pattern = _joint_tables(tree)
    edges = tree.edges
    best = None
    for _ in range(restarts):
        theta = rng.uniform(0.1, 0.9, size=2 * tree.n_e + 1)
        prev = -np.inf
        for _ in range(max_iter):
            logj = np.where(state[tree.root] == 1, np.log(theta[0]), np.log1p(-theta[0]))
            for k, (u, v) in enumerate(edges):
                t = np.where(state[u] == 1, theta[2 + 2 * k], theta[1 + 2 * k])
                logj = logj + np.where(state[v] == 1, np.log(t), np.log1p(-t))
            joint = np.exp(logj)
            marg = np.bincount(pattern, weights=joint, minlength=len(counts))
            ll = float(np.sum(counts[counts > 0] * np.log(marg[counts > 0])))
            w = joint * (counts / np.where(marg > 0, marg, 1))[pattern] / N
            new = np.empty_like(theta)
            new[0] = w[state[tree.root] == 1].sum()
            for k, (u, v) in enumerate(edges):
                for b in (0, 1):
                    sel = state[u] == b
                    den = w[sel].sum()
                    num = w[sel & (state[v] == 1)].sum()
                    new[1 + 2 * k + b] = num / den if den > 0 else theta[1 + 2 * k + b]
            theta = np.clip(new, 1e-12, 1 - 1e-12)
            if ll - prev < tol * max(1.0, abs(ll)):
                break
            prev = ll
        theta = _polish(theta, phat, tree)
        fit = _result(theta, counts, phat, tree)
        if best is None or fit.loglik > best.loglik + 1e-12:
            best = fit
    return best


def _polish(theta, phat, tree):
    def resid(t):
        return model_probs_batch(t[None, :], tree)[0] - phat
    sol = least_squares(resid, theta, bounds=(0.0, 1.0), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return sol.x


def _result(theta, counts, phat, tree) -> FitResult:
    p = model_probs_batch(theta[None, :], tree)[0]
    nz = counts > 0
    ll = float(np.sum(counts[nz] * np.log(np.maximum(p[nz], 1e-300))))
    return FitResult(theta, p, ll, float(np.max(np.abs(p - phat))))


@dataclass
class A2Report:
    positive: bool
    in_model: bool | None   # None when the fit was skipped
    residual: float | None
    fit: FitResult | None = None
    messages: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.positive and self.in_model is not False


def check_A2(table: CountTable, tree: RootedTree, tol: float = 1e-6, rng=0) -> A2Report:
    """Positivity of the empirical distribution and (small trees) membership in the model."""
    msgs = []
    positive = all(c > 0 for c in table.counts)
    if not positive:
        msgs.append("A2 positivity violated")
    if tree.n > FIT_MAX_LEAVES or not tree.is_trivalent():
        msgs.append("model membership not checked for this tree")
        return A2Report(positive, None, None, None, msgs)
    fit = em_fit(table, tree, rng=rng)
    in_model = fit.residual <= tol
    if not in_model:
        msgs.append(f"A2 model membership violated: fitted distance {fit.residual:.3g}")
    return A2Report(positive, in_model, fit.residual, fit, msgs)
