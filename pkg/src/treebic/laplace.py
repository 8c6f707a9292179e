"""Monte Carlo estimates of the Laplace integral ``I(N) = int exp(-N f(theta)) phi(theta) dtheta``.

``f`` is the normalised log-likelihood ``KL(p_hat || p(theta))``; by the
asymptotic theory ``log I(N) = -lambda log N + (m - 1) log log N + O(1)``,
so regressing ``log I`` on ``log N`` recovers the learning coefficient.

Two estimators are provided. ``prior`` averages ``exp(-N f)`` over prior
draws; it is unbiased but its relative error blows up once ``I(N)`` is far
below ``1 / samples``. ``smc`` runs a tempered sequential Monte Carlo sampler
from the prior (inverse temperature 0) up to the largest ``N``; the running
product of incremental weight means is an unbiased estimate of ``I`` at every
grid point it passes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import betaln, logsumexp

from .moments import ThetaPoint, model_probs, model_probs_batch
from .patterns import CountTable
from .tree import RootedTree

MIN_SAMPLES = 10_000
LOG_TINY = math.log(np.finfo(float).tiny)  # exp() below this is zero in double precision


# ---------------------------------------------------------------------------
# Priors and models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Prior:
    """Product prior on the unit cube: uniform, or ``Beta(a, b)`` in every coordinate."""
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise ValueError("Beta prior parameters must be >= 1")

    @property
    def is_uniform(self) -> bool:
        return self.a == 1 and self.b == 1

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.is_uniform:
            return rng.random(shape)
        return rng.beta(self.a, self.b, shape)

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        inside = np.all((x >= 0) & (x <= 1), axis=-1)
        if self.is_uniform:
            return np.where(inside, 0.0, -np.inf)
        with np.errstate(divide="ignore"):
            lp = ((self.a - 1) * np.log(x) + (self.b - 1) * np.log1p(-x) - betaln(self.a, self.b)).sum(-1)
        return np.where(inside, lp, -np.inf)

    @classmethod
    def parse(cls, text: str) -> "Prior":
        """``'uniform'`` or ``'beta:a,b'``."""
        text = text.strip().lower()
        if text == "uniform":
            return cls()
        if text.startswith("beta:"):
            try:
                a, b = (float(v) for v in text[5:].split(","))
            except ValueError:
                raise ValueError(f"bad prior {text!r}; expected beta:a,b") from None
            return cls(a, b)
        raise ValueError(f"bad prior {text!r}; expected uniform or beta:a,b")


class LaplaceModel:
    """A discrete model ``theta -> p(theta)`` on the unit cube together with target ``p_hat``."""

    dim: int
    p_hat: np.ndarray

    def probs(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def flip(self, theta: np.ndarray) -> np.ndarray:
        """Antithetic partner of each draw (must preserve the prior)."""
        return 1.0 - theta

    def f(self, theta: np.ndarray) -> np.ndarray:
        """``sum_alpha p_hat (log p_hat - log p(theta))`` per row; ``inf`` off the support."""
        p = self.probs(theta)
        mask = self.p_hat > 0
        ph = self.p_hat[mask]
        with np.errstate(divide="ignore"):
            logp = np.log(p[:, mask])
        val = (ph * (np.log(ph) - logp)).sum(axis=1)
        return np.maximum(val, 0.0)


class BernoulliModel(LaplaceModel):
    """Single binary variable, ``p(theta) = (1 - theta, theta)``."""

    def __init__(self, n1: float, n0: float):
        total = n1 + n0
        if total <= 0 or n1 < 0 or n0 < 0:
            raise ValueError("counts must be nonnegative with a positive total")
        self.dim = 1
        self.n1, self.n0 = n1, n0
        self.p_hat = np.array([n0 / total, n1 / total])

    def probs(self, theta):
        t = theta[:, 0]
        return np.stack([1 - t, t], axis=1)

    def exact_log_integral(self, N: float) -> float:
        """``log I(N)`` for counts scaled to total ``N`` (uniform prior)."""
        n1 = N * self.p_hat[1]
        n0 = N * self.p_hat[0]
        ell = sum(c * math.log(p) for c, p in ((n1, self.p_hat[1]), (n0, self.p_hat[0])) if c > 0)
        return float(betaln(n1 + 1, n0 + 1) - ell)


class TreeModel(LaplaceModel):
    """Binary latent tree model in the conditional-probability parameters."""

    def __init__(self, tree: RootedTree, p_hat: Sequence[float]):
        self.tree = tree
        self.dim = 2 * tree.n_e + 1
        self.p_hat = np.asarray([float(x) for x in p_hat])
        if self.p_hat.shape != (1 << tree.n,) or abs(self.p_hat.sum() - 1) > 1e-12:
            raise ValueError("p_hat must be a distribution over 2**n patterns")
        col = {v: 1 + 2 * k for k, (_, v) in enumerate(tree.edges)}
        self._in_col = col
        self._hidden = [v for v in tree.nodes if not tree.is_leaf(v)]

    def probs(self, theta):
        return model_probs_batch(theta, self.tree)

    def flip(self, theta):
        """Swap the labels of every hidden node; the distribution of the leaves is unchanged."""
        out = theta.copy()
        for v in self._hidden:
            if v == self.tree.root:
                out[:, 0] = 1 - out[:, 0]
            else:
                k = self._in_col[v]
                out[:, k:k + 2] = 1 - out[:, k:k + 2]
            for c in self.tree.children(v):
                k = self._in_col[c]
                out[:, [k, k + 1]] = out[:, [k + 1, k]]
        return out


def normalized_loglik(theta: ThetaPoint | Sequence[float], tree: RootedTree, p_hat: Sequence) -> float:
    """``f(theta) = KL(p_hat || p(theta))`` for one parameter point (``inf`` off the support)."""
    if isinstance(theta, ThetaPoint):
        theta = theta.as_vector(tree)
    model = TreeModel(tree, p_hat)
    return float(model.f(np.asarray([[float(x) for x in theta]]))[0])


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

@dataclass
class LaplaceEstimate:
    N: float
    log_I: float
    stderr: float


@dataclass
class ValidationConfig:
    grid: tuple = tuple(2.0 ** k for k in range(7, 16))
    samples: int = 200_000
    seed: int = 42
    prior: Prior = field(default_factory=Prior)
    method: str = "smc"
    batches: int = 10
    drop: int = 2
    mcmc_steps: int = 4
    ess_fraction: float = 0.5

    def __post_init__(self):
        grid = [float(x) for x in self.grid]
        if any(b <= a for a, b in zip(grid, grid[1:])) or not grid or grid[0] <= 0:
            raise ValueError("grid must be positive and strictly increasing")
        self.grid = tuple(grid)
        if self.method not in ("smc", "prior"):
            raise ValueError("method must be 'smc' or 'prior'")
        if self.batches < 2 or self.samples < 2 * self.batches:
            raise ValueError("need at least two batches with two samples each")

    @property
    def below_minimum(self) -> bool:
        return self.samples < MIN_SAMPLES


def parse_grid(text: str) -> tuple[float, ...]:
    """``lo:hi:factor`` -> ``lo, lo*factor, ...`` up to ``hi`` (inclusive, relative tolerance)."""
    try:
        lo, hi, factor = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"bad grid {text!r}; expected lo:hi:factor") from None
    if lo <= 0 or hi < lo or factor <= 1:
        raise ValueError("grid needs 0 < lo <= hi and factor > 1")
    out = []
    x = lo
    while x <= hi * (1 + 1e-12):
        out.append(x)
        x *= factor
    return tuple(out)


class UnderflowError(RuntimeError):
    pass


def mc_laplace(model: LaplaceModel, grid: Sequence[float], config: ValidationConfig | None = None) -> list[LaplaceEstimate]:
    """Estimate ``log I(N)`` on ``grid`` with batch-means standard errors."""
    config = config or ValidationConfig()
    grid = sorted(float(x) for x in grid)
    seeds = np.random.SeedSequence(config.seed).spawn(config.batches)
    per_batch = config.samples // config.batches
    runs = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        if config.method == "prior":
            runs.append(_prior_batch(model, grid, per_batch, config.prior, rng))
        else:
            runs.append(_smc_batch(model, grid, per_batch, config, rng))
    logs = np.array(runs)  # batches x grid
    out = []
    for j, N in enumerate(grid):
        col = logs[:, j]
        if not np.all(np.isfinite(col)):
            raise UnderflowError(
                f"every sample of a batch underflowed at N={N:g}; use more samples or a smaller N")
        log_mean = float(logsumexp(col) - math.log(len(col)))
        rel = np.exp(col - log_mean)
        se = float(np.std(rel, ddof=1) / math.sqrt(len(col)))
        out.append(LaplaceEstimate(N, log_mean, se))
    return out


def _initial(model, prior, size, rng) -> np.ndarray:
    """Prior draws, in antithetic pairs when the flip preserves the prior (symmetric Beta)."""
    if prior.a != prior.b:
        return prior.sample(rng, (size, model.dim))
    x = prior.sample(rng, (size // 2, model.dim))
    return np.concatenate([x, model.flip(x)])


def _prior_batch(model, grid, size, prior, rng) -> list[float]:
    theta = _initial(model, prior, size, rng)
    f = model.f(theta)
    out = []
    for N in grid:
        logw = -N * f
        # plain averaging of exp(-N f) would return exactly zero here
        out.append(-math.inf if logw.max() < LOG_TINY else float(logsumexp(logw) - math.log(len(f))))
    return out


def _smc_batch(model, grid, size, config, rng) -> list[float]:
    prior = config.prior
    x = _initial(model, prior, size, rng)
    fx = model.f(x)
    S = len(x)
    beta = 0.0
    log_z = 0.0
    scale = np.full(model.dim, 0.1)
    results = []
    targets = list(grid)
    while targets:
        goal = targets[0]
        nxt = _next_temperature(fx, beta, goal, config.ess_fraction)
        inc = -(nxt - beta) * fx
        log_z += float(logsumexp(inc) - math.log(S))
        beta = nxt
        if not math.isfinite(log_z):
            results.extend([-math.inf] * len(targets))
            break
        if beta == goal:
            results.append(log_z)
            targets.pop(0)
            if not targets:
                break
        w = np.exp(inc - inc.max())
        idx = _systematic(w / w.sum(), rng)
        x, fx = x[idx], fx[idx]
        x, fx, scale = _rw_moves(model, prior, x, fx, beta, scale, config.mcmc_steps, rng)
    return results


def _next_temperature(fx, beta, goal, frac) -> float:
    """Largest step keeping the effective sample size of the increment at ``frac * S``."""
    def ess(b):
        lw = -(b - beta) * fx
        lw = lw - lw.max()
        w = np.exp(lw)
        return w.sum() ** 2 / (w * w).sum() / len(fx)

    if ess(goal) >= frac:
        return goal
    lo, hi = beta, goal
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ess(mid) >= frac:
            lo = mid
        else:
            hi = mid
    return max(lo, beta + 1e-12 * max(1.0, goal))


def _systematic(p, rng) -> np.ndarray:
    S = len(p)
    u = (rng.random() + np.arange(S)) / S
    idx = np.searchsorted(np.cumsum(p), u)
    return np.minimum(idx, S - 1)


def _rw_moves(model, prior, x, fx, beta, scale, steps, rng):
    """Gaussian random-walk Metropolis moves with per-coordinate scales tied to the particle spread."""
    spread = np.maximum(x.std(axis=0), 1e-12)
    lp = prior.logpdf(x)
    for _ in range(steps):
        prop = x + rng.standard_normal(x.shape) * scale * spread
        lpp = prior.logpdf(prop)
        ok = np.isfinite(lpp)
        fp = np.full(len(x), np.inf)
        if ok.any():
            fp[ok] = model.f(np.clip(prop[ok], 0.0, 1.0))
        with np.errstate(invalid="ignore"):  # 0 * inf for rejected out-of-cube proposals
            log_acc = np.where(ok, -beta * (fp - fx) + (lpp - lp), -np.inf)
        accept = np.log(rng.random(len(x))) < log_acc
        x = np.where(accept[:, None], prop, x)
        fx = np.where(accept, fp, fx)
        lp = np.where(accept, lpp, lp)
        rate = accept.mean()
        scale = scale * (1.3 if rate > 0.3 else 0.7 if rate < 0.15 else 1.0)
        scale = np.clip(scale, 1e-4, 3.0)
    return x, fx, scale


# ---------------------------------------------------------------------------
# Regression and fiber data
# ---------------------------------------------------------------------------

@dataclass
class RegressionResult:
    slope: float
    intercept: float
    slope_se: float
    loglog_coef: float | None
    points: list


def slope_regression(estimates: Sequence[LaplaceEstimate] | Sequence[tuple[float, float]],
                     drop: int = 0, loglog: bool = False) -> RegressionResult:
    """OLS of ``log I`` on ``log N`` (and ``log log N`` when asked) after dropping the first ``drop`` points."""
    pts = [(e.N, e.log_I) if isinstance(e, LaplaceEstimate) else (float(e[0]), float(e[1]))
           for e in estimates]
    pts = sorted(pts)[drop:]
    if len(pts) < 4:
        raise ValueError("slope regression needs at least four grid points")
    N = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    cols = [np.ones_like(N), np.log(N)]
    if loglog:
        cols.append(np.log(np.log(N)))
    X = np.stack(cols, axis=1)
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(y) - X.shape[1]
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.pinv(X.T @ X)
    return RegressionResult(float(coef[1]), float(coef[0]), float(math.sqrt(max(cov[1, 1], 0.0))),
                            float(coef[2]) if loglog else None, pts)


def make_fiber_data(tree: RootedTree, theta0: ThetaPoint, N=1) -> CountTable:
    """Fractional counts ``N p(theta0)``: the empirical distribution lies exactly on the model."""
    p = model_probs(theta0, tree)
    return CountTable(tree.n, [Fraction(x) * Fraction(N) for x in p])
