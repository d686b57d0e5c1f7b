"""Mean-variance frontier algebra and the short-selling-allowed solvers.

With short selling permitted, every model considered here reduces to a
one-dimensional problem along the minimum-variance frontier: for a fixed
expected loss ``xi`` the variance-minimal portfolio is a two-fund
combination, with variance quadratic in ``xi``.  The solvers differ only in
the scalar objective they minimize over ``xi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DegenerateMeans, NotPositiveDefinite
from .worst_case import Family, MomentProfile, wc_target_semivariance

__all__ = [
    "MarketModel",
    "FrontierParams",
    "Portfolio",
    "frontier_params",
    "min_variance_portfolio",
    "classical_mv",
    "tsv_portfolio",
    "m_tsv_s_portfolio",
]

SYMMETRY_TOL = 1e-10
DEGENERACY_TOL = 1e-12
XI_GRID_POINTS = 2048
GOLDEN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MarketModel:
    """Asset identifiers with per-period loss mean vector and covariance."""

    assets: tuple[str, ...]
    mu_vec: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu_vec, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "mu_vec", mu)
        object.__setattr__(self, "cov", cov)
        d = len(self.assets)
        if d == 0 or mu.shape != (d,) or cov.shape != (d, d):
            raise ValueError(
                f"inconsistent dimensions: {d} assets, mu {mu.shape}, cov {cov.shape}"
            )
        if not (np.isfinite(mu).all() and np.isfinite(cov).all()):
            raise ValueError("non-finite market inputs")
        scale = max(1.0, float(np.abs(cov).max()))
        if float(np.abs(cov - cov.T).max()) > SYMMETRY_TOL * scale:
            raise NotPositiveDefinite("covariance is not symmetric")
        try:
            cho_factor(cov, lower=True)
        except LinAlgError as exc:
            raise NotPositiveDefinite(f"covariance is not positive definite: {exc}") from exc

    @property
    def dim(self) -> int:
        return len(self.assets)


@dataclass(frozen=True, eq=False)
class FrontierParams:
    """Scalars of the frontier parabola plus the two cached solve vectors.

    ``variance(xi) = v0 xi^2 - 2 v1 xi + v2`` along the frontier, and
    ``v0 v2 - v1^2 = 1/u > 0`` so the minimal variance ``1/(u v0)`` is
    strictly positive.  Immutable and safely shareable across threads.
    """

    u: float
    v0: float
    v1: float
    v2: float
    inv_mu: np.ndarray
    inv_e: np.ndarray

    def variance_at(self, xi: float) -> float:
        return self.v0 * xi * xi - 2.0 * self.v1 * xi + self.v2


@dataclass(frozen=True, eq=False)
class Portfolio:
    weights: np.ndarray
    expected_loss: float
    stdev: float
    objective: float
    regime: str


def frontier_params(m: MarketModel) -> FrontierParams:
    """The scalars (u, v0, v1, v2) and solve vectors behind the frontier.

    Uses a Cholesky solve per right-hand side; the covariance inverse is
    never formed.  Raises :class:`DegenerateMeans` when the mean vector is
    (numerically) a multiple of the all-ones vector, which collapses the
    frontier to a single point.
    """
    try:
        factor = cho_factor(m.cov, lower=True)
    except LinAlgError as exc:
        raise NotPositiveDefinite(f"covariance is not positive definite: {exc}") from exc
    e = np.ones(m.dim)
    inv_mu = cho_solve(factor, m.mu_vec)
    inv_e = cho_solve(factor, e)
    a = float(e @ inv_e)
    b = float(e @ inv_mu)
    c = float(m.mu_vec @ inv_mu)
    u = a * c - b * b
    if u <= DEGENERACY_TOL * max(a * c, 1e-300):
        raise DegenerateMeans(
            "mean vector is numerically proportional to the all-ones vector"
        )
    return FrontierParams(u=u, v0=a / u, v1=b / u, v2=c / u, inv_mu=inv_mu, inv_e=inv_e)


def min_variance_portfolio(fp: FrontierParams, m: MarketModel, xi: float) -> Portfolio:
    """The two-fund frontier portfolio with expected loss exactly ``xi``."""
    w = (fp.v0 * xi - fp.v1) * fp.inv_mu + (fp.v2 - fp.v1 * xi) * fp.inv_e
    var = float(w @ m.cov @ w)
    return Portfolio(
        weights=w,
        expected_loss=float(w @ m.mu_vec),
        stdev=math.sqrt(var),
        objective=var,
        regime="frontier",
    )


def classical_mv(fp: FrontierParams, m: MarketModel, nu: float) -> Portfolio:
    """Minimum variance subject to expected loss at most ``nu``."""
    gmv = fp.v1 / fp.v0
    if nu < gmv:
        xi, regime = nu, "loss cap binds"
    else:
        xi, regime = gmv, "global minimum variance"
    base = min_variance_portfolio(fp, m, xi)
    return Portfolio(base.weights, base.expected_loss, base.stdev, base.objective, regime)


def tsv_portfolio(fp: FrontierParams, m: MarketModel, t: float) -> Portfolio:
    """Minimize worst-case target semi-variance, short selling allowed.

    The frontier reduction is ``g(xi) = v0 xi^2 - 2 v1 xi + v2 +
    (xi - t)_+^2``, convex piecewise-quadratic with a differentiable kink
    at ``xi = t``, so the minimizer is either the unconstrained frontier
    vertex ``v1/v0`` (when it sits at or below t) or the stationary point
    ``(v1 + t)/(v0 + 1)`` of the upper branch.
    """
    gmv = fp.v1 / fp.v0
    if gmv <= t:
        xi, regime = gmv, "v1/v0 <= t"
    else:
        xi, regime = (fp.v1 + t) / (fp.v0 + 1.0), "v1/v0 > t"
    base = min_variance_portfolio(fp, m, xi)
    value = base.objective + max(xi - t, 0.0) ** 2
    return Portfolio(base.weights, base.expected_loss, base.stdev, value, regime)


def _golden_min(f, a: float, b: float, tol: float = GOLDEN_TOL):
    """Golden-section minimum of f on [a, b]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    return x, f(x)


def m_tsv_s_portfolio(fp: FrontierParams, m: MarketModel, nu: float, t: float) -> Portfolio:
    """Minimize worst-case symmetric target semi-variance with loss cap ``nu``.

    Case (i): with ``t >= nu`` every feasible frontier point sits at or
    below the threshold, where the objective is ``sigma^2 / 2``, so the
    solution is the classical one at ``xi = min(v1/v0, nu)``.  Otherwise
    the candidates are the below-threshold frontier vertex
    ``xi1 = min(v1/v0, t)`` (case ii) and a grid-plus-golden-section
    minimizer of the objective over ``[t, nu]`` (case iii); the smaller
    objective wins, the smaller ``xi`` on a tie within 1e-12.  The scan is
    used because the objective along the frontier need not be unimodal.
    """

    def h(xi: float) -> float:
        sigma = math.sqrt(fp.variance_at(xi))
        return wc_target_semivariance(MomentProfile(xi, sigma), t, Family.SYMMETRIC).value

    gmv = fp.v1 / fp.v0
    if t >= nu:
        xi_star, tag = min(gmv, nu), "i"
    else:
        xi1 = min(gmv, t)
        h1 = 0.5 * fp.variance_at(xi1)
        grid = np.linspace(t, nu, XI_GRID_POINTS)
        values = [h(x) for x in grid]
        j = int(np.argmin(values))
        lo = grid[max(j - 1, 0)]
        hi = grid[min(j + 1, XI_GRID_POINTS - 1)]
        xi2, h2 = _golden_min(h, float(lo), float(hi))
        if values[j] < h2:
            xi2, h2 = float(grid[j]), values[j]
        if h1 <= h2 + 1e-12:
            xi_star, tag = xi1, "ii"
        else:
            xi_star, tag = xi2, "iii"
    base = min_variance_portfolio(fp, m, xi_star)
    return Portfolio(base.weights, base.expected_loss, base.stdev, h(xi_star), tag)
