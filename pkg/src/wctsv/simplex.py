"""Long-only portfolio selection against the budgeted worst-case objectives.

Both solvers minimize a scalarization ``h(w^T mu, sqrt(w^T cov w))`` over
the probability simplex.  The arbitrary-family objective is convex and
differentiable, so projected gradient plus an active-set polish reaches
KKT-verified precision.  The symmetric-family objective is only
piecewise-smooth, so it gets multi-start projected subgradient descent with
a pairwise golden-section polish and probe-based certification in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyUncertaintySet, InfeasibleBudget, NonConvergence
from .frontier import MarketModel, Portfolio
from .worst_case import (
    Family,
    MomentProfile,
    wc_target_semivariance_constrained,
)

__all__ = [
    "SimplexSolverConfig",
    "check_regret_feasibility",
    "project_to_simplex",
    "eep_tsv_portfolio",
    "eep_tsv_s_portfolio",
]

SIGMA_FLOOR = 1e-12
ACTIVE_TOL = 1e-12


@dataclass(frozen=True)
class SimplexSolverConfig:
    max_iterations: int = 500
    step_init: float = 1.0
    step_shrink: float = 0.5
    tolerance: float = 1e-8
    multistart_count: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if self.tolerance <= 0.0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.multistart_count < 1:
            raise ValueError(f"multistart_count must be >= 1, got {self.multistart_count}")
        if self.max_iterations < 1 or self.step_init <= 0.0:
            raise ValueError("max_iterations must be >= 1 and step_init > 0")
        if not 0.0 < self.step_shrink < 1.0:
            raise ValueError(f"step_shrink must lie in (0, 1), got {self.step_shrink}")


def check_regret_feasibility(m: MarketModel, t: float, lam: float) -> bool:
    """Whether some simplex portfolio keeps ``(w^T mu - t)_-`` within ``lam``.

    Scalar criterion: the worst expected loss over the simplex is the
    smallest asset mean, so the screen is ``(min_i mu_i - t)_- <= lam``.
    """
    if not lam > 0.0:
        raise ValueError(f"budget must be > 0, got {lam}")
    return max(t - float(m.mu_vec.min()), 0.0) <= lam


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    if not np.isfinite(v).all():
        raise ValueError("cannot project non-finite entries")
    u = np.sort(v)[::-1]
    cum = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    mask = u + (1.0 - cum) / idx > 0.0
    rho = int(idx[mask][-1])
    tau = (1.0 - cum[rho - 1]) / rho
    return np.maximum(v + tau, 0.0)


def _budget_floor(m: MarketModel, t: float) -> float:
    return max(t - float(m.mu_vec.min()), 0.0)


def _require_feasible(m: MarketModel, t: float, lam: float) -> None:
    if not check_regret_feasibility(m, t, lam):
        raise InfeasibleBudget(
            f"budget {lam} cannot be met by any simplex portfolio at threshold {t}"
        )


def _solve_equality_qp(q2: np.ndarray, c: np.ndarray, rows: list[np.ndarray], rhs: list[float]):
    """Solve stationarity of w^T (q2/2) w + c^T w under equality rows."""
    d = q2.shape[0]
    k = len(rows)
    kkt = np.zeros((d + k, d + k))
    kkt[:d, :d] = q2
    for j, row in enumerate(rows):
        kkt[:d, d + j] = row
        kkt[d + j, :d] = row
    vec = np.concatenate([-c, np.asarray(rhs)])
    try:
        sol = np.linalg.solve(kkt, vec)
    except np.linalg.LinAlgError:
        return None
    return sol[:d], sol[d:]


def _active_set_qp(q2: np.ndarray, c: np.ndarray, extra_row=None, extra_rhs=0.0):
    """Minimize ``w^T (q2/2) w + c^T w`` over the simplex (plus one optional
    equality row), by primal active-set iteration.  Returns (w, grad) or
    None when the subproblem never settles."""
    d = q2.shape[0]
    active: set[int] = set()
    for _ in range(3 * d + 6):
        free = [i for i in range(d) if i not in active]
        if not free:
            return None
        rows = [np.ones(len(free))]
        rhs = [1.0]
        if extra_row is not None:
            rows.append(extra_row[free])
            rhs.append(extra_rhs)
        sol = _solve_equality_qp(q2[np.ix_(free, free)], c[free], rows, rhs)
        if sol is None:
            return None
        w_free, _ = sol
        if w_free.min() < -ACTIVE_TOL:
            active.add(free[int(np.argmin(w_free))])
            continue
        w = np.zeros(d)
        w[free] = np.maximum(w_free, 0.0)
        grad = q2 @ w + c
        gamma = float(grad[free].mean())
        blocked = [i for i in sorted(active) if grad[i] - gamma < -ACTIVE_TOL]
        if blocked:
            active.remove(blocked[int(np.argmin([grad[i] for i in blocked]))])
            continue
        return w, grad
    return None


def _kkt_residual(w: np.ndarray, grad: np.ndarray) -> float:
    free = w > 1e-10
    gamma = float(grad[free].mean())
    stationarity = float(np.abs(grad[free] - gamma).max())
    dual = float(np.maximum(gamma - grad[~free], 0.0).max()) if (~free).any() else 0.0
    return max(stationarity, dual) / (1.0 + abs(gamma))


def eep_tsv_portfolio(
    m: MarketModel, t: float, lam: float, cfg: SimplexSolverConfig | None = None
) -> Portfolio:
    """Long-only minimizer of the budgeted arbitrary-family worst case.

    On the generic branch the objective is the convex, differentiable
    ``w^T cov w + (w^T mu - t)_+^2``; projected gradient supplies a warm
    start and an active-set polish makes the KKT conditions hold to
    ``cfg.tolerance``.  When the budget sits exactly on its floor the
    binding vertex is the whole feasible story and the objective collapses
    to 0.
    """
    cfg = cfg or SimplexSolverConfig()
    _require_feasible(m, t, lam)
    mu, cov = m.mu_vec, m.cov
    floor = _budget_floor(m, t)
    if lam == floor and floor > 0.0:
        j = int(np.argmin(mu))
        w = np.zeros(m.dim)
        w[j] = 1.0
        return Portfolio(
            weights=w,
            expected_loss=float(mu[j]),
            stdev=math.sqrt(float(cov[j, j])),
            objective=0.0,
            regime="lambda == (xi-t)_-",
        )

    def value_grad(w):
        xi = float(w @ mu)
        up = max(xi - t, 0.0)
        return float(w @ cov @ w) + up * up, 2.0 * cov @ w + 2.0 * up * mu

    w = np.full(m.dim, 1.0 / m.dim)
    best_w, best_f = w, value_grad(w)[0]
    for k in range(cfg.max_iterations):
        f, g = value_grad(w)
        if f < best_f:
            best_w, best_f = w, f
        w = project_to_simplex(w - cfg.step_init / math.sqrt(k + 1.0) * g)

    # polish: the branch (above/below/at the threshold) fixes a QP
    candidates = []
    for variant in ("below", "above", "pinned"):
        if variant == "below":
            q2, c, row, rhs = 2.0 * cov, np.zeros(m.dim), None, 0.0
        elif variant == "above":
            q2 = 2.0 * (cov + np.outer(mu, mu))
            c = -2.0 * t * mu
            row, rhs = None, 0.0
        else:
            q2, c, row, rhs = 2.0 * cov, np.zeros(m.dim), mu, t
        sol = _active_set_qp(q2, c, row, rhs)
        if sol is None:
            continue
        wv = sol[0]
        xi = float(wv @ mu)
        if variant == "below" and xi > t + 1e-12:
            continue
        if variant == "above" and xi < t - 1e-12:
            continue
        candidates.append(wv)
    candidates.append(best_w)
    scored = [(value_grad(wv)[0], i, wv) for i, wv in enumerate(candidates)]
    f_star, _, w_star = min(scored, key=lambda s: (s[0], s[1]))

    _, g_star = value_grad(w_star)
    if _kkt_residual(w_star, g_star) > cfg.tolerance:
        raise NonConvergence(
            f"KKT residual {_kkt_residual(w_star, g_star):.3e} above {cfg.tolerance}"
        )
    xi = float(w_star @ mu)
    return Portfolio(
        weights=w_star,
        expected_loss=xi,
        stdev=math.sqrt(float(w_star @ cov @ w_star)),
        objective=f_star,
        regime="lambda > (xi-t)_-",
    )


def _golden_on_segment(f, lo: float, hi: float, tol: float = 1e-11):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
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


def eep_tsv_s_portfolio(
    m: MarketModel, t: float, lam: float, cfg: SimplexSolverConfig | None = None
) -> Portfolio:
    """Long-only minimizer of the budgeted symmetric-family worst case.

    The scalarized objective is piecewise-smooth and not assumed convex, so
    the solver multi-starts projected subgradient descent from every
    vertex, the barycenter, and seeded random simplex points, then polishes
    the leaders with golden-section line searches along pairwise exchange
    directions (which span the simplex tangent space).
    """
    cfg = cfg or SimplexSolverConfig()
    _require_feasible(m, t, lam)
    mu, cov = m.mu_vec, m.cov
    d = m.dim

    def value(w) -> float:
        xi = float(w @ mu)
        sigma = max(math.sqrt(max(float(w @ cov @ w), 0.0)), SIGMA_FLOOR)
        try:
            return wc_target_semivariance_constrained(
                MomentProfile(xi, sigma), t, lam, Family.SYMMETRIC
            ).value
        except EmptyUncertaintySet:
            return math.inf

    def subgrad(w) -> np.ndarray:
        xi = float(w @ mu)
        cw = cov @ w
        sigma = max(math.sqrt(max(float(w @ cw), 0.0)), SIGMA_FLOOR)
        if t > xi:
            return cw
        s = xi - t
        m_shift = lam + xi - t
        if sigma <= s:
            return 2.0 * cw + 2.0 * s * mu
        if sigma < 2.0 * m_shift - s:
            return (s + sigma) * (mu + cw / sigma)
        return cw + (2.0 * lam + 3.0 * s) * mu

    rng = np.random.default_rng(cfg.seed)
    starts = [np.eye(d)[i] for i in range(d)]
    starts.append(np.full(d, 1.0 / d))
    starts.extend(rng.dirichlet(np.ones(d)) for _ in range(cfg.multistart_count))

    leaders: list[tuple[float, int, np.ndarray]] = []
    for si, w0 in enumerate(starts):
        w = np.asarray(w0, dtype=float)
        local_w, local_f = w, value(w)
        for k in range(cfg.max_iterations):
            g = subgrad(w)
            norm = float(np.linalg.norm(g))
            if norm < 1e-15:
                break
            w = project_to_simplex(w - cfg.step_init / math.sqrt(k + 1.0) * g / norm)
            f = value(w)
            if f < local_f:
                local_w, local_f = w, f
        leaders.append((local_f, si, local_w))
    leaders.sort(key=lambda s: (s[0], s[1]))

    def polish(w):
        w = w.copy()
        fw = value(w)
        for _ in range(3):
            improved = False
            for i in range(d):
                for j in range(i + 1, d):
                    lo, hi = -w[i], w[j]
                    if hi - lo < 1e-14:
                        continue
                    e = np.zeros(d)
                    e[i], e[j] = 1.0, -1.0
                    theta, ft = _golden_on_segment(lambda th: value(w + th * e), lo, hi)
                    if ft < fw - 1e-15:
                        w = np.clip(w + theta * e, 0.0, None)
                        w = w / w.sum()
                        fw = ft
                        improved = True
            if not improved:
                break
        return w, fw

    best_w, best_f = None, math.inf
    for f0, _, w0 in leaders[:3]:
        w, f = polish(w0)
        if f < best_f:
            best_w, best_f = w, f
    if best_w is None or not math.isfinite(best_f):
        raise NonConvergence("no finite objective found over the simplex")

    # feasible-direction stationarity screen, generous because the polish
    # resolves intervals only to ~1e-11
    h = 1e-7
    slack = 100.0 * cfg.tolerance * (1.0 + abs(best_f))
    for i in range(d):
        for j in range(d):
            if i == j or best_w[j] < h:
                continue
            e = np.zeros(d)
            e[i], e[j] = 1.0, -1.0
            if (value(best_w + h * e) - best_f) / h < -slack:
                raise NonConvergence(
                    f"descent direction remains after polish (pair {i},{j})"
                )

    xi = float(best_w @ mu)
    sigma = max(math.sqrt(max(float(best_w @ cov @ best_w), 0.0)), SIGMA_FLOOR)
    tag = wc_target_semivariance_constrained(
        MomentProfile(xi, sigma), t, lam, Family.SYMMETRIC
    ).regime
    return Portfolio(
        weights=best_w,
        expected_loss=xi,
        stdev=sigma,
        objective=best_f,
        regime=tag,
    )
