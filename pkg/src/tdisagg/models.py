"""Temporal disaggregation estimators.

Every estimator takes the low-frequency targets ``y_l`` (length ``n_l``), the
high-frequency indicator ``X`` (length ``n``) and a conversion matrix, and
returns a :class:`FitResult`. Use :func:`fit` to dispatch by method name.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from . import rho as rho_mod
from .errors import InputError, NonPositiveVariance, SingularSystem
from .gls import check_inputs, check_rank, coefficient_vcov, design, gls

METHODS = (
    "ols",
    "denton",
    "denton-cholette",
    "chow-lin",
    "chow-lin-opt",
    "chow-lin-ecotrim",
    "chow-lin-quilis",
    "litterman",
    "litterman-opt",
    "fernandez",
    "fast",
    "uniform",
)

ECOTRIM_RHO = 0.75
QUILIS_RHO = 0.15
FAST_RHO = 0.9
DENTON_EPS = 1e-8
CONSISTENCY_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class FitResult:
    method: str
    y_hat: np.ndarray
    y_l: np.ndarray
    C: np.ndarray
    aggregation_consistent: bool
    beta: Optional[np.ndarray] = None
    rho: Optional[float] = None
    residuals_low: Optional[np.ndarray] = None
    Q: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None
    vcov: Optional[np.ndarray] = None
    se: Optional[np.ndarray] = None
    t_stats: Optional[np.ndarray] = None
    p_values: Optional[np.ndarray] = None
    stars: Optional[list] = None
    intercept: bool = False
    y_reg: Optional[np.ndarray] = None  # X beta before the distribution step
    loglik: Optional[float] = None
    rss: Optional[float] = None
    objective_trace: list = field(default_factory=list)
    rule: Optional[str] = None

    @property
    def n(self) -> int:
        return len(self.y_hat)

    @property
    def n_low(self) -> int:
        return len(self.y_l)

    @property
    def y_hat_low(self) -> np.ndarray:
        return self.C @ self.y_hat

    @property
    def max_gap(self) -> float:
        """``max |C y_hat - y_l|``."""
        return float(np.max(np.abs(self.y_hat_low - self.y_l))) if self.n_low else 0.0

    @property
    def coefficient_names(self) -> list[str]:
        if self.beta is None:
            return []
        return ["intercept", "X"] if self.intercept else ["X"]

    def summary(self) -> str:
        lines = [f"method: {self.method}" + (f"   rule: {self.rule}" if self.rule else "")]
        lines.append(f"n = {self.n}, n_l = {self.n_low}")
        if self.rho is not None:
            lines.append(f"rho = {self.rho:.6f}")
        if self.loglik is not None:
            lines.append(f"log-likelihood = {self.loglik:.6f}")
        if self.beta is not None:
            lines.append("")
            lines.append(f"{'':<10}{'coef':>14}{'std.err':>14}{'t':>10}{'p':>10}")
            for i, name in enumerate(self.coefficient_names):
                se = self.se[i] if self.se is not None else np.nan
                t = self.t_stats[i] if self.t_stats is not None else np.nan
                p = self.p_values[i] if self.p_values is not None else np.nan
                star = self.stars[i] if self.stars else ""
                lines.append(f"{name:<10}{self.beta[i]:>14.6g}{se:>14.6g}{t:>10.3f}{p:>10.4f} {star}")
            lines.append("---")
            lines.append("signif.: *** p<0.01, ** p<0.05, * p<0.1 (normal approximation)")
        status = "consistent" if self.aggregation_consistent else "not aggregation-consistent"
        lines.append("")
        lines.append(f"max |C y_hat - y_l| = {self.max_gap:.3e} ({status})")
        return "\n".join(lines)


def _consistent(C, y_hat, y_l) -> bool:
    if len(y_l) == 0:
        return True
    gap = np.max(np.abs(C @ y_hat - y_l))
    return bool(gap <= CONSISTENCY_TOL * (1.0 + np.max(np.abs(y_l))))


def _rule(Cm):
    return getattr(Cm, "rule", None)


def _inference_fields(beta, vcov, n_low):
    k = len(beta)
    try:
        se, t, p, stars = rho_mod.inference(beta, vcov, n_low - k)
    except (NonPositiveVariance, InputError):
        return dict(se=np.full(k, np.nan), t_stats=np.full(k, np.nan), p_values=np.full(k, np.nan), stars=[""] * k)
    return dict(se=se, t_stats=t, p_values=p, stars=stars)


# ---------------------------------------------------------------------------
# regression baseline and indicator-free methods


def fit_ols(y_l, X, Cm, intercept: bool = True) -> FitResult:
    """Regress ``y_l`` on ``C X`` and return ``X beta`` without distribution."""
    y_l, X, C = check_inputs(y_l, X, Cm)
    Xh = design(X, intercept)
    X_l = C @ Xh
    check_rank(X_l)
    beta = np.linalg.lstsq(X_l, y_l, rcond=None)[0]
    u = y_l - X_l @ beta
    n_low, k = X_l.shape
    vcov = (u @ u) / (n_low - k) * linalg.inv(X_l.T @ X_l) if n_low > k else np.full((k, k), np.nan)
    y_hat = Xh @ beta
    return FitResult(
        method="ols",
        y_hat=y_hat,
        y_l=y_l,
        C=C,
        aggregation_consistent=False,
        beta=beta,
        residuals_low=u,
        vcov=vcov,
        intercept=intercept,
        y_reg=y_hat,
        rss=float(u @ u),
        rule=_rule(Cm),
        **_inference_fields(beta, vcov, n_low),
    )


def fit_uniform(y_l, X, Cm) -> FitResult:
    """Minimum-norm solution ``C' (C C')^-1 y_l``; ``X`` is ignored."""
    C = np.asarray(Cm, dtype=float)
    y_l, _, C = check_inputs(y_l, np.zeros(C.shape[1]), C)
    y_hat = C.T @ linalg.solve(C @ C.T, y_l, assume_a="pos")
    return FitResult(method="uniform", y_hat=y_hat, y_l=y_l, C=C, aggregation_consistent=_consistent(C, y_hat, y_l), rule=_rule(Cm))


def difference_matrix(n: int, order: int = 1) -> np.ndarray:
    """``(n - order) x n`` matrix of order-``order`` differences."""
    return np.diff(np.eye(n), n=order, axis=0)


def _solve_kkt(P, C, rhs_low, rhs_high=None):
    """Solve ``min x'Px - 2 rhs_high'x`` s.t. ``C x = rhs_low`` via its KKT system.

    The system is symmetrically equilibrated so that very large diagonal
    penalties do not destroy the accuracy of the constraint rows.
    """
    n = P.shape[0]
    n_low = C.shape[0]
    s = 1.0 / np.sqrt(np.maximum(np.diag(P), 1.0))
    K = np.zeros((n + n_low, n + n_low))
    K[:n, :n] = s[:, None] * P * s[None, :]
    K[:n, n:] = (C * s[None, :]).T
    K[n:, :n] = C * s[None, :]
    rhs = np.zeros(n + n_low)
    if rhs_high is not None:
        rhs[:n] = s * rhs_high
    rhs[n:] = rhs_low
    try:
        z = linalg.solve(K, rhs, assume_a="sym")
    except (linalg.LinAlgError, ValueError):
        raise SingularSystem("constrained smoothing system is singular") from None
    if not np.all(np.isfinite(z)):
        raise SingularSystem("constrained smoothing system produced non-finite values")
    return s * z[:n]


def _regularized_inverse(P):
    n = P.shape[0]
    eps = DENTON_EPS * np.trace(P) / n if n else DENTON_EPS
    if eps <= 0:
        eps = DENTON_EPS
    return linalg.inv(P + eps * np.eye(n)), eps


def fit_denton(y_l, X, Cm, h: int = 1) -> FitResult:
    """Smoothest series (order-``h`` differences) matching the aggregates.

    The roughness penalty ``D_h' D_h`` is singular, so it is regularized with
    ``eps = 1e-8 * trace(D_h' D_h) / n``. ``X`` is ignored.
    """
    h = int(h)
    if h < 1:
        raise InputError(f"Denton difference order must be >= 1, got {h}")
    C = np.asarray(Cm, dtype=float)
    y_l, _, C = check_inputs(y_l, np.zeros(C.shape[1]), C)
    n = C.shape[1]
    D = difference_matrix(n, h) if n > h else np.zeros((0, n))
    P = D.T @ D
    Sigma, eps = _regularized_inverse(P)
    y_hat = _solve_kkt(P + eps * np.eye(n), C, y_l)
    return FitResult(
        method="denton",
        y_hat=y_hat,
        y_l=y_l,
        C=C,
        aggregation_consistent=_consistent(C, y_hat, y_l),
        Q=Sigma,
        V=C @ Sigma @ C.T,
        rule=_rule(Cm),
    )


def fit_denton_cholette(y_l, X, Cm, weights=None) -> FitResult:
    """Adjust the base series ``X`` to the aggregates with minimal movement.

    Minimizes ``d' (P + W) d`` over the adjustment ``d = y - X`` subject to
    ``C y = y_l``, where ``P`` penalizes first differences of ``d`` (no
    penalty tying the first value to a pre-sample point) and ``W`` is
    ``diag(weights)``. Large weights pin the corresponding sub-periods to
    ``X``.
    """
    y_l, X, C = check_inputs(y_l, X, Cm)
    n = len(X)
    W = np.zeros(n)
    if weights is not None:
        W = np.asarray(weights, dtype=float).reshape(-1)
        if W.shape != (n,) or not np.all(np.isfinite(W)) or np.any(W <= 0):
            raise InputError("weights must be a positive finite vector of length n")
    D = difference_matrix(n, 1) if n > 1 else np.zeros((0, n))
    P = D.T @ D + np.diag(W)
    d = _solve_kkt(P, C, y_l - C @ X)
    y_hat = X + d
    M, _ = _regularized_inverse(P)
    return FitResult(
        method="denton-cholette",
        y_hat=y_hat,
        y_l=y_l,
        C=C,
        aggregation_consistent=_consistent(C, y_hat, y_l),
        Q=M,
        V=C @ M @ C.T,
        rule=_rule(Cm),
    )


# ---------------------------------------------------------------------------
# GLS family


def _fit_gls(method, y_l, X, Cm, builder, rho, intercept) -> FitResult:
    y_l, X, C = check_inputs(y_l, X, Cm)
    Xh = design(X, intercept)
    X_l = C @ Xh
    check_rank(X_l)
    V, G = rho_mod.low_frequency_cov(rho, C, builder)
    g = gls(y_l, X_l, V)
    y_reg = Xh @ g.beta
    y_hat = y_reg + rho_mod.distribute(rho, G, g.Vinv_u, builder)
    vcov = coefficient_vcov(g, len(y_l))
    return FitResult(
        method=method,
        y_hat=y_hat,
        y_l=y_l,
        C=C,
        aggregation_consistent=_consistent(C, y_hat, y_l),
        beta=g.beta,
        rho=float(rho),
        residuals_low=g.residuals,
        Q=rho_mod.build_Q(rho, rho_mod.power_matrix(len(X)), builder),
        V=g.V,
        vcov=vcov,
        intercept=intercept,
        y_reg=y_reg,
        loglik=rho_mod.log_likelihood(g.rss, g.logdet, len(y_l)),
        rss=g.rss,
        rule=_rule(Cm),
        **_inference_fields(g.beta, vcov, len(y_l)),
    )


def fit_chow_lin(y_l, X, Cm, rho: float, intercept: bool = True) -> FitResult:
    """Chow-Lin with AR(1) residuals at a fixed ``rho``.

    ``beta`` is the GLS estimate under ``V = C Q C'``; the low-frequency
    residual is distributed with ``Q C' V^-1`` so that ``C y_hat = y_l``.
    """
    return _fit_gls("chow-lin", y_l, X, Cm, "chow-lin", rho, intercept)


def fit_chow_lin_ecotrim(y_l, X, Cm, intercept: bool = True) -> FitResult:
    return dataclasses.replace(fit_chow_lin(y_l, X, Cm, ECOTRIM_RHO, intercept), method="chow-lin-ecotrim")


def fit_chow_lin_quilis(y_l, X, Cm, intercept: bool = True) -> FitResult:
    return dataclasses.replace(fit_chow_lin(y_l, X, Cm, QUILIS_RHO, intercept), method="chow-lin-quilis")


def fit_litterman(y_l, X, Cm, rho: float, intercept: bool = True) -> FitResult:
    """Litterman: random-walk residuals whose increments follow AR(1)."""
    return _fit_gls("litterman", y_l, X, Cm, "litterman", rho, intercept)


def fit_fernandez(y_l, X, Cm, intercept: bool = True) -> FitResult:
    """Random-walk residuals, ``Q = (D'D)^-1`` (Litterman at ``rho = 0``)."""
    return dataclasses.replace(fit_litterman(y_l, X, Cm, 0.0, intercept), method="fernandez")


def fit_fast(y_l, X, Cm, intercept: bool = True) -> FitResult:
    return dataclasses.replace(fit_litterman(y_l, X, Cm, FAST_RHO, intercept), method="fast")


def _fit_opt(method, base, builder, default_objective, y_l, X, Cm, intercept, bounds, objective):
    r = rho_mod.optimize(y_l, X, Cm, objective or default_objective, builder, bounds, intercept)
    res = base(y_l, X, Cm, r.rho_hat, intercept)
    return dataclasses.replace(res, method=method, objective_trace=r.objective_trace)


def fit_chow_lin_opt(y_l, X, Cm, intercept: bool = True, bounds=rho_mod.DEFAULT_BOUNDS, objective: str = None) -> FitResult:
    """Chow-Lin with ``rho`` chosen by maximum likelihood (default) over ``bounds``."""
    return _fit_opt("chow-lin-opt", fit_chow_lin, "chow-lin", "maxlog", y_l, X, Cm, intercept, bounds, objective)


def fit_litterman_opt(y_l, X, Cm, intercept: bool = True, bounds=rho_mod.DEFAULT_BOUNDS, objective: str = None) -> FitResult:
    """Litterman with ``rho`` chosen by minimum ``u' V^-1 u`` (default) over ``bounds``."""
    return _fit_opt("litterman-opt", fit_litterman, "litterman", "minrss", y_l, X, Cm, intercept, bounds, objective)


_DISPATCH = {
    "ols": fit_ols,
    "denton": fit_denton,
    "denton-cholette": fit_denton_cholette,
    "chow-lin": fit_chow_lin,
    "chow-lin-opt": fit_chow_lin_opt,
    "chow-lin-ecotrim": fit_chow_lin_ecotrim,
    "chow-lin-quilis": fit_chow_lin_quilis,
    "litterman": fit_litterman,
    "litterman-opt": fit_litterman_opt,
    "fernandez": fit_fernandez,
    "fast": fit_fast,
    "uniform": fit_uniform,
}

# options each method understands; anything else passed to fit() is dropped
_OPTIONS = {
    "ols": {"intercept"},
    "denton": {"h"},
    "denton-cholette": {"weights"},
    "chow-lin": {"rho", "intercept"},
    "chow-lin-opt": {"intercept", "bounds", "objective"},
    "chow-lin-ecotrim": {"intercept"},
    "chow-lin-quilis": {"intercept"},
    "litterman": {"rho", "intercept"},
    "litterman-opt": {"intercept", "bounds", "objective"},
    "fernandez": {"intercept"},
    "fast": {"intercept"},
    "uniform": set(),
}


def fit(method: str, y_l, X, Cm, **options) -> FitResult:
    """Fit ``method`` by name, forwarding only the options it accepts.

    >>> from tdisagg.conversion import from_sizes
    >>> fit("uniform", [100.0], [1, 2, 3, 4], from_sizes([4], "sum")).y_hat
    array([25., 25., 25., 25.])
    """
    if method not in _DISPATCH:
        raise InputError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    opts = {k: v for k, v in options.items() if k in _OPTIONS[method] and v is not None}
    if method in ("chow-lin", "litterman") and "rho" not in opts:
        raise InputError(f"method {method!r} needs an explicit rho")
    return _DISPATCH[method](y_l, X, Cm, **opts)
