"""Generalized least squares on the low-frequency projection of a covariance Q."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import LengthMismatch, InputError, RankDeficient, SingularV

COND_LIMIT = 1e12
RIDGE = 1e-10


def design(X, intercept: bool) -> np.ndarray:
    """High-frequency design matrix: ``[1, X]`` or ``[X]``."""
    X = np.asarray(X, dtype=float).reshape(-1)
    if intercept:
        return np.column_stack([np.ones_like(X), X])
    return X[:, None]


def check_inputs(y_l, X, C):
    y_l = np.asarray(y_l, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float).reshape(-1)
    C = np.asarray(C, dtype=float)
    if C.shape != (len(y_l), len(X)):
        raise LengthMismatch(f"C has shape {C.shape}; y_l has {len(y_l)} entries and X has {len(X)}")
    if not np.all(np.isfinite(y_l)):
        raise InputError("y_l contains missing or non-finite values; retropolate first")
    if not np.all(np.isfinite(X)):
        raise InputError("X contains missing or non-finite values; complete the frame first")
    return y_l, X, C


def check_rank(X_l: np.ndarray):
    k = X_l.shape[1]
    if X_l.shape[0] < k or np.linalg.matrix_rank(X_l) < k:
        raise RankDeficient(f"aggregated design has rank < {k}; drop the intercept or use a non-constant indicator")


def factor_V(V: np.ndarray):
    """Cholesky factor of V; a small ridge is added when V is near singular.

    Returns ``(cho, V_used)``.
    """
    V = 0.5 * (V + V.T)
    try:
        cho = linalg.cho_factor(V, lower=True, check_finite=False)
        d = np.abs(np.diag(cho[0]))
        if d.min() > 0 and (d.max() / d.min()) ** 2 <= COND_LIMIT:
            return cho, V
    except (linalg.LinAlgError, ValueError):
        pass
    scale = np.mean(np.diag(V))
    if not np.isfinite(scale) or scale <= 0:
        raise SingularV("V has a non-positive or non-finite diagonal")
    V = V + RIDGE * scale * np.eye(V.shape[0])
    try:
        return linalg.cho_factor(V, lower=True), V
    except linalg.LinAlgError:
        raise SingularV("V is not positive definite even after ridge regularization") from None


@dataclass
class GLSFit:
    beta: np.ndarray
    residuals: np.ndarray  # u = y_l - X_l beta
    Vinv_u: np.ndarray
    XtVinvX: np.ndarray
    V: np.ndarray
    rss: float  # u' V^-1 u
    logdet: float


def gls(y_l: np.ndarray, X_l: np.ndarray, V: np.ndarray) -> GLSFit:
    """GLS regression of ``y_l`` on ``X_l`` with error covariance ``V``."""
    cho, V = factor_V(V)
    Vinv_X = linalg.cho_solve(cho, X_l, check_finite=False)
    XtVinvX = X_l.T @ Vinv_X
    XtVinvX = 0.5 * (XtVinvX + XtVinvX.T)
    try:
        beta = linalg.solve(XtVinvX, Vinv_X.T @ y_l, assume_a="pos")
    except (linalg.LinAlgError, ValueError):
        raise RankDeficient("X_l' V^-1 X_l is singular") from None
    u = y_l - X_l @ beta
    Vinv_u = linalg.cho_solve(cho, u, check_finite=False)
    return GLSFit(
        beta=beta,
        residuals=u,
        Vinv_u=Vinv_u,
        XtVinvX=XtVinvX,
        V=V,
        rss=float(u @ Vinv_u),
        logdet=float(2.0 * np.sum(np.log(np.diag(cho[0])))),
    )


def coefficient_vcov(fit: GLSFit, n_low: int) -> np.ndarray:
    """``sigma^2 (X_l' V^-1 X_l)^-1`` with ``sigma^2 = u'V^-1u / (n_l - k)``."""
    k = len(fit.beta)
    dof = n_low - k
    if dof < 1:
        return np.full((k, k), np.nan)
    sigma2 = fit.rss / dof
    return sigma2 * linalg.inv(fit.XtVinvX)
