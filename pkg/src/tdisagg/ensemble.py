"""Convex combination of several disaggregation fits.

Weights solve ``min ||A w - y_l||^2`` over the probability simplex, where
column ``i`` of ``A`` is member ``i``'s low-frequency fit. Members that pass
through a distribution step reproduce ``y_l`` exactly, which would make every
weight vector optimal; those members therefore enter ``A`` through their
regression part ``C X beta`` (before distribution). Members without a
regression part (denton, uniform, ...) enter through ``C y_hat``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .conversion import build_C
from .errors import AllMembersFailed, EmptyMemberSet, InputError, TDisaggError
from .models import FitResult, _consistent, fit

log = logging.getLogger(__name__)

DEFAULT_MEMBERS = ("ols", "denton", "fernandez", "chow-lin-opt", "litterman-opt", "fast", "uniform")


def nnls(A, b, max_iter=None, tol=None):
    """Lawson-Hanson active-set solution of ``min ||A x - b||`` s.t. ``x >= 0``.

    ``tol`` is the dual-feasibility threshold on ``A'(b - Ax)``; the default
    scales with ``max|A| * max|b|``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    max_iter = 3 * n if max_iter is None else max_iter
    if tol is None:
        tol = 10 * np.finfo(float).eps * max(m, n) * max(np.abs(A).max(initial=0.0), 1.0) * max(np.abs(b).max(initial=0.0), 1.0)

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ b
    it = 0
    while not passive.all() and w[~passive].max() > tol and it < max_iter:
        j = np.flatnonzero(~passive)[np.argmax(w[~passive])]
        passive[j] = True
        while True:
            it += 1
            z = np.zeros(n)
            z[passive] = np.linalg.lstsq(A[:, passive], b, rcond=None)[0]
            if np.all(z[passive] > 0) or it >= max_iter:
                break
            blocking = passive & (z <= 0)
            alpha = np.min(x[blocking] / (x[blocking] - z[blocking]))
            x = x + alpha * (z - x)
            passive &= x > tol
            x[~passive] = 0.0
        x = np.where(passive, np.maximum(z, 0.0), 0.0)
        w = A.T @ (b - A @ x)
    return x


def nnls_simplex(A, b) -> np.ndarray:
    """Least squares over the probability simplex ``{w >= 0, sum(w) = 1}``.

    The sum constraint is appended as a heavily weighted extra row
    (``lambda = 1e6 * (1 + max|b|)``), the augmented problem is solved by
    active-set NNLS, and the result is renormalized to sum exactly to one.

    Raises
    ------
    EmptyMemberSet
        If ``A`` has no columns.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.ndim != 2 or A.shape[1] == 0:
        raise EmptyMemberSet("need at least one member column")
    if A.shape[0] != len(b):
        A = A.reshape(len(b), -1)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise InputError("member matrix and target must be finite")
    M = A.shape[1]
    if M == 1:
        return np.ones(1)
    lam = 1e6 * (1.0 + np.abs(b).max(initial=0.0))
    A_aug = np.vstack([A, lam * np.ones((1, M))])
    b_aug = np.append(b, lam)
    # the penalty row dominates max|A|; the stopping threshold must follow the data scale
    tol = 10 * np.finfo(float).eps * max(A.shape) * max(np.abs(A).max(), 1.0) * max(np.abs(b).max(initial=0.0), 1.0)
    w = nnls(A_aug, b_aug, tol=tol)
    total = w.sum()
    w = w / total if total > 0 else np.full(M, 1.0 / M)
    # rounding in the penalty row (~eps * lam**2) hides small gradient
    # differences, so finish with an exact active-set pass on the simplex
    return _simplex_polish(A, b, w)


def _simplex_eqp(A_S, b):
    """``min ||A_S v - b||`` subject to ``sum(v) = 1`` (minimum-norm if degenerate)."""
    k = A_S.shape[1]
    v0 = np.full(k, 1.0 / k)
    if k == 1:
        return v0
    # orthonormal basis of the hyperplane sum(v) = 0
    N = np.linalg.qr(np.eye(k) - 1.0 / k, mode="reduced")[0][:, : k - 1]
    z = np.linalg.lstsq(A_S @ N, b - A_S @ v0, rcond=None)[0]
    return v0 + N @ z


def _simplex_polish(A, b, w, max_iter=None):
    """Primal active-set iterations for least squares on the simplex, from feasible ``w``."""
    M = A.shape[1]
    max_iter = 10 * M if max_iter is None else max_iter
    scale = np.abs(A.T @ A).max() + np.abs(A.T @ b).max()
    tol = 1e-12 * max(scale, np.finfo(float).tiny)
    support = w > 0
    for _ in range(max_iter):
        v = np.zeros(M)
        v[support] = _simplex_eqp(A[:, support], b)
        if np.all(v[support] >= 0):
            w = v
            g = A.T @ (A @ w - b)
            mu = g[support].mean()
            outside = np.flatnonzero(~support)
            if outside.size == 0 or g[outside].min() >= mu - tol:
                break
            support[outside[np.argmin(g[outside])]] = True
        else:
            blocking = support & (v < 0)
            alpha = np.min(w[blocking] / (w[blocking] - v[blocking]))
            w = w + alpha * (v - w)
            support &= w > 1e-15
            w[~support] = 0.0
    w = np.maximum(w, 0.0)
    return w / w.sum()


def simplex_kkt_residual(A, b, w) -> float:
    """Largest violation of the simplex least-squares optimality conditions."""
    A = np.asarray(A, dtype=float)
    g = A.T @ (A @ w - np.asarray(b, dtype=float))
    support = w > 1e-12
    mu = g[support].mean()
    res = np.abs(g[support] - mu).max(initial=0.0)
    if (~support).any():
        res = max(res, np.maximum(mu - g[~support], 0.0).max())
    return float(res)


@dataclass
class EnsembleResult:
    members: list  # (label, FitResult)
    weights: np.ndarray
    y_hat: np.ndarray
    scores: dict  # label -> (mae, rmse) of C y_hat_i against y_l
    objective: float  # ||C y_hat - y_l||^2
    design: np.ndarray  # columns entering the weight problem
    design_objective: float  # ||design @ weights - y_l||^2
    y_l: np.ndarray
    C: np.ndarray
    rule: str = None
    failed: list = field(default_factory=list)  # (label, message)

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.members]

    def member_sse(self) -> np.ndarray:
        """Per-member squared error of the design columns against ``y_l``."""
        return ((self.design - self.y_l[:, None]) ** 2).sum(axis=0)

    def summary(self) -> str:
        lines = [f"{'member':<24}{'weight':>10}{'MAE':>14}{'RMSE':>14}"]
        for (label, _), w in zip(self.members, self.weights):
            mae, rmse = self.scores[label]
            lines.append(f"{label:<24}{w:>10.4f}{mae:>14.6g}{rmse:>14.6g}")
        for label, msg in self.failed:
            lines.append(f"{label:<24}{'failed':>10}  {msg}")
        lines.append(f"weight objective ||A w - y_l||^2 = {self.design_objective:.6g}")
        lines.append(f"ensemble ||C y_hat - y_l||^2 = {self.objective:.6g}")
        return "\n".join(lines)


def _member_spec(spec):
    if isinstance(spec, str):
        return spec, spec, {}
    method, opts = spec
    label = method + "(" + ", ".join(f"{k}={v}" for k, v in opts.items()) + ")" if opts else method
    return label, method, dict(opts)


def ensemble_fit(y_l, X, Cm, methods=DEFAULT_MEMBERS, **options) -> EnsembleResult:
    """Fit each member and combine them with simplex-constrained weights.

    ``methods`` holds method names or ``(name, options)`` pairs; shared
    ``options`` are forwarded to every member that accepts them. Members
    whose fit raises are dropped with a warning.
    """
    methods = list(methods)
    if not methods:
        raise EmptyMemberSet("ensemble needs at least one member")
    y_l = np.asarray(y_l, dtype=float)
    C = np.asarray(Cm, dtype=float)
    members, failed = [], []
    for spec in methods:
        label, method, opts = _member_spec(spec)
        try:
            res = fit(method, y_l, X, Cm, **{**options, **opts})
        except (TDisaggError, np.linalg.LinAlgError) as exc:
            msg = f"ensemble member {label} failed and was dropped: {exc}"
            log.warning(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            failed.append((label, str(exc)))
            continue
        members.append((label, res))
    if not members:
        raise AllMembersFailed("every ensemble member failed: " + "; ".join(f"{k}: {m}" for k, m in failed))

    design = np.column_stack([C @ (r.y_reg if r.y_reg is not None else r.y_hat) for _, r in members])
    weights = nnls_simplex(design, y_l)
    Y = np.column_stack([r.y_hat for _, r in members])
    y_hat = Y @ weights

    scores = {}
    for label, r in members:
        err = C @ r.y_hat - y_l
        scores[label] = (float(np.mean(np.abs(err))), float(np.sqrt(np.mean(err**2))))
    gap = C @ y_hat - y_l
    dres = design @ weights - y_l
    return EnsembleResult(
        members=members,
        weights=weights,
        y_hat=y_hat,
        scores=scores,
        objective=float(gap @ gap),
        design=design,
        design_objective=float(dres @ dres),
        y_l=y_l,
        C=C,
        rule=getattr(Cm, "rule", None),
        failed=failed,
    )


def run_ensemble(frame, rule: str = "sum", methods=DEFAULT_MEMBERS, **options) -> EnsembleResult:
    """Ensemble over a complete frame with the given aggregation rule."""
    Cm = build_C(frame, rule)
    return ensemble_fit(frame.y_low, frame.X, Cm, methods, **options)


def to_model(er: EnsembleResult) -> FitResult:
    """Wrap an ensemble prediction in the common :class:`FitResult` shape."""
    return FitResult(
        method="ensemble",
        y_hat=er.y_hat,
        y_l=er.y_l,
        C=er.C,
        aggregation_consistent=_consistent(er.C, er.y_hat, er.y_l),
        rule=er.rule,
    )
