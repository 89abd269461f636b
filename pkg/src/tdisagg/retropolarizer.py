"""Imputation of missing low-frequency targets from the aggregated indicator.

Observed ``y_l`` entries are never modified; only gaps are filled. The
predictor is ``X_l`` (the indicator aggregated with the same rule), or an
auxiliary column's group aggregate when one is supplied.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateIndicator, InputError, InsufficientObservations, LengthMismatch, MissingColumn

log = logging.getLogger(__name__)

KINDS = ("proportion", "linear", "polynomial", "exp-smoothing", "mlp", "auto")

# CLI spellings
ALIASES = {
    "proportion": ("proportion", {}),
    "linear": ("linear", {}),
    "poly2": ("polynomial", {"degree": 2}),
    "poly3": ("polynomial", {"degree": 3}),
    "polynomial": ("polynomial", {"degree": 2}),
    "expsmooth": ("exp-smoothing", {"alpha": 0.5}),
    "exp-smoothing": ("exp-smoothing", {"alpha": 0.5}),
    "mlp": ("mlp", {}),
    "auto": ("auto", {}),
}

# auto-selection thresholds
AUTO_MIN_FOR_REGRESSION = 6
AUTO_CORR = 0.8
AUTO_MIN_FOR_POLY = 12


@dataclass(frozen=True)
class MLPConfig:
    hidden: int = 8
    epochs: int = 2000
    learning_rate: float = 0.01
    seed: int = 42


@dataclass(frozen=True)
class RetroMethod:
    kind: str = "auto"
    degree: int = 2
    alpha: float = 0.5
    mlp: MLPConfig = field(default_factory=MLPConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"retropolation method must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "polynomial" and self.degree not in (2, 3):
            raise InputError(f"polynomial degree must be 2 or 3, got {self.degree}")
        if not 0.0 < self.alpha <= 1.0:
            raise InputError(f"smoothing alpha must lie in (0, 1], got {self.alpha}")

    @classmethod
    def parse(cls, name: str, seed: int = 42) -> "RetroMethod":
        """Build from a CLI name such as ``poly3`` or ``expsmooth``."""
        try:
            kind, opts = ALIASES[name]
        except KeyError:
            raise InputError(f"unknown retropolation method {name!r}; choose from {sorted(ALIASES)}") from None
        return cls(kind=kind, mlp=MLPConfig(seed=seed), **opts)

    @property
    def label(self) -> str:
        if self.kind == "polynomial":
            return f"polynomial({self.degree})"
        if self.kind == "exp-smoothing":
            return f"exp-smoothing({self.alpha:g})"
        return self.kind


@dataclass
class RetroResult:
    y_l_filled: np.ndarray
    imputed_groups: list
    method_used: RetroMethod
    rmse: float  # in-sample, observed groups only

    def summary(self, keys=None) -> str:
        names = [keys[i] if keys is not None else i for i in self.imputed_groups]
        lines = [f"method: {self.method_used.label}", f"in-sample RMSE on observed groups: {self.rmse:.6g}"]
        if names:
            lines.append("imputed groups: " + ", ".join(str(k) for k in names))
        else:
            lines.append("no missing targets")
        return "\n".join(lines)


def _check_variance(x):
    if np.ptp(x) == 0:
        raise DegenerateIndicator("indicator is constant over the observed groups; regression is undefined")


def _fit_proportion(x_obs, y_obs):
    denom = x_obs.sum()
    if denom == 0:
        raise DegenerateIndicator("indicator sums to zero over the observed groups")
    r = y_obs.sum() / denom
    return lambda x: r * x


def _fit_polynomial(x_obs, y_obs, degree):
    _check_variance(x_obs)
    # centre and scale before building the Vandermonde matrix
    mu, sd = x_obs.mean(), x_obs.std()
    V = np.vander((x_obs - mu) / sd, degree + 1)
    coef = np.linalg.lstsq(V, y_obs, rcond=None)[0]
    return lambda x: np.vander((np.asarray(x) - mu) / sd, degree + 1) @ coef


def _exp_smooth(y, alpha):
    """Forward smoothing of ``y`` alone; gaps take the current state."""
    out = np.empty_like(y)
    obs = np.flatnonzero(~np.isnan(y))
    s = y[obs[0]]  # leading gaps start from the first observation
    for t, v in enumerate(y):
        if not np.isnan(v):
            s = alpha * v + (1.0 - alpha) * s
        out[t] = s
    return out


def _fit_mlp(x_obs, y_obs, cfg: MLPConfig):
    """One hidden tanh layer trained by full-batch gradient descent on MSE."""
    _check_variance(x_obs)
    x_mu, x_sd = x_obs.mean(), x_obs.std()
    y_mu, y_sd = y_obs.mean(), y_obs.std()
    y_sd = y_sd if y_sd > 0 else 1.0
    xs = ((x_obs - x_mu) / x_sd)[:, None]
    ys = (y_obs - y_mu) / y_sd
    n = len(ys)

    rng = np.random.default_rng(cfg.seed)
    W1 = rng.normal(0.0, 1.0, (1, cfg.hidden))
    b1 = np.zeros(cfg.hidden)
    W2 = rng.normal(0.0, 1.0 / np.sqrt(cfg.hidden), cfg.hidden)
    b2 = 0.0
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        H = np.tanh(xs @ W1 + b1)
        d_out = 2.0 * (H @ W2 + b2 - ys) / n  # d MSE / d output
        dH = np.outer(d_out, W2) * (1.0 - H**2)
        W2 = W2 - lr * (H.T @ d_out)
        b2 = b2 - lr * d_out.sum()
        W1 = W1 - lr * (xs.T @ dH)
        b1 = b1 - lr * dH.sum(axis=0)

    def predict(x):
        h = np.tanh(((np.asarray(x, dtype=float) - x_mu) / x_sd)[:, None] @ W1 + b1)
        return (h @ W2 + b2) * y_sd + y_mu

    return predict


def auto_select(y_l, X_l) -> RetroMethod:
    """Pick a method from how many targets are observed and how well ``X_l`` tracks them.

    * fewer than 6 observed: proportion
    * ``|corr| >= 0.8``: linear
    * at least 12 observed: polynomial(2)
    * otherwise: exp-smoothing(0.5)
    """
    y_l = np.asarray(y_l, dtype=float)
    X_l = np.asarray(X_l, dtype=float)
    obs = ~np.isnan(y_l)
    k = int(obs.sum())
    if k < 2:
        raise InsufficientObservations(f"need at least 2 observed targets, got {k}")
    if k < AUTO_MIN_FOR_REGRESSION:
        return RetroMethod("proportion")
    x, y = X_l[obs], y_l[obs]
    corr = 0.0 if np.ptp(x) == 0 or np.ptp(y) == 0 else abs(np.corrcoef(x, y)[0, 1])
    if corr >= AUTO_CORR:
        return RetroMethod("linear")
    if k >= AUTO_MIN_FOR_POLY:
        return RetroMethod("polynomial", degree=2)
    return RetroMethod("exp-smoothing", alpha=0.5)


def _min_obs(method: RetroMethod) -> int:
    if method.kind == "polynomial":
        return method.degree + 1
    if method.kind == "mlp":
        return 8
    return 2


def retropolate(y_l, X_l, method: RetroMethod | str = "auto") -> RetroResult:
    """Fill missing entries of ``y_l`` (NaN) using ``X_l``.

    Parameters
    ----------
    y_l : array_like
        Low-frequency targets, NaN where missing.
    X_l : array_like
        Fully observed predictor aggregated to the same groups.
    method : RetroMethod or str
        A method, or a name accepted by :meth:`RetroMethod.parse`.

    Raises
    ------
    InsufficientObservations
    DegenerateIndicator
    """
    if isinstance(method, str):
        method = RetroMethod.parse(method)
    y_l = np.asarray(y_l, dtype=float).reshape(-1)
    X_l = np.asarray(X_l, dtype=float).reshape(-1)
    if y_l.shape != X_l.shape:
        raise LengthMismatch(f"y_l has {len(y_l)} entries, X_l has {len(X_l)}")
    if not np.all(np.isfinite(X_l)):
        raise InputError("X_l must be fully observed; complete the frame first")
    if method.kind == "auto":
        method = auto_select(y_l, X_l)
        log.info("retropolation: auto-selected %s", method.label)

    obs = ~np.isnan(y_l)
    k = int(obs.sum())
    need = _min_obs(method)
    if k < need:
        raise InsufficientObservations(f"{method.label} needs at least {need} observed targets, got {k}")
    x_obs, y_obs = X_l[obs], y_l[obs]

    if method.kind == "exp-smoothing":
        pred = _exp_smooth(y_l, method.alpha)
    else:
        if method.kind == "proportion":
            model = _fit_proportion(x_obs, y_obs)
        elif method.kind == "linear":
            model = _fit_polynomial(x_obs, y_obs, 1)
        elif method.kind == "polynomial":
            model = _fit_polynomial(x_obs, y_obs, method.degree)
        else:
            model = _fit_mlp(x_obs, y_obs, method.mlp)
        pred = model(X_l)

    filled = y_l.copy()
    filled[~obs] = pred[~obs]
    resid = pred[obs] - y_obs
    return RetroResult(
        y_l_filled=filled,
        imputed_groups=[int(i) for i in np.flatnonzero(~obs)],
        method_used=method,
        rmse=float(np.sqrt(np.mean(resid**2))),
    )


def group_aggregate(frame, column, Cm):
    """Aggregate a high-frequency column of ``frame`` (``"X"`` or an extra) with ``Cm``."""
    if column in (None, "X"):
        values = frame.X
    else:
        try:
            values = frame.extras[column]
        except KeyError:
            raise MissingColumn(f"auxiliary column {column!r} not in input") from None
    return np.asarray(Cm, dtype=float) @ values


def retropolate_frame(frame, Cm, method: RetroMethod | str = "auto", aux: str | None = None):
    """Fill missing group targets of a complete frame; returns ``(frame, RetroResult)``."""
    y_l = frame.y_low
    X_l = group_aggregate(frame, aux, Cm)
    res = retropolate(y_l, X_l, method)
    sizes = [length for _, length in frame.group_spans]
    y = np.repeat(res.y_l_filled, sizes)
    return frame.with_columns(y=y), res
