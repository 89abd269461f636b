"""Seeded synthetic disaggregation problems with a known high-frequency truth."""

from __future__ import annotations

import numpy as np

from .conversion import from_sizes
from .frame import Frame


def ar1_path(rng: np.random.Generator, n: int, rho: float, sd: float = 1.0) -> np.ndarray:
    """Stationary AR(1) sample of length ``n``."""
    e = rng.normal(0.0, sd, n)
    out = np.empty(n)
    out[0] = e[0] / np.sqrt(1.0 - rho * rho) if abs(rho) < 1 else e[0]
    for t in range(1, n):
        out[t] = rho * out[t - 1] + e[t]
    return out


def generate(
    n_low: int = 40,
    m: int = 4,
    rho: float = 0.5,
    beta: float = 2.0,
    noise_sd: float = 1.0,
    seed: int = 42,
    rule: str = "sum",
    const: float = 0.0,
    x_rho: float = 0.8,
    x_level: float = 10.0,
    start: int = 2000,
) -> Frame:
    """Simulate ``y = const + beta * X + u`` with AR(1) ``X`` and AR(1) ``u``.

    The returned frame has ``y`` set to the aggregated target (repeated on
    every row of its group), ``X`` the indicator, and an extra ``y_true``
    column holding the simulated high-frequency series.
    """
    rng = np.random.default_rng(seed)
    n = n_low * m
    X = x_level + ar1_path(rng, n, x_rho, 1.0)
    y_true = const + beta * X + ar1_path(rng, n, rho, noise_sd)
    Cm = from_sizes([m] * n_low, rule)
    y_l = Cm.C @ y_true
    return Frame(
        index=tuple(start + g for g in range(n_low) for _ in range(m)),
        grain=np.tile(np.arange(1, m + 1), n_low),
        y=np.repeat(y_l, m),
        X=X,
        extras={"y_true": y_true},
    )
