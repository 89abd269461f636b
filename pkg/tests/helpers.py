"""Shared fixtures-by-function for the test modules."""

import numpy as np

from tdisagg.conversion import from_sizes
from tdisagg.synth import ar1_path

RULES = ("sum", "average", "first", "last")


def random_problem(seed, n_low=None, m=None, rule=None, rho=0.5):
    """Seeded ``(y_l, X, Cm)`` with an AR(1) indicator and AR(1) noise."""
    rng = np.random.default_rng(seed)
    n_low = int(rng.integers(5, 41)) if n_low is None else n_low
    m = int(rng.choice([3, 4, 12])) if m is None else m
    rule = RULES[seed % 4] if rule is None else rule
    n = n_low * m
    X = 10.0 + ar1_path(rng, n, 0.8)
    y = 1.0 + 2.0 * X + ar1_path(rng, n, rho)
    Cm = from_sizes([m] * n_low, rule)
    return Cm.C @ y, X, Cm


def exact_problem(seed, n_low=8, m=4, rule="sum"):
    """``y_l = C X`` exactly, with a strictly positive indicator."""
    rng = np.random.default_rng(seed)
    X = 5.0 + rng.uniform(0.0, 10.0, n_low * m)
    Cm = from_sizes([m] * n_low, rule)
    return Cm.C @ X, X, Cm


def brute_force_simplex_qp(A, b, target=1.0, nonneg_tol=1e-12):
    """Enumerate supports of ``min ||A w - b||^2`` over ``{w >= 0, sum w = target}``."""
    from itertools import combinations

    M = A.shape[1]
    best, best_val = None, np.inf
    for k in range(1, M + 1):
        for S in combinations(range(M), k):
            S = list(S)
            # equality-constrained least squares on the support via the KKT matrix
            K = np.zeros((k + 1, k + 1))
            K[:k, :k] = 2 * A[:, S].T @ A[:, S]
            K[:k, k] = 1.0
            K[k, :k] = 1.0
            rhs = np.append(2 * A[:, S].T @ b, target)
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            w = np.zeros(M)
            w[S] = sol[:k]
            if w.min() < -nonneg_tol or abs(w.sum() - target) > 1e-9:
                continue
            val = np.sum((A @ w - b) ** 2)
            if val < best_val:
                best, best_val = w, val
    return best, best_val
