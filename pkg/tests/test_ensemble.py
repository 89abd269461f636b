import warnings

import numpy as np
import pytest
from scipy.optimize import nnls as scipy_nnls

from helpers import brute_force_simplex_qp, exact_problem, random_problem
from tdisagg.ensemble import (
    DEFAULT_MEMBERS,
    ensemble_fit,
    nnls,
    nnls_simplex,
    run_ensemble,
    simplex_kkt_residual,
    to_model,
)
from tdisagg.errors import AllMembersFailed, EmptyMemberSet
from tdisagg.postestimation import adjust
from tdisagg.synth import generate


def test_nnls_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        A = rng.normal(size=(12, 5))
        b = rng.normal(size=12)
        ours = nnls(A, b)
        ref, _ = scipy_nnls(A, b)
        assert np.all(ours >= 0)
        np.testing.assert_allclose(np.linalg.norm(A @ ours - b), np.linalg.norm(A @ ref - b), rtol=1e-9, atol=1e-12)


def test_simplex_single_column():
    assert nnls_simplex(np.ones((3, 1)), np.arange(3.0)).tolist() == [1.0]


def test_simplex_exact_first_column():
    b = np.array([1.0, -2.0, 3.0])
    w = nnls_simplex(np.column_stack([b, 2 * b]), b)
    np.testing.assert_allclose(w, [1.0, 0.0], atol=1e-10)


def test_simplex_identical_columns():
    b = np.array([1.0, 2.0])
    col = np.array([3.0, 1.0])
    w = nnls_simplex(np.column_stack([col, col, col]), b)
    assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12
    np.testing.assert_allclose(np.sum((col - b) ** 2), np.sum((np.column_stack([col] * 3) @ w - b) ** 2))


def test_simplex_empty():
    with pytest.raises(EmptyMemberSet):
        nnls_simplex(np.zeros((3, 0)), np.zeros(3))


def test_simplex_against_vertex_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(100):
        M = int(rng.integers(2, 6))
        A = rng.normal(size=(8, M)) * rng.uniform(0.1, 100)
        b = rng.normal(size=8) * rng.uniform(0.1, 100)
        w = nnls_simplex(A, b)
        _, best = brute_force_simplex_qp(A, b)
        val = np.sum((A @ w - b) ** 2)
        assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12
        assert val <= best * (1 + 1e-9) + 1e-12
        assert simplex_kkt_residual(A, b, w) <= 1e-6 * (1 + np.abs(A.T @ A).max() + np.abs(A.T @ b).max())


def test_weights_permute_with_members():
    y_l, X, Cm = random_problem(3, n_low=15, m=4, rule="sum")
    members = ["ols", ("chow-lin", {"rho": 0.5}), "fernandez", "fast"]
    a = ensemble_fit(y_l, X, Cm, members)
    b = ensemble_fit(y_l, X, Cm, members[::-1])
    np.testing.assert_allclose(a.weights, b.weights[::-1], atol=1e-8)
    np.testing.assert_allclose(a.design_objective, b.design_objective, rtol=1e-10)


def test_dropping_zero_weight_member():
    y_l, X, Cm = random_problem(4, n_low=15, m=4, rule="average")
    members = ["ols", "fernandez", "fast", ("chow-lin", {"rho": 0.3})]
    er = ensemble_fit(y_l, X, Cm, members)
    zero = [spec for spec, w in zip(members, er.weights) if w == 0]
    if not zero:
        pytest.skip("no zero-weight member on this instance")
    kept = [spec for spec in members if spec not in zero[:1]]
    er2 = ensemble_fit(y_l, X, Cm, kept)
    np.testing.assert_allclose(er.y_hat, er2.y_hat, atol=1e-9)


def test_exact_member_gives_zero_objective():
    y_l, X, Cm = exact_problem(2)
    er = ensemble_fit(y_l, X, Cm, ["uniform", ("chow-lin", {"rho": 0.5})], intercept=False)
    assert er.objective <= 1e-10
    assert er.design_objective <= 1e-10


def test_default_members_and_invariants():
    f = generate(n_low=16, m=4, seed=5)
    er = run_ensemble(f, "sum")
    assert er.labels == list(DEFAULT_MEMBERS)
    assert np.all(er.weights >= 0) and abs(er.weights.sum() - 1) <= 1e-8
    Y = np.column_stack([r.y_hat for _, r in er.members])
    np.testing.assert_allclose(er.y_hat, Y @ er.weights, atol=1e-12)
    assert er.design_objective <= er.member_sse().min() + 1e-9
    for label, (mae, rmse) in er.scores.items():
        assert 0 <= mae <= rmse + 1e-15
    assert "weight" in er.summary()


def test_failed_member_dropped_with_warning():
    # constant indicator: regression members with an intercept are rank deficient
    y_l = np.array([4.0, 8.0, 6.0])
    X = np.ones(6)
    from tdisagg.conversion import from_sizes

    with pytest.warns(RuntimeWarning):
        er = ensemble_fit(y_l, X, from_sizes([2, 2, 2]), ["ols", "denton", "uniform"])
    assert er.labels == ["denton", "uniform"]
    assert er.failed and er.failed[0][0] == "ols"


def test_all_members_failed():
    from tdisagg.conversion import from_sizes

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(AllMembersFailed):
            ensemble_fit([4.0, 8.0], np.ones(4), from_sizes([2, 2]), ["ols", "fernandez"])
    with pytest.raises(EmptyMemberSet):
        ensemble_fit([4.0, 8.0], np.ones(4), from_sizes([2, 2]), [])


def test_to_model_round_trip():
    y_l, X, Cm = random_problem(6, n_low=10, m=4)
    er = ensemble_fit(y_l, X, Cm, ["fernandez"])
    model = to_model(er)
    assert model.method == "ensemble" and model.beta is None and model.rho is None
    np.testing.assert_array_equal(model.y_hat, er.members[0][1].y_hat)
    gap = model.y_hat_low - y_l
    np.testing.assert_allclose(gap @ gap, er.objective, atol=1e-12)
    adjusted, _ = adjust(model.y_hat, y_l, Cm)
    assert adjusted.shape == model.y_hat.shape
