import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from tdisagg.conversion import from_sizes
from tdisagg.errors import LengthMismatch, NegativeTarget
from tdisagg.postestimation import adjust, simplex_project


def _one(group, rule):
    return adjust(np.array(group, dtype=float), None, from_sizes([len(group)], rule))


def qp_projection_oracle(v, s):
    """Active-set enumeration for min ||y - v||^2, y >= 0, sum y = s (exact for small m)."""
    from itertools import combinations

    m = len(v)
    best, best_val = None, np.inf
    for k in range(1, m + 1):
        for S in combinations(range(m), k):
            S = list(S)
            y = np.zeros(m)
            y[S] = v[S] - (v[S].sum() - s) / k
            if y.min() < -1e-12:
                continue
            val = np.sum((y - v) ** 2)
            if val < best_val:
                best, best_val = y, val
    return best


# -- simplex projection -----------------------------------------------------


def test_projection_examples():
    np.testing.assert_array_equal(simplex_project([-1.0, 3.0], 2.0), [0.0, 2.0])
    np.testing.assert_allclose(simplex_project([5.0, 5.0], 2.0), [1.0, 1.0])
    v = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(simplex_project(v, 1.0), v, atol=1e-15)
    assert simplex_project([3.0, -1.0], 0.0).tolist() == [0.0, 0.0]
    with pytest.raises(NegativeTarget):
        simplex_project([1.0], -1.0)


def test_projection_against_oracles():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = int(rng.integers(1, 9))
        v = rng.normal(size=m) * 5
        s = float(rng.uniform(0, 10))
        np.testing.assert_allclose(simplex_project(v, s), qp_projection_oracle(v, s), atol=1e-8)


def test_projection_matches_generic_solver():
    v = np.array([-2.0, 0.5, 4.0, -1.0])
    s = 3.0
    res = minimize(lambda y: np.sum((y - v) ** 2), np.full(4, s / 4), method="SLSQP",
                   bounds=[(0, None)] * 4, constraints={"type": "eq", "fun": lambda y: y.sum() - s},
                   options={"ftol": 1e-14})
    np.testing.assert_allclose(simplex_project(v, s), res.x, atol=1e-6)


# -- worked group cases --------------------------------------------------------


def test_sum_redistribute():
    out, rep = _one([-2, 5, 5], "sum")
    np.testing.assert_allclose(out, [0, 4, 4])
    assert rep.records[0].strategy == "redistribute" and not rep.records[0].unresolved


def test_average_projection():
    out, rep = _one([-1, 3], "average")
    np.testing.assert_allclose(out, [0, 2])
    assert rep.records[0].strategy == "qp-projection"


def test_sum_negative_total_even_spread():
    out, rep = _one([-3, -1], "sum")
    np.testing.assert_allclose(out, [-2, -2])
    assert rep.records[0].strategy == "even-spread" and rep.records[0].unresolved


def test_average_negative_target_zero_fallback():
    out, rep = _one([-3, 1], "average")
    np.testing.assert_allclose(out, [0, 1])
    assert rep.records[0].strategy == "zero-fallback" and rep.records[0].unresolved


def test_first_reset():
    out, rep = _one([-1, 2, 3], "first")
    np.testing.assert_allclose(out, [0, 1.6, 2.4])
    assert out.sum() == pytest.approx(4.0)
    assert rep.records[0].strategy == "first-reset"


def test_first_keeps_anchor_when_rest_negative():
    out, rep = _one([2, -1, 3], "first")
    np.testing.assert_allclose(out, [2, 0, 2])
    assert rep.records[0].strategy == "redistribute" and not rep.records[0].unresolved


def test_last_mirror_and_clamping():
    out, _ = _one([3, 2, -1], "last")
    np.testing.assert_allclose(out, [2.4, 1.6, 0])
    # anchor kept; the rest cannot keep its negative total, so it is clamped
    out, _ = _one([0, 0, -1, 5], "last")
    np.testing.assert_allclose(out, [0, 0, 0, 5])
    # anchor reset; the group total goes to the remaining positives only
    out, rep = _one([-1, 0, 4], "first")
    np.testing.assert_allclose(out, [0, 0, 3])
    out, _ = _one([-3, 0, 0, 6], "first")
    np.testing.assert_allclose(out, [0, 0, 0, 3])
    out, _ = _one([-1, 0, 3, -1], "first")
    np.testing.assert_allclose(out, [0, 0, 1, 0])


def test_untouched_groups_pass_through_and_report():
    y = np.array([1.0, 2.0, -1.0, 4.0, 3.0, 3.0])
    out, rep = adjust(y, None, from_sizes([2, 2, 2], "sum"))
    np.testing.assert_array_equal(out[[0, 1, 4, 5]], y[[0, 1, 4, 5]])
    assert rep.n_touched == 1 and rep.records[0].group == 1
    assert "1 group(s) adjusted" in rep.summary()
    assert y[2] == -1.0  # input not mutated


def test_length_checks():
    with pytest.raises(LengthMismatch):
        adjust(np.ones(3), None, from_sizes([2, 2]))
    with pytest.raises(LengthMismatch):
        adjust(np.ones(4), [1.0], from_sizes([2, 2]))


# -- contracts on random groups -----------------------------------------------


def _check_contract(group, rule):
    g = np.asarray(group, dtype=float)
    out, rep = _one(g, rule)
    unresolved = bool(rep.records) and rep.records[0].unresolved
    if not unresolved:
        assert np.all(out >= 0)
    else:
        assert rep.records[0].strategy in ("even-spread", "zero-fallback", "first-reset", "last-reset", "unresolved")
    if rule in ("sum", "average") and g.sum() >= 0:
        assert abs(out.sum() - g.sum()) <= 1e-9 * (1 + np.abs(g).sum())
    if rule == "sum" and g.sum() < 0:
        assert abs(out.sum() - g.sum()) <= 1e-9 * (1 + np.abs(g).sum())
    if rule in ("first", "last"):
        a = 0 if rule == "first" else -1
        if g[a] >= 0:
            assert out[a] == g[a]
    again, _ = _one(out, rule)
    np.testing.assert_allclose(again, out, atol=1e-12, rtol=0)


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=12).filter(lambda v: min(v) < 0),
    st.sampled_from(["sum", "average", "first", "last"]),
)
def test_contracts_property(group, rule):
    _check_contract(group, rule)
