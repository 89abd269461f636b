import numpy as np
import pytest

from tdisagg.conversion import build_C
from tdisagg.errors import DegenerateIndicator, InputError, InsufficientObservations
from tdisagg.frame import Frame
from tdisagg.retropolarizer import RetroMethod, auto_select, retropolate, retropolate_frame


def _with_gaps(y, idx):
    y = np.array(y, dtype=float)
    y[list(idx)] = np.nan
    return y


def test_proportion_exact_ratio():
    X = np.array([1.0, 2.0, 3.0, 7.0])
    res = retropolate(_with_gaps(2 * X, [3]), X, "proportion")
    assert res.y_l_filled[3] == pytest.approx(14.0, abs=1e-9)
    assert res.imputed_groups == [3]


def test_linear_recovers_affine():
    rng = np.random.default_rng(0)
    X = rng.uniform(-20, 50, 15)
    y = 3 + 2 * X
    res = retropolate(_with_gaps(y, [0, 7, 14]), X, "linear")
    assert np.max(np.abs(res.y_l_filled - y)) <= 1e-8


def test_polynomial_degree_two():
    X = np.arange(1.0, 8.0)
    res = retropolate(_with_gaps(X**2, [6]), X, RetroMethod("polynomial", degree=2))
    assert abs(res.y_l_filled[6] - 49.0) <= 1e-6


def test_polynomial_degree_three():
    X = np.linspace(-3, 3, 12)
    y = 1 - X + 0.5 * X**3
    res = retropolate(_with_gaps(y, [2, 9]), X, "poly3")
    assert np.max(np.abs(res.y_l_filled - y)) <= 1e-6


def test_exp_smoothing_states():
    y = np.array([10.0, np.nan, 20.0, np.nan, np.nan])
    res = retropolate(y, np.arange(5.0), RetroMethod("exp-smoothing", alpha=0.5))
    # states: 10, 10 (gap), 15, 15, 15
    np.testing.assert_allclose(res.y_l_filled, [10, 10, 20, 15, 15])
    lead = retropolate(np.array([np.nan, 4.0, 6.0]), np.zeros(3), "expsmooth")
    assert lead.y_l_filled[0] == 4.0


def test_mlp_fits_linear_data_and_is_deterministic():
    rng = np.random.default_rng(7)
    X = rng.uniform(0, 50, 24)
    y = 3 + 2 * X
    y_gap = _with_gaps(y, [4, 11, 19, 23])
    a = retropolate(y_gap, X, "mlp")
    b = retropolate(y_gap, X, "mlp")
    assert np.array_equal(a.y_l_filled, b.y_l_filled)
    assert a.rmse <= 0.1 * np.std(y[~np.isnan(y_gap)])


def test_observed_entries_pass_through_exactly():
    rng = np.random.default_rng(1)
    X = rng.uniform(1, 10, 20)
    y = _with_gaps(rng.normal(size=20) * 3 + X, [2, 5])
    for name in ["proportion", "linear", "poly2", "poly3", "expsmooth", "mlp", "auto"]:
        out = retropolate(y, X, name).y_l_filled
        obs = ~np.isnan(y)
        assert np.array_equal(out[obs], y[obs])
        assert np.all(np.isfinite(out))


@pytest.mark.parametrize(
    "n_obs, corr, expected",
    [(4, 0.99, "proportion"), (20, 0.99, "linear"), (8, 0.1, "exp-smoothing"), (14, 0.1, "polynomial")],
)
def test_auto_select(n_obs, corr, expected):
    rng = np.random.default_rng(0)
    x = rng.normal(size=n_obs)
    noise = rng.normal(size=n_obs)
    noise -= np.polyval(np.polyfit(x, noise, 1), x)  # orthogonal to x
    y = corr * x / x.std() + np.sqrt(1 - corr**2) * noise / noise.std()
    X = np.r_[x, 1.0]
    y = np.r_[y, np.nan]
    assert auto_select(y, X).kind == expected


def test_errors():
    with pytest.raises(InsufficientObservations):
        retropolate([1.0, np.nan, np.nan], [1.0, 2.0, 3.0], "linear")
    with pytest.raises(InsufficientObservations):
        retropolate([1.0, 2.0, np.nan], [1.0, 2.0, 3.0], "poly2")
    with pytest.raises(InsufficientObservations):
        retropolate(_with_gaps(np.arange(8.0), [0]), np.arange(8.0), "mlp")
    with pytest.raises(DegenerateIndicator):
        retropolate([1.0, 2.0, np.nan], [5.0, 5.0, 5.0], "linear")
    with pytest.raises(InputError):
        retropolate([1.0, 2.0, np.nan], [1.0, np.nan, 3.0], "linear")
    with pytest.raises(InputError):
        RetroMethod("polynomial", degree=5)
    with pytest.raises(InputError):
        RetroMethod.parse("spline")


def test_frame_level_with_aux_column():
    # y_l = 10 * aux exactly, X unrelated
    keys = (1, 1, 2, 2, 3, 3)
    aux = np.array([1.0, 2.0, 2.0, 2.0, 5.0, 1.0])
    f = Frame(index=keys, grain=[1, 2] * 3, y=[30.0, 30.0, 40.0, 40.0, np.nan, np.nan],
              X=[9.0, 1.0, 4.0, 4.0, 0.5, 0.5], extras={"aux": aux})
    Cm = build_C(f, "sum")
    filled, res = retropolate_frame(f, Cm, "proportion", aux="aux")
    assert filled.y[-2:].tolist() == [60.0, 60.0]
    assert res.imputed_groups == [2]
    assert "imputed groups: 3" in res.summary(f.group_keys)
