import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ikabc.baselines import (
    AbcEstimate,
    central_tendency,
    ikernel_point_estimate,
    loclinear_abc,
    rejection_abc,
)
from ikabc.data import PairedDataset
from ikabc.synthetic import SyntheticSpec, generate_linear_dataset, mse


def _toy(n=40, d_q=2, d_s=2, seed=0):
    rng = np.random.default_rng(seed)
    return PairedDataset(rng.random((n, d_q)), rng.random((n, d_s)), rng.random(d_s))


def test_rejection_nearest_point_recall():
    ds = _toy()
    ds = PairedDataset(ds.params, ds.sims, ds.sims[7])
    est = rejection_abc(ds, 1 / ds.n, "mean")
    np.testing.assert_array_equal(est.theta_est, ds.params[7])
    assert est.accepted_count == 1


def test_rejection_all_rows_mean():
    ds = _toy()
    np.testing.assert_allclose(rejection_abc(ds, 1.0, "mean").theta_est, ds.params.mean(axis=0))


def test_rejection_two_nearest_by_hand():
    # distances to s*=0 on the scaled axis: 1/3, 2/3, 1
    params = np.array([[10.0], [20.0], [40.0]])
    sims = np.array([[1.0], [2.0], [3.0]])
    ds = PairedDataset(params, sims, [0.0])
    est = rejection_abc(ds, 2 / 3, "mean")
    assert est.accepted_count == 2
    assert est.theta_est.tolist() == [15.0]


def test_rejection_matches_uniform_ikernel():
    ds = _toy(seed=3)
    a = rejection_abc(ds, 1.0, "mean").theta_est
    b = ikernel_point_estimate(np.full(ds.n, 0.25), ds.params).theta_est
    np.testing.assert_allclose(a, b, rtol=1e-12)


@pytest.mark.parametrize("d", [2, 4, 8])
def test_loclinear_exact_on_noiseless_linear(d):
    spec = SyntheticSpec.default("linear", d, 2000, seed=d, eta_stoch=0.0)
    ds = generate_linear_dataset(spec, d)
    est = loclinear_abc(ds, 0.05, "mean")
    assert "fallback" not in est.diagnostics
    assert mse(est.theta_est, spec.x0) < 1e-12


def test_loclinear_zero_offsets_equal_rejection():
    rng = np.random.default_rng(1)
    params = rng.random((30, 2))
    sims = np.zeros((30, 2))
    ds = PairedDataset(params, sims, [0.0, 0.0])
    a = loclinear_abc(ds, 0.5, "median")
    b = rejection_abc(ds, 0.5, "median")
    np.testing.assert_allclose(a.theta_est, b.theta_est)


def test_loclinear_constant_parameter_column():
    rng = np.random.default_rng(2)
    params = np.column_stack([np.full(200, 3.25), rng.random(200)])
    sims = np.column_stack([params[:, 1] + 0.01 * rng.normal(size=200)])
    ds = PairedDataset(params, sims, [0.5])
    est = loclinear_abc(ds, 0.2, "mean")
    assert est.theta_est[0] == pytest.approx(3.25, abs=1e-12)


def test_loclinear_singular_falls_back():
    params = np.arange(10.0)[:, None]
    sims = np.column_stack([np.arange(10.0), np.arange(10.0)])  # collinear outputs
    ds = PairedDataset(params, sims, [0.0, 0.0])
    est = loclinear_abc(ds, 0.5, "mean")
    assert "fallback" in est.diagnostics
    np.testing.assert_allclose(est.theta_est, rejection_abc(ds, 0.5, "mean").theta_est)


def test_ikernel_examples():
    params = np.array([[0.0, 0.0], [2.0, 4.0], [5.0, 5.0]])
    assert ikernel_point_estimate([0, 1.0, 0], params).theta_est.tolist() == [2.0, 4.0]
    np.testing.assert_allclose(
        ikernel_point_estimate(np.full(3, 1 / 3), params).theta_est, params.mean(axis=0)
    )
    np.testing.assert_allclose(
        ikernel_point_estimate([0.5, 0.5], params[:2]).theta_est, [1.0, 2.0]
    )
    with pytest.raises(ValueError, match="degenerate weight mass"):
        ikernel_point_estimate([1.0, -1.0], params[:2])


def test_central_tendency_examples():
    row = np.array([[1.5, -2.0]])
    for est in ("mean", "median", "mode"):
        assert central_tendency(row, est).tolist() == [1.5, -2.0]
    assert central_tendency([1.0, 2.0, 100.0], "median").tolist() == [2.0]
    # 32 bins over [0, 10]: width 0.3125, first bin midpoint 0.15625
    assert central_tendency([0.0, 0.0, 0.0, 10.0], "mode").tolist() == [0.15625]
    with pytest.raises(ValueError):
        central_tendency(np.empty((0, 2)))
    with pytest.raises(ValueError):
        central_tendency(row, "max")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["mean", "median", "mode"]))
def test_permutation_invariance(seed, estimator):
    ds = _toy(60, seed=seed)
    perm = np.random.default_rng(seed + 1).permutation(ds.n)
    shuffled = PairedDataset(ds.params[perm], ds.sims[perm], ds.observation)
    for fn in (rejection_abc, loclinear_abc):
        a = fn(ds, 0.25, estimator).theta_est
        b = fn(shuffled, 0.25, estimator).theta_est
        np.testing.assert_allclose(a, b, atol=1e-10)
    w = np.random.default_rng(seed).random(ds.n)
    np.testing.assert_allclose(
        ikernel_point_estimate(w, ds.params).theta_est,
        ikernel_point_estimate(w[perm], shuffled.params).theta_est,
        atol=1e-12,
    )


def test_estimate_json_keys():
    est = AbcEstimate("rejection", [1.0, 2.0], "mean", 3, {"a": 1})
    assert list(est.to_dict()) == ["method", "estimator", "theta_est", "accepted_count", "diagnostics"]
    with pytest.raises(ValueError):
        AbcEstimate("bogus", [1.0])
    with pytest.raises(ValueError):
        AbcEstimate("rejection", [np.nan])
