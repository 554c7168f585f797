import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from climate_contingent.ccb import (
    CCBSpec,
    CouponSchedule,
    build_bins,
    coupon_matrix,
    cumulative_returns,
    expected_npv,
    npv_path,
    npv_paths,
    npv_traditional,
    optimize_schedule,
    realized_coupon,
    schedule_from_weights,
    simulate_climate_paths,
)
from climate_contingent.climate_data import OutcomeBins, YearlySampler
from climate_contingent.errors import ConfigError, DomainError, StructuringError
from climate_contingent.streams import CLIMATE_EVAL

SPEC = CCBSpec()
RAMP = CouponSchedule(tuple(np.linspace(0.01, 0.07, 15)))


def annuity(m, d, t):
    v = (1 + d) ** -t
    return m * (1 - v) / d + v


@pytest.fixture(scope="module")
def bins(sample_table):
    return build_bins(sample_table, SPEC, seed=0)[0]


@pytest.fixture(scope="module")
def solved(sample_table, bins):
    return optimize_schedule(SPEC, bins, sample_table, seed=0)


def test_traditional_npv_matches_annuity():
    assert npv_traditional(0.04, 0.01, 25) == pytest.approx(annuity(0.04, 0.01, 25), abs=1e-12)
    assert npv_traditional(0.04, 0.01, 25) == pytest.approx(1.6607, abs=1e-4)
    assert npv_traditional(0.04, 0.0, 2) == pytest.approx(1.08, abs=1e-15)


@pytest.mark.parametrize("r", [0.01, 0.04, 0.07])
@pytest.mark.parametrize("t", [1, 25])
def test_par_bond_is_exactly_one(r, t):
    assert npv_traditional(r, r, t) == 1.0


@given(st.floats(0.0, 0.2), st.floats(0.001, 0.2), st.integers(1, 60))
def test_traditional_npv_property(m, d, t):
    assert npv_traditional(m, d, t) == pytest.approx(annuity(m, d, t), rel=1e-12)


def test_spec_validation():
    with pytest.raises(ConfigError) as e:
        CCBSpec(min_rate=0.05, max_rate=0.03)
    assert e.value.field == "max_rate"
    for kw in (dict(granularity=1), dict(blend_lambda=1.5), dict(initial_fixed_years=30)):
        with pytest.raises(ConfigError):
            CCBSpec(**kw)


def test_spec_years_and_target():
    assert SPEC.years[0] == 2022 and SPEC.years[-1] == 2046
    assert SPEC.target_npv == npv_traditional(0.04, 0.01, 25)


def test_realized_coupon_examples(bins):
    top = bins.edges[-1] + 100
    assert realized_coupon(5, top, bins, RAMP, CCBSpec(blend_lambda=0.0)) == 0.04
    r = realized_coupon(5, top, bins, RAMP, SPEC)
    assert r == RAMP.rates[-1] and r <= 0.07
    fixed = CCBSpec(initial_fixed_years=2)
    assert realized_coupon(1, top, bins, RAMP, fixed) == 0.04
    assert realized_coupon(3, top, bins, RAMP, fixed) == RAMP.rates[-1]
    with pytest.raises(DomainError):
        realized_coupon(0, top, bins, RAMP, SPEC)


def test_coupon_matrix_matches_scalar(sample_table, bins):
    spec = CCBSpec(initial_fixed_years=3, blend_lambda=0.6)
    paths = simulate_climate_paths(sample_table, spec, 20, seed=1)
    c = coupon_matrix(paths, bins, RAMP, spec)
    for i in range(20):
        for t in range(25):
            assert c[i, t] == realized_coupon(t + 1, paths[i, t], bins, RAMP, spec)


def test_flat_market_schedule_reduces_to_traditional(sample_table, bins):
    flat = CouponSchedule.flat(0.04, 15)
    path = simulate_climate_paths(sample_table, SPEC, 1, seed=3)[0]
    assert npv_path(flat, path, SPEC, bins) == SPEC.target_npv
    est = expected_npv(flat, sample_table, SPEC, bins, n_sims=300, seed=9)
    assert est.mean == pytest.approx(SPEC.target_npv, abs=1e-12)


def test_all_top_bin_path_is_annuity_at_top_rate(bins):
    path = np.full(25, bins.edges[-1] + 1.0)
    assert npv_path(RAMP, path, SPEC, bins) == pytest.approx(annuity(0.07, 0.01, 25), abs=1e-12)


def test_path_length_checked(bins):
    with pytest.raises(DomainError):
        npv_path(RAMP, np.zeros(10), SPEC, bins)


@given(st.lists(st.floats(0, 120), min_size=25, max_size=25), st.lists(st.floats(0, 30), min_size=25, max_size=25))
def test_pathwise_dominance(base, bump):
    bins = OutcomeBins(tuple(np.linspace(5, 90, 14)))
    lo = np.array(base)
    hi = lo + np.array(bump)
    assert npv_path(RAMP, hi, SPEC, bins) >= npv_path(RAMP, lo, SPEC, bins)


def test_degenerate_sampler_single_path(sample_table, bins):
    spec = CCBSpec(sampler=YearlySampler(weights={"int high": 1.0}))
    path = sample_table.matrix("northeast_avg", ["int high"], spec.years)[:, 0]
    est = expected_npv(RAMP, sample_table, spec, bins, n_sims=50)
    assert est.mean == pytest.approx(npv_path(RAMP, path, spec, bins), abs=1e-14)
    assert est.se == pytest.approx(0.0, abs=1e-14)


def test_expected_npv_reports_se(sample_table, bins):
    est = expected_npv(RAMP, sample_table, SPEC, bins)
    assert est.n == 2000 and est.se > 0


def test_cumulative_returns_end_at_npv(sample_table, bins):
    paths = simulate_climate_paths(sample_table, SPEC, 10, seed=2)
    cum = cumulative_returns(paths, bins, RAMP, SPEC)
    np.testing.assert_allclose(cum[:, -1], npv_paths(paths, bins, RAMP, SPEC), atol=1e-12)
    assert np.all(np.diff(cum, axis=1) > 0)


@given(st.lists(st.floats(0, 10), min_size=16, max_size=16))
def test_weight_map_monotone_and_bounded(w):
    r = np.array(schedule_from_weights(np.array(w), SPEC).rates)
    assert r.size == 15
    assert np.all(np.diff(r) >= 0)
    assert np.all((r >= 0.01) & (r <= 0.07))


def test_table2_structuring(solved, sample_table, bins):
    schedule, report = solved
    schedule.check(SPEC)
    r = np.array(schedule.rates)
    assert len(r) == 15
    assert np.all(np.diff(r) >= 0)
    assert r[0] < 0.02 and r[-1] > 0.06
    assert report.converged and report.abs_error <= SPEC.tolerance
    fresh = expected_npv(schedule, sample_table, SPEC, bins, seed=12345, stream=CLIMATE_EVAL)
    assert abs(fresh.mean - 1.6607) <= 0.0017


def test_flat_target_is_feasible(sample_table):
    spec = CCBSpec(min_rate=0.03, max_rate=0.05, granularity=4, n_sims=300, n_pool_samples=2000)
    bins, _ = build_bins(sample_table, spec)
    schedule, report = optimize_schedule(spec, bins, sample_table)
    schedule.check(spec)
    assert report.abs_error <= spec.tolerance


def test_infeasible_max_rate(sample_table):
    spec = CCBSpec(max_rate=0.03, n_sims=200, n_pool_samples=2000)
    bins, _ = build_bins(sample_table, spec)
    with pytest.raises(StructuringError, match=r"achievable range \[\d"):
        optimize_schedule(spec, bins, sample_table)


def test_two_bin_schedule(sample_table):
    spec = CCBSpec(granularity=2, n_sims=500, n_pool_samples=4000)
    bins, _ = build_bins(sample_table, spec)
    schedule, report = optimize_schedule(spec, bins, sample_table)
    assert len(schedule) == 2
    schedule.check(spec)
    assert report.converged


def test_lambda_zero_collapses_to_traditional(sample_table, bins):
    spec = CCBSpec(blend_lambda=0.0)
    paths = simulate_climate_paths(sample_table, spec, 500, seed=4)
    totals = npv_paths(paths, bins, RAMP, spec)
    assert np.all(totals == spec.target_npv)


def test_bins_mismatch_rejected(sample_table, bins):
    with pytest.raises(DomainError):
        optimize_schedule(CCBSpec(granularity=5), bins, sample_table)


def test_climate_link_orders_returns(solved, sample_table, bins):
    from scipy import stats

    schedule, _ = solved
    paths = simulate_climate_paths(sample_table, SPEC, 2000, seed=0)
    rho = stats.spearmanr(paths.mean(axis=1), npv_paths(paths, bins, schedule, SPEC)).statistic
    assert rho > 0.5
    assert math.isfinite(rho)
