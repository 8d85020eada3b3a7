from datetime import date

import numpy as np
import pytest

from surgeplan.domain import LosDistribution
from surgeplan.forecast import MissingQuantile, QuantileForecast
from surgeplan.uncertainty import (UncertaintyBand, build_band_from_forecast,
                                   compute_envelope, greedy_envelope,
                                   robust_census_bound, sample_members,
                                   worst_case_envelope)


def band(nominal, lo, hi, gamma1=0.0, gamma2=None):
    return UncertaintyBand(nominal=tuple(map(float, nominal)),
                           lower_width=tuple(map(float, lo)),
                           upper_width=tuple(map(float, hi)),
                           gamma1=gamma1, gamma2=gamma2)


def make_forecast(values, levels=(0.05, 0.5, 0.95)):
    return QuantileForecast(hospital_id="H1", target="census", issue_date=date(2022, 1, 1),
                            horizon_days=len(values), quantile_levels=levels,
                            values=tuple(tuple(row) for row in values))


def test_band_from_forecast_widths():
    f = make_forecast([(7.0, 10.0, 14.0)])
    b = build_band_from_forecast(f, 0.9)
    assert b.nominal == (10.0,)
    assert b.lower_width == (3.0,)
    assert b.upper_width == (4.0,)


def test_band_clamps_crossed_quantiles():
    f = make_forecast([(7.0, 10.0, 9.0)])
    b = build_band_from_forecast(f, 0.9)
    assert b.upper_width == (0.0,)


def test_band_missing_quantile():
    f = make_forecast([(7.0, 10.0, 14.0)], levels=(0.25, 0.5, 0.75))
    with pytest.raises(MissingQuantile):
        build_band_from_forecast(f, 0.9)


def test_envelope_budget_spent_per_coordinate():
    # each coordinate alone can absorb the entire budget of 2
    b = band([10, 10], [2, 2], [2, 2], gamma1=0.1)
    np.testing.assert_allclose(worst_case_envelope(b, "max"), [12, 12], atol=1e-7)
    np.testing.assert_allclose(worst_case_envelope(b, "min"), [8, 8], atol=1e-7)


def test_zero_budget_envelope_is_nominal():
    b = band([4, 7, 2], [3, 3, 3], [3, 3, 3], gamma1=0.0)
    np.testing.assert_allclose(worst_case_envelope(b, "max"), [4, 7, 2], atol=1e-9)
    np.testing.assert_allclose(worst_case_envelope(b, "min"), [4, 7, 2], atol=1e-9)


def test_step_ratio_couples_adjacent_days():
    # wide box on day 1 but step-ratio 1 ties it to day 0's reachable values
    b = band([10, 12], [1, 5], [1, 5], gamma1=10.0, gamma2=1.0)
    upper = worst_case_envelope(b, "max")
    np.testing.assert_allclose(upper, [11, 13], atol=1e-7)


def test_step_ratio_symmetric_widths():
    # both coordinates reach their box tops and the step between them is
    # exactly the allowed ratio times the nominal step
    b = band([10, 12], [5, 5], [5, 5], gamma1=10.0, gamma2=1.0)
    upper = worst_case_envelope(b, "max")
    np.testing.assert_allclose(upper, [15, 17], atol=1e-7)
    assert abs(upper[1] - upper[0]) <= 1.0 * abs(12 - 10) + 1e-9


def test_flat_step_is_exempt_from_ratio_budget():
    b = band([10, 10], [2, 2], [2, 2], gamma1=10.0, gamma2=1.0)
    np.testing.assert_allclose(worst_case_envelope(b, "max"), [12, 12], atol=1e-7)


def test_greedy_cross_check_without_step_budget():
    rng = np.random.default_rng(4)
    for _ in range(25):
        T = int(rng.integers(2, 9))
        nominal = rng.uniform(0, 20, T)
        lo = rng.uniform(0, 5, T)
        hi = rng.uniform(0, 5, T)
        b = band(nominal, lo, hi, gamma1=float(rng.uniform(0, 0.5)))
        np.testing.assert_allclose(worst_case_envelope(b, "max"), greedy_envelope(b, "max"), atol=1e-6)
        np.testing.assert_allclose(
            np.maximum(worst_case_envelope(b, "min"), 0.0), greedy_envelope(b, "min"), atol=1e-6)


def test_envelope_contains_sampled_members():
    rng = np.random.default_rng(8)
    for _ in range(10):
        T = int(rng.integers(3, 10))
        nominal = rng.uniform(1, 15, T)
        b = band(nominal, rng.uniform(0, 4, T), rng.uniform(0, 4, T),
                 gamma1=float(rng.uniform(0.01, 0.4)),
                 gamma2=float(rng.uniform(1.0, 3.0)) if rng.random() < 0.5 else None)
        env = compute_envelope(b)
        samples = sample_members(b, 200, rng)
        assert np.all(samples <= np.asarray(env.upper) + 1e-7)
        assert np.all(samples >= np.asarray(env.lower) - 1e-7)


def test_nominal_is_always_inside_envelope():
    rng = np.random.default_rng(12)
    for _ in range(10):
        T = int(rng.integers(2, 8))
        nominal = rng.uniform(0, 10, T)
        b = band(nominal, rng.uniform(0, 3, T), rng.uniform(0, 3, T),
                 gamma1=float(rng.uniform(0, 0.3)),
                 gamma2=float(rng.uniform(1.0, 2.0)))
        env = compute_envelope(b)
        assert np.all(nominal <= np.asarray(env.upper) + 1e-9)
        assert np.all(np.asarray(env.lower) <= nominal + 1e-9)


def test_envelope_monotone_in_budgets():
    rng = np.random.default_rng(31)
    nominal = rng.uniform(2, 12, 6)
    lo = rng.uniform(0, 3, 6)
    hi = rng.uniform(0, 3, 6)
    prev_upper = None
    for g1 in (0.0, 0.05, 0.1, 0.3, 1.0):
        env = worst_case_envelope(band(nominal, lo, hi, gamma1=g1, gamma2=2.0), "max")
        if prev_upper is not None:
            assert np.all(env >= prev_upper - 1e-9)
        prev_upper = env
    prev_upper = None
    for g2 in (1.0, 1.5, 2.0, 4.0):
        env = worst_case_envelope(band(nominal, lo, hi, gamma1=0.5, gamma2=g2), "max")
        if prev_upper is not None:
            assert np.all(env >= prev_upper - 1e-9)
        prev_upper = env


def test_lower_envelope_clamped_at_zero():
    b = band([1, 1], [5, 5], [1, 1], gamma1=5.0)
    env = compute_envelope(b)
    assert min(env.lower) >= 0.0


def test_robust_census_bound_collapses_to_deterministic():
    from surgeplan.dynamics import census_from_flows

    los = LosDistribution(pmf=(0.0, 0.5, 0.5))
    arrivals = (3.0, 1.0, 4.0, 2.0)
    b = band(arrivals, [0, 0, 0, 0], [0, 0, 0, 0], gamma1=1.0)
    bound = robust_census_bound(b, los)
    np.testing.assert_allclose(bound.worst_case_census(),
                               census_from_flows(arrivals, los), atol=1e-9)


def test_robust_census_bound_one_day_stay():
    los = LosDistribution(pmf=(0.0, 1.0))
    b = band([10, 5], [0, 0], [0, 0], gamma1=0.0)
    bound = robust_census_bound(b, los)
    np.testing.assert_allclose(bound.worst_case_census(), [10, 5], atol=1e-9)


def test_robust_census_bound_dominates_sampled_paths():
    rng = np.random.default_rng(77)
    los = LosDistribution(pmf=(0.1, 0.4, 0.3, 0.2))
    from surgeplan.dynamics import census_from_flows

    for _ in range(5):
        T = 8
        nominal = rng.uniform(1, 6, T)
        b = band(nominal, rng.uniform(0, 2, T), rng.uniform(0, 2, T),
                 gamma1=float(rng.uniform(0.05, 0.3)), gamma2=2.0)
        bound = robust_census_bound(b, los)
        worst = bound.worst_case_census()
        for arrivals in sample_members(b, 300, rng):
            census = census_from_flows(arrivals, los)
            assert np.all(census <= worst + 1e-7)
