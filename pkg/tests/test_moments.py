import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volreturns.distributions import DistributionSpec, Kind, sample
from volreturns.errors import InsufficientDataError, MomentDoesNotExistError, ValidationError
from volreturns.models import ModelParams, simulate_daily_log_prices
from volreturns.moments import (MomentFitResult, empirical_moment, fit_relaxation, linear_fit, moment_ratio,
                                moment_ratio_curve, pd_kind)
from volreturns.series import PriceSeries, ReturnSample, fit_growth_rate, realized_variance_curve, tau_returns

THETA = 1e-4


class TestEmpiricalMoment:
    def test_examples(self):
        assert empirical_moment(np.array([-1.0, 1.0]), 2) == 1.0
        assert empirical_moment(np.array([2.0]), 4) == 16.0

    def test_gaussian_kurtosis(self):
        z = np.random.default_rng(0).standard_normal(10**6)
        assert empirical_moment(z, 4) == pytest.approx(3.0, rel=0.01)

    def test_accepts_return_sample(self):
        assert empirical_moment(ReturnSample(1, np.array([3.0]), 0.0), 2) == 9.0

    @pytest.mark.parametrize("order", [0, 3, -2])
    def test_bad_order(self, order):
        with pytest.raises(ValidationError):
            empirical_moment(np.ones(3), order)

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            empirical_moment(np.array([]), 2)


class TestRatio:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_exact_heston_draws(self, n):
        rng = np.random.default_rng(0)
        for tau in (1, 20, 200):
            spec = DistributionSpec(Kind.HESTON_PD, 4.0, THETA, tau)
            data = ReturnSample(tau, sample(spec, 4 * 10**5, rng), 0.0)
            assert moment_ratio(data, spec, n) == pytest.approx(1.0, abs=0.02)

    def test_constructed_ratio_is_one(self):
        d, tau = 0.003, 7
        series = PriceSeries.from_log_prices(d * np.arange(50))
        curve = moment_ratio_curve(series, 0.0, "ga", (2.0, d * d * tau), 1, [tau])
        assert curve == [(tau, pytest.approx(1.0, abs=1e-14))]

    def test_mult_sixth_moment_refused(self):
        series = PriceSeries.from_log_prices(np.cumsum(np.random.default_rng(0).normal(0, 0.01, 300)))
        with pytest.raises(MomentDoesNotExistError):
            moment_ratio_curve(series, 0.0, "iga", (3e-4, THETA), 3, [1, 2])

    def test_heston_high_orders_supported(self):
        series = PriceSeries.from_log_prices(np.cumsum(np.random.default_rng(0).normal(0, 0.01, 300)))
        for n in (4, 5, 6):
            curve = moment_ratio_curve(series, 0.0, "heston", (3.0, THETA), n, [1, 5])
            assert all(math.isfinite(r) for _, r in curve)

    def test_family_names(self):
        assert pd_kind("heston") is pd_kind("ga") is Kind.HESTON_PD
        assert pd_kind(Kind.MULT_PD) is Kind.MULT_PD
        with pytest.raises(ValidationError):
            pd_kind("normal")

    def test_second_moment_ratio_with_rv_slope(self):
        params = ModelParams.from_alpha("heston", 0.05, THETA, 2.0)
        lp, _ = simulate_daily_log_prices(params, 50000, 0)
        series = PriceSeries.from_log_prices(lp)
        mu = fit_growth_rate(series)
        slope, _, _ = linear_fit(realized_variance_curve(series, mu, range(1, 101)))
        curve = moment_ratio_curve(series, mu, "ga", (2.0, slope), 1, [100, 150, 200])
        for tau, r in curve:
            # Monte-Carlo error of the ratio from independent (non-overlapping) windows
            z2 = tau_returns(series, tau, mu).values[::tau] ** 2
            se = 0.5 * z2.std() / z2.mean() / math.sqrt(len(z2))
            assert se < 0.05
            assert abs(r - 1.0) < 3 * se


class TestRelaxation:
    def test_noiseless(self):
        tau = np.arange(1, 101)
        fit = fit_relaxation(np.column_stack([tau, 1 + 0.5 * np.exp(-0.1 * tau)]), n=2)
        assert fit.a == pytest.approx(0.1, abs=1e-6) and fit.b == pytest.approx(0.5, abs=1e-6)
        assert fit.n == 2 and fit.residual_rms < 1e-10

    def test_negative_amplitude(self):
        tau = np.arange(1, 60)
        fit = fit_relaxation(list(zip(tau, 1 - 0.2 * np.exp(-0.05 * tau))))
        assert fit.a == pytest.approx(0.05, abs=1e-6) and fit.b == pytest.approx(-0.2, abs=1e-6)

    def test_noisy(self):
        tau = np.arange(1, 101)
        clean = 1 + 0.5 * np.exp(-0.1 * tau)
        noisy = clean * (1 + 0.01 * np.random.default_rng(0).standard_normal(100))
        fit = fit_relaxation(np.column_stack([tau, noisy]))
        assert fit.a == pytest.approx(0.1, rel=0.05) and fit.b == pytest.approx(0.5, rel=0.05)

    def test_residual_matches_curve(self):
        tau = np.arange(1, 40)
        ratio = 1 + 0.3 * np.exp(-0.07 * tau) + 0.01 * np.sin(tau)
        fit = fit_relaxation(np.column_stack([tau, ratio]))
        assert fit.residual_rms == pytest.approx(np.sqrt(np.mean((fit(tau) - ratio) ** 2)), rel=1e-12)
        assert fit.a > 0

    def test_flat_curve_is_degenerate(self):
        fit = fit_relaxation([(1, 1.0), (2, 1.0), (3, 1.0)])
        assert fit.degenerate and fit.b == 0.0 and math.isnan(fit.a)
        assert np.array_equal(fit([1, 2]), [1.0, 1.0])

    def test_too_few_points(self):
        with pytest.raises(ValidationError):
            fit_relaxation([(1, 1.2), (2, 1.1)])

    def test_result_callable(self):
        f = MomentFitResult(1, 0.1, 0.5, 0.0)
        assert f(0.0) == 1.5


class TestLinearFit:
    def test_identity_line(self):
        slope, intercept, r2 = linear_fit([(0, 0), (1, 1), (2, 2)])
        assert (slope, intercept, r2) == (1.0, 0.0, 1.0)

    def test_constant(self):
        slope, intercept, _ = linear_fit([(0, 5), (1, 5), (7, 5)])
        assert slope == 0.0 and intercept == 5.0

    def test_equal_x(self):
        with pytest.raises(ValidationError):
            linear_fit([(1, 0), (1, 2)])

    def test_matches_polyfit(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 10, 50)
        y = 3 * x + rng.normal(0, 1, 50)
        slope, intercept, r2 = linear_fit(np.column_stack([x, y]))
        assert np.allclose([slope, intercept], np.polyfit(x, y, 1), rtol=1e-12)
        assert r2 == pytest.approx(np.corrcoef(x, y)[0, 1] ** 2, rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(slope=st.floats(-1e3, 1e3), intercept=st.floats(-1e3, 1e3), n=st.integers(2, 40))
    def test_collinear_points_exact(self, slope, intercept, n):
        x = np.arange(n, dtype=float)
        s, c, _ = linear_fit(np.column_stack([x, slope * x + intercept]))
        scale = max(1.0, abs(slope), abs(intercept))
        assert abs(s - slope) <= 1e-12 * scale and abs(c - intercept) <= 1e-12 * scale * n
