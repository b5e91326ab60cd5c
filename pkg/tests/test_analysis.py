"""Fit pipeline, suppression-factor estimation, thresholds, and qubit
extrapolation, with generate-then-fit round trips as oracles."""

import numpy as np
import pytest

from tdqec.analysis import (
    FitError,
    extrapolate_qubits,
    fit_infidelity,
    lambda_estimate,
    logical_error_rate,
    threshold_estimate,
)
from tdqec.engines.records import TimeSeries


def model_series(eps, tau, t_max=30.0, points=120, noise=0.0, rng=None):
    t = np.geomspace(t_max * 1e-4, t_max, points)
    values = 0.5 * (1.0 - np.exp(-eps * np.maximum(t - tau, 0.0)))
    if noise:
        values = values * (1.0 + noise * rng.standard_normal(points))
    return TimeSeries(t, np.clip(values, 0.0, 1.0), None)


class TestFitInfidelity:
    def test_noiseless_round_trip(self):
        fit = fit_infidelity(model_series(0.1, 2.0), ell=2)
        assert fit.epsilon == pytest.approx(0.1, rel=1e-6)
        assert fit.tau == pytest.approx(2.0, rel=1e-6)
        assert fit.p_l == pytest.approx(0.2, rel=1e-6)

    def test_noisy_round_trip_within_five_percent(self):
        rng = np.random.default_rng(123)
        fit = fit_infidelity(model_series(0.2, 1.5, noise=0.01, rng=rng), ell=2)
        assert fit.epsilon == pytest.approx(0.2, rel=0.05)
        assert fit.tau == pytest.approx(1.5, rel=0.05)

    def test_round_trip_across_parameter_box(self):
        # recovery to 1e-6 anywhere in (eps, tau) in [1e-3, 10] x [0.1, 10]
        rng = np.random.default_rng(7)
        for _ in range(25):
            eps = 10.0 ** rng.uniform(-3, 1)
            tau = 10.0 ** rng.uniform(-1, 1)
            series = model_series(eps, tau, t_max=max(10 * tau, 5.0 / eps))
            fit = fit_infidelity(series, ell=3)
            assert fit.epsilon == pytest.approx(eps, rel=1e-6)
            assert fit.tau == pytest.approx(tau, rel=1e-6)

    def test_flat_series_is_degenerate(self):
        t = np.linspace(0.1, 10.0, 40)
        with pytest.raises(FitError, match="degenerate"):
            fit_infidelity(TimeSeries(t, np.full_like(t, 0.5)), ell=1)

    def test_too_few_points_rejected(self):
        t = np.linspace(0.1, 10.0, 10)
        with pytest.raises(FitError, match="points"):
            fit_infidelity(TimeSeries(t, np.linspace(0, 0.4, 10)), ell=1)

    def test_covariance_shape_and_positivity(self):
        rng = np.random.default_rng(5)
        fit = fit_infidelity(model_series(0.3, 1.0, noise=0.02, rng=rng), ell=2)
        assert fit.covariance.shape == (2, 2)
        assert fit.covariance[0, 0] >= 0 and fit.covariance[1, 1] >= 0


class TestLogicalErrorRate:
    def test_product(self):
        fit = fit_infidelity(model_series(0.1, 2.0), ell=2)
        assert logical_error_rate(fit) == pytest.approx(0.2, rel=1e-6)

    def test_vanishes_with_epsilon(self):
        fit = fit_infidelity(model_series(1e-3, 0.5, t_max=2000.0), ell=1)
        assert logical_error_rate(fit) == pytest.approx(5e-4, rel=1e-4)

    def test_invariant_under_time_rescaling(self):
        series = model_series(0.25, 3.0)
        scaled = TimeSeries(series.times * 7.0, series.values, None)
        a = fit_infidelity(series, ell=2)
        b = fit_infidelity(scaled, ell=2)
        assert a.p_l == pytest.approx(b.p_l, rel=1e-9)


def power_law_table(gamma_e_star, sizes, gammas, prefactor=1.0):
    return {
        (n, g): prefactor * (g / gamma_e_star) ** ((n + 1) // 2)
        for n in sizes
        for g in gammas
    }


class TestLambdaEstimate:
    def test_exact_power_law_gives_inverse_ratio_for_every_pair(self):
        gammas = list(np.geomspace(0.01, 0.2, 6))
        table = power_law_table(0.5, [5, 7, 9, 11], gammas)
        est = lambda_estimate(table)
        for g, ratios in est.pair_ratios.items():
            for _, _, r in ratios:
                assert r == pytest.approx(0.5 / g, rel=1e-9)
        assert est.gamma_e_star == pytest.approx(0.5, rel=1e-6)

    def test_single_ratio_example(self):
        table = {(5, 0.1): 1e-3, (7, 0.1): 1e-4, (9, 0.1): 1e-5,
                 (5, 0.2): 1e-2, (7, 0.2): 1e-3, (9, 0.2): 1e-4}
        est = lambda_estimate(table, k_values=[1])
        for _, _, r in est.pair_ratios[0.1]:
            assert r == pytest.approx(10.0)

    def test_size_three_excluded(self):
        gammas = list(np.geomspace(0.01, 0.1, 4))
        table = power_law_table(0.5, [3, 5, 7, 9], gammas)
        table.update({(3, g): 999.0 for g in gammas})  # poisoned; must be ignored
        est = lambda_estimate(table)
        assert est.gamma_e_star == pytest.approx(0.5, rel=1e-6)

    def test_needs_three_sizes(self):
        with pytest.raises(ValueError, match="3 code sizes"):
            lambda_estimate({(5, 0.1): 1.0, (7, 0.1): 0.1})


class TestThresholdEstimate:
    def test_power_law_family_with_common_prefactor_collapses(self):
        gammas = list(np.geomspace(0.05, 1.0, 41))
        table = power_law_table(0.3, [5, 7, 9, 11], gammas)
        res = threshold_estimate(table)
        assert res.threshold == pytest.approx(0.3, rel=0.05)
        for _, _, g in res.crossings:
            assert g == pytest.approx(0.3, rel=0.05)

    def test_no_crossing_is_an_error(self):
        gammas = list(np.geomspace(0.01, 0.02, 5))
        table = power_law_table(0.5, [5, 7, 9], gammas)
        with pytest.raises(ValueError, match="no threshold crossing"):
            threshold_estimate(table)


class TestExtrapolateQubits:
    def test_published_trickle_constants(self):
        res = extrapolate_qubits(0.2, 0.7, 1e-2, 1e-15)
        assert res.ell_plus_one == pytest.approx(11.41, abs=0.01)
        assert res.n_real == pytest.approx(21.8, abs=0.1)
        assert res.n_rounded == 23

    def test_published_lookup_constants(self):
        res = extrapolate_qubits(0.04, 0.02, 1e-2, 1e-15)
        assert res.ell_plus_one == pytest.approx(22.1, abs=0.1)
        assert res.n_real == pytest.approx(43.2, abs=0.2)

    def test_shifted_exponent_convention(self):
        res = extrapolate_qubits(0.2, 0.7, 1e-2, 1e-15, convention="shifted")
        assert res.n_real == pytest.approx(19.8, abs=0.1)
        assert res.n_rounded == 21

    def test_no_suppression_guard(self):
        with pytest.raises(ValueError, match="no suppression"):
            extrapolate_qubits(0.05, 0.7, 0.1, 1e-15)

    def test_degenerate_target_guard(self):
        with pytest.raises(ValueError, match="degenerate target"):
            extrapolate_qubits(0.2, 0.7, 1e-2, 0.7)
