import math
import time

import numpy as np
import pytest
from scipy import stats

from platformtrials.glm import (
    DegenerateError,
    SeparationError,
    SingularDesignError,
    design_matrix,
    fit_linear,
    fit_logistic,
    norm_cdf,
    norm_quantile,
    t_cdf,
    t_quantile,
    wald_one_sided,
)


def two_group_design(n0, n1):
    # control is the reference level carried by the intercept
    treatment = np.array([0] * n0 + [1] * n1)
    period = np.ones(n0 + n1, dtype=int)
    return design_matrix(treatment, period, [1], [1])


class TestLogistic:
    def test_saturated_two_by_two_log_odds_ratio(self):
        # 10/20 events vs 15/20: log OR = log((15*10)/(5*10)) = log 3
        y = np.array([1] * 10 + [0] * 10 + [1] * 15 + [0] * 5, dtype=float)
        x, names = two_group_design(20, 20)
        fit = fit_logistic(x, y, names)
        assert fit.coef_named()["treatment_1"] == pytest.approx(math.log(3.0), abs=1e-6)
        p0 = 10 / 20
        assert fit.coef_named()["intercept"] == pytest.approx(
            math.log(p0 / (1 - p0)), abs=1e-6)

    def test_identical_groups_zero_effect(self):
        y = np.array(([1] * 8 + [0] * 12) * 2, dtype=float)
        x, names = two_group_design(20, 20)
        fit = fit_logistic(x, y, names)
        assert abs(fit.coef_named()["treatment_1"]) < 1e-8

    def test_oracle_standard_error(self):
        # 2x2 table log-OR variance: sum of reciprocal cell counts
        y = np.array([1] * 10 + [0] * 10 + [1] * 15 + [0] * 5, dtype=float)
        x, names = two_group_design(20, 20)
        fit = fit_logistic(x, y, names)
        oracle_se = math.sqrt(1 / 10 + 1 / 10 + 1 / 15 + 1 / 5)
        assert fit.se[fit.index_of("treatment_1")] == pytest.approx(oracle_se, rel=1e-6)

    def test_separation_detected(self):
        y = np.array([0.0] * 20 + [1.0] * 20)
        x, names = two_group_design(20, 20)
        with pytest.raises(SeparationError):
            fit_logistic(x, y, names)

    def test_deviance_trace_nonincreasing(self):
        rng = np.random.default_rng(14)
        treatment = rng.integers(0, 2, 200)
        period = np.repeat([1, 2], 100)
        y = rng.binomial(1, 0.3 + 0.2 * treatment).astype(float)
        x, names = design_matrix(treatment, period, [1], [1, 2])
        fit = fit_logistic(x, y, names)
        trace = fit.extras["deviance_trace"]
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))

    def test_singular_design_rejected(self):
        x = np.ones((30, 2))  # duplicated intercept column
        y = np.array([0.0, 1.0] * 15)
        with pytest.raises(SingularDesignError, match="singular design"):
            fit_logistic(x, y, ["intercept", "copy"])

    def test_null_coverage_sanity(self):
        rng = np.random.default_rng(99)
        hits = 0
        for _ in range(200):
            y = rng.binomial(1, 0.4, 80).astype(float)
            x, names = two_group_design(40, 40)
            fit = fit_logistic(x, y, names)
            i = fit.index_of("treatment_1")
            if abs(fit.coef[i]) <= 4 * fit.se[i]:
                hits += 1
        assert hits >= 190


class TestLinear:
    def test_matches_normal_equations_on_random_problems(self):
        rng = np.random.default_rng(7)
        start = time.perf_counter()
        for _ in range(20):
            n, p = 50, 4
            x = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
            beta = rng.normal(size=p)
            y = x @ beta + rng.normal(size=n)
            names = [f"c{i}" for i in range(p)]
            fit = fit_linear(x, y, names)
            # independent oracle via lstsq and textbook covariance
            coef_hat, *_ = np.linalg.lstsq(x, y, rcond=None)
            resid = y - x @ coef_hat
            s2 = resid @ resid / (n - p)
            cov = s2 * np.linalg.inv(x.T @ x)
            assert np.allclose(fit.coef, coef_hat, atol=1e-9)
            assert np.allclose(fit.cov, cov, atol=1e-9)
            assert fit.df_resid == n - p
        assert time.perf_counter() - start < 1.0

    def test_intercept_only(self):
        x = np.ones((3, 1))
        y = np.array([1.0, 2.0, 3.0])
        fit = fit_linear(x, y, ["intercept"])
        assert fit.coef[0] == pytest.approx(2.0, abs=1e-12)
        assert fit.extras["sigma2"] == pytest.approx(1.0, abs=1e-12)

    def test_two_group_difference_in_means(self):
        rng = np.random.default_rng(3)
        y0 = rng.normal(0.0, 1.0, 30)
        y1 = rng.normal(0.5, 1.0, 30)
        x, names = two_group_design(30, 30)
        fit = fit_linear(x, np.concatenate([y0, y1]), names)
        assert fit.coef_named()["treatment_1"] == pytest.approx(
            y1.mean() - y0.mean(), abs=1e-10)

    def test_residual_orthogonality(self):
        rng = np.random.default_rng(4)
        x = np.column_stack([np.ones(40), rng.normal(size=(40, 2))])
        y = rng.normal(size=40)
        fit = fit_linear(x, y, ["a", "b", "c"])
        resid = y - x @ fit.coef
        assert np.max(np.abs(x.T @ resid)) < 1e-8

    def test_underdetermined_rejected(self):
        x = np.ones((3, 3)) + np.eye(3)
        y = np.array([1.0, 2.0, 3.0])
        with pytest.raises(DegenerateError):
            fit_linear(x, y, ["a", "b", "c"])

    def test_collinear_rejected(self):
        x = np.column_stack([np.ones(20), np.arange(20.0), 2 * np.arange(20.0)])
        y = np.arange(20.0)
        with pytest.raises(SingularDesignError):
            fit_linear(x, y, ["a", "b", "c"])


class TestDesignMatrix:
    def test_reference_levels_omitted(self):
        treatment = np.array([0, 1, 2, 0, 1, 2])
        period = np.array([1, 1, 2, 2, 3, 3])
        x, names = design_matrix(treatment, period, [1, 2], [1, 2, 3])
        assert names == ["intercept", "treatment_1", "treatment_2",
                         "period_2", "period_3"]
        assert np.all(x[:, 0] == 1.0)
        assert np.array_equal(x[:, 1], (treatment == 1).astype(float))
        assert np.array_equal(x[:, 3], (period == 2).astype(float))

    def test_single_period_has_no_period_columns(self):
        treatment = np.array([0, 1, 0, 1])
        period = np.ones(4, dtype=int)
        x, names = design_matrix(treatment, period, [1], [1])
        assert names == ["intercept", "treatment_1"]


class TestWald:
    def test_textbook_normal_example(self):
        p, lo, hi = wald_one_sided(1.96, 1.0, 0.025)
        assert p == pytest.approx(0.0250, abs=1e-3)
        assert lo == pytest.approx(0.0002, abs=1e-3)
        assert hi == pytest.approx(3.9198, abs=1e-3)

    def test_zero_estimate_is_coin_flip(self):
        p, lo, hi = wald_one_sided(0.0, 1.0, 0.025)
        assert p == 0.5
        assert lo == -hi

    def test_t_distribution_widens_interval(self):
        _, lo_n, hi_n = wald_one_sided(1.0, 0.5, 0.025)
        _, lo_t, hi_t = wald_one_sided(1.0, 0.5, 0.025, df=5)
        assert lo_t < lo_n and hi_t > hi_n

    def test_interval_contains_estimate(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            est = rng.normal()
            se = rng.uniform(0.1, 2.0)
            _, lo, hi = wald_one_sided(est, se, 0.025, df=rng.integers(2, 50))
            assert lo < est < hi

    def test_degenerate_se_rejected(self):
        with pytest.raises(DegenerateError):
            wald_one_sided(1.0, 0.0, 0.025)
        with pytest.raises(DegenerateError):
            wald_one_sided(1.0, float("nan"), 0.025)

    def test_p_value_matches_survival_oracle(self):
        # one-sided H0 effect <= 0: p = P(Z >= est/se)
        for est, se in [(0.7, 0.3), (-0.4, 0.2), (2.1, 1.1)]:
            p, _, _ = wald_one_sided(est, se, 0.025)
            assert p == pytest.approx(stats.norm.sf(est / se), abs=1e-12)
            p_t, _, _ = wald_one_sided(est, se, 0.025, df=7)
            assert p_t == pytest.approx(stats.t.sf(est / se, 7), abs=1e-12)


class TestDistributionHelpers:
    def test_cdf_quantile_round_trip(self):
        for u in np.linspace(0.01, 0.99, 25):
            assert norm_cdf(norm_quantile(u)) == pytest.approx(u, abs=1e-12)
            assert t_cdf(t_quantile(u, 9), 9) == pytest.approx(u, abs=1e-12)

    def test_known_values(self):
        assert norm_cdf(0.0) == 0.5
        assert norm_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)
        assert t_quantile(0.975, 10) == pytest.approx(2.228139, abs=1e-6)
