import numpy as np
import pytest

from skewinfo.errors import OrderMismatch
from skewinfo.families import ThetaOriginal, make_family, sample
from skewinfo.inference import (chi2_critical_value, fit_mle, lm_test_double,
                                lm_test_simple, rate_experiment,
                                symmetric_mle)
from skewinfo.numerics import SeedSpec
from skewinfo.special import chi2_sf_1dof

SN = make_family("skew-normal")
LT = make_family("logistic-tanh")
SNL = make_family("skew-normal-logistic")


class TestSymmetricMLE:
    def test_normal_kernel_closed_form(self):
        x = sample(SN, ThetaOriginal(2.0, 3.0, 0.0), 4000, SeedSpec(1))
        mu, sigma = symmetric_mle(x, SN.kernel)
        np.testing.assert_allclose(mu, x.mean(), rtol=1e-14)
        np.testing.assert_allclose(sigma, np.sqrt(np.mean((x - x.mean()) ** 2)),
                                   rtol=1e-14)

    def test_logistic_kernel_stationarity(self):
        x = sample(LT, ThetaOriginal(0.5, 2.0, 0.0), 500, SeedSpec(2))
        mu, sigma = symmetric_mle(x, LT.kernel)
        z = (x - mu) / sigma
        score = LT.kernel.phi_f(z)
        assert abs(np.sum(score)) < 1e-8 * len(x)
        assert abs(np.sum(z * score - 1.0)) < 1e-8 * len(x)

    def test_equivariance(self):
        x = sample(LT, ThetaOriginal(0, 1, 0), 300, SeedSpec(3))
        mu, sigma = symmetric_mle(x, LT.kernel)
        mu2, sigma2 = symmetric_mle(5.0 + 3.0 * x, LT.kernel)
        np.testing.assert_allclose(mu2, 5.0 + 3.0 * mu, atol=1e-9)
        np.testing.assert_allclose(sigma2, 3.0 * sigma, atol=1e-9)


class TestLMTests:
    def test_chi2_critical_value(self):
        np.testing.assert_allclose(chi2_critical_value(0.05),
                                   3.841458820694124, atol=1e-9)
        np.testing.assert_allclose(chi2_sf_1dof(3.841458820694124), 0.05,
                                   atol=1e-12)

    def test_double_zero_on_antisymmetric_data(self):
        grid = np.linspace(0.1, 3.0, 25)
        data = np.concatenate([grid, -grid])
        res = lm_test_double(data, SN, nuisance=(0.0, 1.0))
        assert res.statistic == pytest.approx(0.0, abs=1e-25)
        assert res.p_value == pytest.approx(1.0, abs=1e-12)

    def test_simple_mirror_invariance(self):
        """Parametrization-1 scores are even, so mirrored data give the
        same statistic; antisymmetric configurations therefore carry only
        the even-score contribution."""
        rng = np.random.default_rng(6)
        data = rng.normal(size=40)
        a = lm_test_simple(data, LT, nuisance=(0.0, 1.0))
        b = lm_test_simple(-data, LT, nuisance=(0.0, 1.0))
        np.testing.assert_allclose(a.statistic, b.statistic, rtol=1e-12)

    def test_statistics_nonnegative(self):
        for seed in range(5):
            x = sample(LT, ThetaOriginal(0, 1, 0), 120, SeedSpec(40 + seed))
            assert lm_test_simple(x, LT).statistic >= 0
            y = sample(SN, ThetaOriginal(0, 1, 0), 120, SeedSpec(50 + seed))
            assert lm_test_double(y, SN).statistic >= 0

    def test_affine_invariance_with_estimated_nuisance(self):
        x = sample(LT, ThetaOriginal(0, 1, 0), 200, SeedSpec(11))
        base = lm_test_simple(x, LT).statistic
        moved = lm_test_simple(4.0 + 2.5 * x, LT).statistic
        assert abs(base - moved) < 1e-8
        y = sample(SN, ThetaOriginal(0, 1, 0), 200, SeedSpec(12))
        base_d = lm_test_double(y, SN).statistic
        moved_d = lm_test_double(-1.0 + 0.5 * y, SN).statistic
        assert abs(base_d - moved_d) < 1e-8

    def test_order_mismatch(self):
        with pytest.raises(OrderMismatch):
            lm_test_simple(np.linspace(-2, 2, 50), SN)
        with pytest.raises(OrderMismatch):
            lm_test_double(np.linspace(-2, 2, 50), LT)
        with pytest.raises(OrderMismatch):
            lm_test_double(np.linspace(-2, 2, 50), SNL)

    def test_small_sample_rejected(self):
        with pytest.raises(ValueError):
            lm_test_simple(np.array([1.0, -1.0]), LT)

    def test_double_power_grows_with_skewness(self):
        """Noncentrality at (delta, n) is about n (c3 gamma1(delta))^2 / V:
        roughly 0.55 at delta 0.8 and 4.4 at delta 2.0 for n = 500."""
        def rejection_rate(delta, reps=60):
            hits = 0
            for rep in range(reps):
                x = sample(SN, ThetaOriginal(0, 1, delta), 500,
                           SeedSpec(900, rep))
                hits += lm_test_double(x, SN).p_value < 0.05
            return hits / reps

        weak, strong = rejection_rate(0.8), rejection_rate(2.0)
        assert weak > 0.15
        assert strong > 0.5
        assert strong > weak

    @pytest.mark.parametrize("variant,fam", [("simple", LT), ("double", SN)])
    def test_size_near_nominal_quick(self, variant, fam):
        """Coarse size check; the acceptance suite runs the full study."""
        test = lm_test_simple if variant == "simple" else lm_test_double
        n, reps, crit = 200, 400, chi2_critical_value(0.05)
        rejections = 0
        for rep in range(reps):
            x = sample(fam, ThetaOriginal(0.0, 1.0, 0.0), n,
                       SeedSpec(777, rep))
            rejections += test(x, fam).statistic > crit
        rate = rejections / reps
        assert 0.02 <= rate <= 0.09, f"{variant}: {rate}"


class TestFitMLE:
    def test_gaussian_closed_form_when_delta_pinned(self):
        x = sample(SN, ThetaOriginal(1.5, 2.0, 0.0), 5000, SeedSpec(21))
        fit = fit_mle(x, SN, bounds=((None, None), (1e-3, None), (0.0, 0.0)),
                      restarts=1)
        np.testing.assert_allclose(fit.theta_hat.mu, x.mean(), atol=1e-6)
        np.testing.assert_allclose(fit.theta_hat.sigma,
                                   np.sqrt(np.mean((x - x.mean()) ** 2)),
                                   atol=1e-6)
        assert fit.theta_hat.delta == 0.0 and fit.converged

    def test_recovers_skewness_away_from_symmetry(self):
        x = sample(SN, ThetaOriginal(0, 1, 0.9), 5000, SeedSpec(31))
        fit = fit_mle(x, SN, restarts=3)
        assert abs(fit.theta_hat.delta - 0.9) < 0.15
        assert fit.converged

    def test_loglik_dominates_truth(self):
        theta = ThetaOriginal(0, 1, 0.9)
        x = sample(SN, theta, 2000, SeedSpec(41))
        fit = fit_mle(x, SN)
        from skewinfo.families import log_density
        assert fit.loglik >= np.sum(log_density(SN, theta, x)) - 1e-6

    def test_finds_global_max_at_symmetry(self):
        """Regression against the flat-likelihood stall: matches a profile
        search over a fine delta grid."""
        x = sample(SN, ThetaOriginal(0, 1, 0.0), 2000, SeedSpec(1, 3))
        fit = fit_mle(x, SN)
        np.testing.assert_allclose(fit.theta_hat.delta, -0.70533, atol=5e-3)

    def test_reparam2_coordinates_same_maximum(self):
        x = sample(SN, ThetaOriginal(0, 1, 0.0), 1500, SeedSpec(8))
        f0 = fit_mle(x, SN, parametrization=0)
        f2 = fit_mle(x, SN, parametrization=2)
        np.testing.assert_allclose(f2.loglik, f0.loglik, atol=1e-4)
        np.testing.assert_allclose(abs(f2.theta_hat.delta),
                                   abs(f0.theta_hat.delta), atol=1e-2)

    def test_parametrization_exceeding_order(self):
        with pytest.raises(OrderMismatch):
            fit_mle(np.linspace(-2, 2, 100), SN, parametrization=3)


class TestRateExperiment:
    def test_validates_grid(self):
        with pytest.raises(ValueError):
            rate_experiment(SN, n_grid=(100, 200, 300), replications=5)
        with pytest.raises(ValueError):
            rate_experiment(SN, n_grid=(100, 200, 150, 300), replications=5)

    def test_deterministic(self):
        grid = (60, 120, 240, 480)
        a = rate_experiment(SN, grid, replications=12, seed=SeedSpec(5))
        b = rate_experiment(SN, grid, replications=12, seed=SeedSpec(5))
        assert a == b

    def test_regular_family_slope_near_half(self):
        res = rate_experiment(make_family("skew-t"), (200, 400, 800, 1600),
                              replications=60, seed=SeedSpec(17))
        assert -0.75 < res.slope < -0.3
        assert res.fit_failures == (0, 0, 0, 0)

    def test_serialization_has_no_nan(self):
        res = rate_experiment(SN, (60, 120, 240, 480), replications=8,
                              seed=SeedSpec(9))
        payload = res.to_json()
        assert "NaN" not in payload and "median_abs_delta" in payload
