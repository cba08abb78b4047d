import json

import numpy as np
import pytest
from scipy import stats

from skewinfo import special
from skewinfo.errors import DomainError
from skewinfo.families import (DEFAULT_GRID, SkewingFunction, ThetaOriginal,
                               density, laplace_cdf_skewing, load_family_spec,
                               log_density, make_family, quadrature_for,
                               registry_families, sample, validate_kernel,
                               validate_skewing)
from skewinfo.numerics import SeedSpec, diff_delta, integrate

SN = make_family("skew-normal")


class TestValidation:
    def test_normal_cdf_skewing_passes(self):
        assert validate_skewing(SN.skewing).passed

    def test_shifted_argument_fails_antisymmetry(self):
        bad = SkewingFunction(
            name="bad",
            pi=lambda z, d: special.norm_cdf(d * np.asarray(z, float) + d * d),
            log_pi=lambda z, d: special.norm_logcdf(d * np.asarray(z, float) + d * d),
            psi=lambda z: np.asarray(z, float) / np.sqrt(2 * np.pi),
            psidot=lambda z: np.full_like(np.asarray(z, float),
                                          1 / np.sqrt(2 * np.pi)),
            upsilon=None)
        report = validate_skewing(bad)
        assert not report.passed
        violations = dict(report.violations)
        assert violations["antisymmetry"] > 1e-6

    def test_sin_skewing_passes(self):
        assert validate_skewing(make_family("normal-sin").skewing).passed

    def test_all_registry_components_pass(self):
        for fam in registry_families():
            assert validate_skewing(fam.skewing).passed, fam.name
            assert validate_kernel(fam.kernel).passed, fam.name

    def test_laplace_skewing_valid_but_no_third_derivative(self):
        skewing = laplace_cdf_skewing()
        assert validate_skewing(skewing).passed
        assert skewing.upsilon is None


class TestDensity:
    def test_value_at_center_is_kernel_half(self):
        for d in (-1.0, 0.0, 2.5):
            got = density(SN, ThetaOriginal(0.0, 1.0, d), 0.0)
            np.testing.assert_allclose(got, 0.3989423, atol=1e-7)

    def test_skew_normal_at_one(self):
        got = density(SN, ThetaOriginal(0.0, 1.0, 1.0), 1.0)
        np.testing.assert_allclose(got, 2 * 0.2419707 * 0.8413447, atol=1e-6)

    def test_delta_zero_reduces_to_kernel(self):
        for fam in registry_families():
            theta = ThetaOriginal(0.7, 2.0, 0.0)
            x = np.linspace(-4, 6, 11)
            got = density(fam, theta, x)
            want = fam.kernel.f((x - 0.7) / 2.0) / 2.0
            np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_log_density_consistency(self):
        theta = ThetaOriginal(-0.3, 1.7, 0.9)
        x = np.linspace(-6, 6, 25)
        for fam in registry_families():
            np.testing.assert_allclose(np.exp(log_density(fam, theta, x)),
                                       density(fam, theta, x), rtol=1e-10)

    def test_log_density_stable_in_far_tail(self):
        val = log_density(SN, ThetaOriginal(0.0, 1.0, 3.0), -20.0)
        assert np.isfinite(val) and val < -200

    def test_integrates_to_one(self):
        rng = np.random.default_rng(8)
        for fam in registry_families():
            spec = quadrature_for(fam)
            for _ in range(5):
                d = rng.uniform(-2, 2)
                total = integrate(
                    lambda z: 2.0 * fam.kernel.f(z) * fam.skewing.pi(z, d),
                    spec)
                assert abs(total - 1.0) < 1e-7, fam.name


class TestDerivatives:
    def test_psi_matches_finite_difference(self):
        z = np.linspace(-5, 5, 41)
        for fam in registry_families():
            fd = diff_delta(fam.skewing.pi, z, 1)
            np.testing.assert_allclose(fam.skewing.psi(z), fd, atol=1e-6,
                                       err_msg=fam.name)

    def test_psi_odd(self):
        z = np.linspace(-5, 5, 41)
        for fam in registry_families():
            np.testing.assert_allclose(fam.skewing.psi(z),
                                       -fam.skewing.psi(-z), atol=1e-12)

    def test_upsilon_matches_finite_difference(self):
        z = np.linspace(-4, 4, 17)
        for fam in registry_families():
            fd = diff_delta(fam.skewing.pi, z, 3, step=5e-3)
            got = fam.skewing.upsilon(z)
            np.testing.assert_allclose(got, fd, atol=2e-4, rtol=1e-5,
                                       err_msg=fam.name)


class TestSampling:
    def test_deterministic(self):
        theta = ThetaOriginal(0.0, 1.0, 0.7)
        a = sample(SN, theta, 1000, SeedSpec(3, 1))
        b = sample(SN, theta, 1000, SeedSpec(3, 1))
        assert np.array_equal(a, b)

    def test_streams_independent(self):
        theta = ThetaOriginal(0.0, 1.0, 0.7)
        a = sample(SN, theta, 1000, SeedSpec(3, 1))
        b = sample(SN, theta, 1000, SeedSpec(3, 2))
        assert not np.array_equal(a, b)

    def test_symmetric_at_delta_zero(self):
        x = sample(SN, ThetaOriginal(0.0, 1.0, 0.0), 10 ** 5, SeedSpec(11))
        assert abs(np.mean(x > 0) - 0.5) < 0.01

    def test_skew_normal_mean(self):
        x = sample(SN, ThetaOriginal(0.0, 1.0, 1.0), 10 ** 6, SeedSpec(7, 0))
        np.testing.assert_allclose(x.mean(), np.sqrt(2 / np.pi) / np.sqrt(2),
                                   atol=3e-3)

    @pytest.mark.slow
    def test_histogram_matches_density(self):
        """Equal-probability binning against the model cdf, chi-square test."""
        theta = ThetaOriginal(0.0, 1.0, 0.7)
        n, bins = 10 ** 6, 200
        for fam in registry_families():
            # The outermost bins are open-ended, so the quantile grid can
            # stop at |z| = 60 (leftover tail mass < 1e-7 even for t(5)).
            halfwidth = min(fam.kernel.tail_cutoff, 60.0)
            zgrid = np.linspace(-halfwidth, halfwidth, 24001)
            pdf = 2.0 * fam.kernel.f(zgrid) * fam.skewing.pi(zgrid, theta.delta)
            cdf = np.concatenate(
                [[0.0], np.cumsum((pdf[1:] + pdf[:-1]) / 2 * np.diff(zgrid))])
            cdf /= cdf[-1]
            keep = np.concatenate([[True], np.diff(cdf) > 0])
            probs = np.linspace(0, 1, bins + 1)[1:-1]
            edges = np.interp(probs, cdf[keep], zgrid[keep])
            x = sample(fam, theta, n, SeedSpec(99))
            counts = np.histogram(x, np.concatenate([[-np.inf], edges,
                                                     [np.inf]]))[0]
            expected = n / bins
            chi2 = float(np.sum((counts - expected) ** 2 / expected))
            p = stats.chi2.sf(chi2, bins - 1)
            assert p > 0.001, f"{fam.name}: chi2={chi2:.1f} p={p:.2e}"


class TestFamilySpecFiles:
    def test_builtin_spec(self, tmp_path):
        doc = {"name": "sn", "kernel": {"builtin": "normal"},
               "skewing": {"builtin": "normal-cdf"}}
        path = tmp_path / "fam.json"
        path.write_text(json.dumps(doc))
        fam, constants = load_family_spec(str(path))
        assert constants == {}
        np.testing.assert_allclose(
            density(fam, ThetaOriginal(0, 1, 1), 1.0),
            density(SN, ThetaOriginal(0, 1, 1), 1.0))

    def test_expression_spec(self):
        fam, _ = load_family_spec({
            "name": "expr-sn",
            "kernel": {"expr": "phi(z)", "score_expr": "z"},
            "skewing": {"expr": "Phi(delta*z)"},
        })
        assert fam.skewing.derivative_source == "finite-difference"
        np.testing.assert_allclose(fam.skewing.psi(np.array([2.0])),
                                   2 / np.sqrt(2 * np.pi), atol=1e-8)
        np.testing.assert_allclose(
            density(fam, ThetaOriginal(0, 1, 1), 1.0),
            density(SN, ThetaOriginal(0, 1, 1), 1.0), rtol=1e-12)

    def test_constants_override_passthrough(self):
        _, constants = load_family_spec({
            "name": "c", "kernel": {"builtin": "normal"},
            "skewing": {"builtin": "logistic-cdf"},
            "constants": {"a": 4.0, "alpha1": 0.0}})
        assert constants == {"a": 4.0, "alpha1": 0.0}

    def test_kernel_score_builtin_resolves_against_kernel(self):
        fam, _ = load_family_spec({
            "name": "lt", "kernel": {"builtin": "logistic"},
            "skewing": {"builtin": "kernel-score"}})
        ref = make_family("logistic-tanh")
        z = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(fam.skewing.pi(z, 0.8),
                                   ref.skewing.pi(z, 0.8), atol=1e-12)

    def test_missing_pieces_rejected(self):
        with pytest.raises(ValueError):
            load_family_spec({"name": "x", "kernel": {"builtin": "normal"}})
        with pytest.raises(KeyError):
            load_family_spec({"name": "x", "kernel": {"builtin": "normal"},
                              "skewing": {"builtin": "nope"}})

    def test_expr_kernel_must_be_positive(self):
        with pytest.raises(DomainError):
            load_family_spec({"name": "x",
                              "kernel": {"expr": "z", "score_expr": "z"},
                              "skewing": {"builtin": "normal-cdf"}})


def test_theta_invariants():
    with pytest.raises(ValueError):
        ThetaOriginal(0.0, -1.0, 0.0)


def test_exponential_power_kernel_sampler_matches_density():
    fam = make_family("skew-exponential-power")
    x = sample(fam, ThetaOriginal(0, 1, 0), 2 * 10 ** 5, SeedSpec(5))
    # delta = 0: draws follow the symmetric kernel; check second moment
    m2 = integrate(lambda z: z * z * fam.kernel.f(z), quadrature_for(fam))
    np.testing.assert_allclose(np.mean(x ** 2), m2, rtol=0.02)


def test_default_grid_shape():
    assert DEFAULT_GRID[0] == -8.0 and DEFAULT_GRID[-1] == 8.0
    assert len(DEFAULT_GRID) == 201
