import itertools

import numpy as np
import pytest
from scipy.integrate import quad

from skewinfo.errors import MaxIterations, NonFinite, ToleranceNotMet
from skewinfo.families import registry_families
from skewinfo.numerics import (QuadratureSpec, SeedSpec, Sym3, diff_delta,
                               integrate, make_rng, minimize, rank3,
                               sym3_eigvals)
from skewinfo.special import norm_cdf, norm_pdf

SPEC = QuadratureSpec()


class TestIntegrate:
    def test_normal_density_normalizes(self):
        np.testing.assert_allclose(integrate(norm_pdf, SPEC), 1.0, atol=1e-10)

    def test_normal_second_moment(self):
        np.testing.assert_allclose(
            integrate(lambda z: z * z * norm_pdf(z), SPEC), 1.0, atol=1e-10)

    def test_normal_fourth_moment(self):
        np.testing.assert_allclose(
            integrate(lambda z: z ** 4 * norm_pdf(z), SPEC), 3.0, atol=1e-9)

    def test_agrees_with_scipy_quad(self):
        g = lambda z: np.cos(z) * norm_pdf(z)
        expected = quad(g, -50, 50, epsabs=1e-12)[0]
        np.testing.assert_allclose(integrate(g, SPEC), expected, atol=1e-9)

    def test_odd_integrands_from_registry_cancel(self):
        for fam in registry_families():
            g = lambda z: fam.kernel.phi_f(z) * fam.kernel.f(z)
            assert abs(integrate(g, SPEC)) < SPEC.abs_tol * 10

    def test_nonfinite_raises(self):
        g = lambda z: np.where(np.abs(z) < 0.5, np.nan, np.exp(-np.abs(z)))
        with pytest.raises(NonFinite):
            integrate(g, SPEC)

    def test_tolerance_not_met(self):
        tiny = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-14, max_subdivisions=8)
        with pytest.raises(ToleranceNotMet):
            integrate(lambda z: np.cos(40 * z) ** 2 * norm_pdf(z), tiny)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            QuadratureSpec(abs_tol=-1.0)
        with pytest.raises(ValueError):
            QuadratureSpec(max_subdivisions=0)


class TestDiffDelta:
    def test_first_derivative_of_normal_cdf_skewing(self):
        got = diff_delta(lambda z, d: norm_cdf(d * z), 2.0, 1)
        np.testing.assert_allclose(got, 2.0 / np.sqrt(2 * np.pi), atol=1e-9)

    def test_second_derivative_vanishes(self):
        got = diff_delta(lambda z, d: norm_cdf(d * z), 1.3, 2)
        assert abs(got) < 1e-8

    def test_third_derivative_of_normal_cdf_skewing(self):
        got = diff_delta(lambda z, d: norm_cdf(d * z), 1.0, 3)
        np.testing.assert_allclose(got, -1.0 / np.sqrt(2 * np.pi), atol=1e-6)

    def test_second_derivative_vanishes_for_registry(self):
        grid = np.linspace(-6, 6, 41)
        for fam in registry_families():
            vals = diff_delta(fam.skewing.pi, grid, 2)
            assert np.max(np.abs(vals)) < 1e-6, fam.name

    def test_vectorized(self):
        z = np.array([0.5, 1.0, 2.0])
        got = diff_delta(lambda zz, d: norm_cdf(d * zz), z, 1)
        np.testing.assert_allclose(got, z / np.sqrt(2 * np.pi), atol=1e-9)

    def test_bad_order(self):
        with pytest.raises(ValueError):
            diff_delta(lambda z, d: norm_cdf(d * z), 1.0, 4)


class TestRank3:
    def test_identity(self):
        report = rank3(np.eye(3))
        assert report.numeric_rank == 3
        np.testing.assert_allclose(report.eigenvalues, (1.0, 1.0, 1.0))

    def test_skew_normal_block_is_rank_2(self):
        c = np.sqrt(2 / np.pi)
        m = Sym3(1.0, 0.0, c, 2.0, 0.0, 2 / np.pi)
        assert rank3(m).numeric_rank == 2

    def test_zero_matrix(self):
        assert rank3(np.zeros((3, 3))).numeric_rank == 0

    def test_eigvals_match_numpy(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            m = rng.normal(size=(3, 3))
            m = m + m.T
            got = sym3_eigvals(m)
            np.testing.assert_allclose(got, np.linalg.eigvalsh(m),
                                       rtol=1e-10, atol=1e-11)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(7)
        m = rng.normal(size=(3, 3))
        m = m + m.T
        base = rank3(m)
        for perm in itertools.permutations(range(3)):
            p = np.eye(3)[list(perm)]
            conj = rank3(p @ m @ p.T)
            assert conj.numeric_rank == base.numeric_rank
            np.testing.assert_allclose(conj.eigenvalues, base.eigenvalues,
                                       atol=1e-10)


class TestMinimize:
    def test_quadratic(self):
        x, f = minimize(lambda v: (v[0] - 2) ** 2, np.array([0.0]))
        np.testing.assert_allclose(x, [2.0], atol=1e-6)

    def test_rosenbrock(self):
        ros = lambda v: (1 - v[0]) ** 2 + 100 * (v[1] - v[0] ** 2) ** 2
        x, f = minimize(ros, np.array([0.0, 0.0]), max_iter=3000)
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-3)

    def test_bounds_respected(self):
        x, _ = minimize(lambda v: (v[0] + 1) ** 2, np.array([0.5]),
                        bounds=[(0.01, None)])
        assert x[0] >= 0.01
        np.testing.assert_allclose(x[0], 0.01, atol=1e-8)

    def test_deterministic_given_seed(self):
        obj = lambda v: np.sin(3 * v[0]) + (v[0] - 1) ** 2
        a = minimize(obj, np.array([0.0]), restarts=4, seed=SeedSpec(5))
        b = minimize(obj, np.array([0.0]), restarts=4, seed=SeedSpec(5))
        assert a[0][0] == b[0][0] and a[1] == b[1]

    def test_max_iterations(self):
        with pytest.raises(MaxIterations):
            minimize(lambda v: float(np.sum(v * v)), np.zeros(2), max_iter=1)


class TestSeedStreams:
    def test_bit_identical(self):
        r1 = make_rng(SeedSpec(42, 3)).normal(size=16)
        r2 = make_rng(SeedSpec(42, 3)).normal(size=16)
        assert np.array_equal(r1, r2)

    def test_streams_differ(self):
        r1 = make_rng(SeedSpec(42, 0)).normal(size=16)
        r2 = make_rng(SeedSpec(42, 1)).normal(size=16)
        assert not np.array_equal(r1, r2)


def test_sym3_requires_finite_entries():
    with pytest.raises(ValueError):
        Sym3(np.inf, 0, 0, 1, 0, 1)
