import numpy as np
import pytest
from scipy import integrate, stats
from scipy.optimize import brentq

from msrisk import (
    MvtParams,
    condition_mvt,
    marginal_mvt,
    mixture_es,
    mixture_quantile,
    mvt_logpdf,
    t_cdf,
    t_es,
    t_quantile,
)
from msrisk.studentt import mixture_cdf, mixture_truncated_mean, univariate

from helpers import random_mvt, random_pd


class TestMvtParams:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            MvtParams([0.0, 0.0], [[1.0, 0.5], [0.2, 1.0]], 5.0)

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError, match="positive definite"):
            MvtParams([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], 5.0)

    def test_rejects_bad_nu(self):
        with pytest.raises(ValueError, match="nu"):
            MvtParams([0.0], [[1.0]], 0.0)


class TestMvtLogpdf:
    def test_gaussian_limit_at_zero(self):
        p = MvtParams([0.0], [[1.0]], 1e6)
        assert abs(mvt_logpdf(np.array([0.0]), p) - np.log(1.0 / np.sqrt(2 * np.pi))) < 1e-3

    def test_mode_at_location(self):
        rng = np.random.default_rng(5)
        p = random_mvt(rng, 3, nu=7.0)
        grid = p.mu + rng.normal(scale=2.0, size=(500, 3))
        assert mvt_logpdf(p.mu, p) > np.max(mvt_logpdf(grid, p))

    def test_integrates_to_one_2d(self):
        p = MvtParams([0.3, -0.2], [[1.0, 0.4], [0.4, 2.0]], 12.0)
        xs = np.linspace(-25, 25, 801)
        ys = np.linspace(-35, 35, 801)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        dens = np.exp(mvt_logpdf(np.stack([gx + 0.3, gy - 0.2], axis=-1), p))
        mass = np.trapezoid(np.trapezoid(dens, ys, axis=1), xs)
        assert abs(mass - 1.0) < 1e-3

    def test_permutation_invariance(self):
        rng = np.random.default_rng(6)
        p = random_mvt(rng, 4, nu=5.0)
        x = rng.normal(size=4)
        perm = rng.permutation(4)
        p2 = MvtParams(p.mu[perm], p.sigma[np.ix_(perm, perm)], p.nu)
        assert abs(mvt_logpdf(x, p) - mvt_logpdf(x[perm], p2)) < 1e-12

    def test_univariate_matches_scipy(self):
        p = MvtParams([0.5], [[4.0]], 6.0)
        x = np.array([-1.0, 0.5, 3.0])
        expected = stats.t.logpdf((x - 0.5) / 2.0, df=6.0) - np.log(2.0)
        np.testing.assert_allclose(mvt_logpdf(x[:, None], p), expected, atol=1e-12)

    def test_dimension_mismatch(self):
        p = MvtParams([0.0, 0.0], np.eye(2), 5.0)
        with pytest.raises(ValueError):
            mvt_logpdf(np.zeros(3), p)


class TestUnivariateTail:
    @pytest.mark.parametrize("nu", [1.0, 2.5, 10.0, 100.0])
    def test_cdf_quantile_round_trip(self, nu):
        taus = np.array([0.001, 0.05, 0.3, 0.5, 0.9, 0.999])
        np.testing.assert_allclose(t_cdf(t_quantile(taus, nu), nu), taus, atol=1e-10)

    def test_median_zero(self):
        assert abs(t_quantile(0.5, 7.3)) < 1e-15

    def test_cauchy_quartile(self):
        assert abs(t_quantile(0.75, 1.0) - 1.0) < 1e-10

    def test_quantile_vs_pdf_inversion(self):
        # Quadrature-inversion oracle at the frozen nu = 15.6839.
        nu = 15.6839

        def pdf(z):
            return np.exp(
                stats.t.logpdf(z, df=nu)
            )

        def cdf(z):
            val, _ = integrate.quad(pdf, -np.inf, z)
            return val

        oracle = brentq(lambda z: cdf(z) - 0.05, -10.0, 0.0, xtol=1e-12)
        assert abs(t_quantile(0.05, nu) - oracle) < 1e-8

    def test_quantile_domain(self):
        with pytest.raises(ValueError):
            t_quantile(0.0, 5.0)
        with pytest.raises(ValueError):
            t_quantile(0.5, -1.0)

    def test_es_gaussian_limit(self):
        assert abs(t_es(0.5, 1e6) - (-0.7979)) < 1e-3

    def test_es_below_quantile(self):
        for nu in (1.5, 4.0, 30.0):
            assert t_es(0.05, nu) < t_quantile(0.05, nu)

    def test_es_quadrature(self):
        nu = 5.0
        q = t_quantile(0.05, nu)
        integral, _ = integrate.quad(lambda z: z * stats.t.pdf(z, df=nu), -np.inf, q)
        assert abs(t_es(0.05, nu) - integral / 0.05) < 1e-6

    def test_es_requires_nu_gt_one(self):
        with pytest.raises(ValueError):
            t_es(0.05, 1.0)


class TestConditionMvt:
    def test_center_conditioning(self):
        rng = np.random.default_rng(7)
        p = random_mvt(rng, 3, nu=6.0)
        cond = condition_mvt(p, [2], p.mu[2:])
        keep = [0, 1]
        s = p.sigma
        schur = s[np.ix_(keep, keep)] - np.outer(s[keep, 2], s[2, keep]) / s[2, 2]
        np.testing.assert_allclose(cond.mu, p.mu[keep], atol=1e-12)
        np.testing.assert_allclose(cond.sigma, 6.0 / 7.0 * schur, atol=1e-12)
        assert cond.nu == 7.0

    def test_diagonal_sigma_location_unchanged(self):
        p = MvtParams([1.0, -2.0, 3.0], np.diag([1.0, 4.0, 9.0]), 5.0)
        cond = condition_mvt(p, [1, 2], [10.0, -10.0])
        np.testing.assert_allclose(cond.mu, [1.0], atol=1e-12)
        assert cond.nu == 7.0

    def test_grid_slice_density(self):
        # Conditional density equals the normalized slice of the joint.
        rng = np.random.default_rng(8)
        p = random_mvt(rng, 3, nu=5.0)
        values = p.mu[1:] + rng.normal(size=2)
        cond = condition_mvt(p, [1, 2], values)
        mu_c, s_c, nu_c = univariate(cond)
        grid = np.linspace(mu_c - 40 * s_c, mu_c + 40 * s_c, 40001)
        pts = np.column_stack([grid, np.full_like(grid, values[0]),
                               np.full_like(grid, values[1])])
        slice_dens = np.exp(mvt_logpdf(pts, p))
        slice_dens /= np.trapezoid(slice_dens, grid)
        cond_dens = stats.t.pdf((grid - mu_c) / s_c, df=nu_c) / s_c
        assert np.max(np.abs(slice_dens - cond_dens)) < 1e-4

    def test_iterated_conditioning(self):
        rng = np.random.default_rng(9)
        p = random_mvt(rng, 4, nu=8.0)
        va, vb = 0.7, -1.1
        joint = condition_mvt(p, [1, 3], [va, vb])
        step1 = condition_mvt(p, [1], [va])
        # After dropping coordinate 1, original coordinate 3 sits at index 2.
        step2 = condition_mvt(step1, [2], [vb])
        np.testing.assert_allclose(step2.mu, joint.mu, atol=1e-10)
        np.testing.assert_allclose(step2.sigma, joint.sigma, atol=1e-10)
        assert step2.nu == joint.nu

    def test_bad_cond_sets(self):
        p = MvtParams([0.0, 0.0], np.eye(2), 5.0)
        with pytest.raises(ValueError):
            condition_mvt(p, [], [])
        with pytest.raises(ValueError):
            condition_mvt(p, [0, 1], [0.0, 0.0])
        with pytest.raises(ValueError):
            condition_mvt(p, [0, 0], [0.0, 0.0])


class TestMarginalMvt:
    def test_keep_all_identity(self):
        rng = np.random.default_rng(10)
        p = random_mvt(rng, 3, nu=4.0)
        m = marginal_mvt(p, [0, 1, 2])
        np.testing.assert_allclose(m.mu, p.mu)
        np.testing.assert_allclose(m.sigma, p.sigma)
        assert m.nu == p.nu

    def test_block_extraction(self):
        p = MvtParams([1.0, 2.0], [[4.0, 1.0], [1.0, 9.0]], 6.0)
        m = marginal_mvt(p, [0])
        assert (float(m.mu[0]), float(m.sigma[0, 0]), m.nu) == (1.0, 4.0, 6.0)

    def test_quadrature_over_dropped_coordinate(self):
        p = MvtParams([0.2, -0.4], [[1.0, 0.6], [0.6, 2.0]], 5.0)
        m = marginal_mvt(p, [0])
        mu, s, nu = univariate(m)
        for x in (-2.0, 0.2, 1.5):
            integral, _ = integrate.quad(
                lambda y, x=x: np.exp(mvt_logpdf(np.array([x, y]), p)),
                -np.inf, np.inf,
            )
            assert abs(integral - stats.t.pdf((x - mu) / s, df=nu) / s) < 1e-4

    def test_empty_keep(self):
        p = MvtParams([0.0, 0.0], np.eye(2), 5.0)
        with pytest.raises(ValueError):
            marginal_mvt(p, [])


class TestMixtureQuantile:
    def test_single_component(self):
        got = mixture_quantile([1.0], [(0.3, 2.0, 6.0)], 0.05)
        assert abs(got - (0.3 + 2.0 * t_quantile(0.05, 6.0))) < 1e-10

    def test_duplicated_components(self):
        comp = (0.1, 1.5, 8.0)
        single = mixture_quantile([1.0], [comp], 0.1)
        double = mixture_quantile([0.3, 0.7], [comp, comp], 0.1)
        assert abs(single - double) < 1e-10

    def test_symmetric_pair_median(self):
        got = mixture_quantile([0.5, 0.5], [(-1.0, 1.0, 5.0), (1.0, 1.0, 5.0)], 0.5)
        assert abs(got) < 1e-10

    def test_root_property(self):
        rng = np.random.default_rng(11)
        w = rng.dirichlet(np.ones(3))
        comps = [(float(rng.normal()), float(rng.uniform(0.5, 2.0)),
                  float(rng.uniform(2.5, 15.0))) for _ in range(3)]
        for tau in (0.01, 0.3, 0.97):
            q = mixture_quantile(w, comps, tau)
            assert abs(mixture_cdf(q, w, comps) - tau) < 1e-10

    def test_monotone_in_tau(self):
        comps = [(0.0, 1.0, 3.0), (2.0, 0.5, 10.0)]
        w = [0.4, 0.6]
        qs = [mixture_quantile(w, comps, t) for t in np.linspace(0.05, 0.95, 10)]
        assert np.all(np.diff(qs) > 0)

    def test_affine_equivariance(self):
        comps = [(0.0, 1.0, 4.0), (1.0, 2.0, 7.0)]
        w = [0.5, 0.5]
        base = mixture_quantile(w, comps, 0.05)
        shifted = [(m + 3.0, s, n) for m, s, n in comps]
        assert abs(mixture_quantile(w, shifted, 0.05) - (base + 3.0)) < 1e-9
        scaled = [(2.0 * m, 2.0 * s, n) for m, s, n in comps]
        assert abs(mixture_quantile(w, scaled, 0.05) - 2.0 * base) < 1e-9

    def test_weight_validation(self):
        with pytest.raises(ValueError):
            mixture_quantile([0.6, 0.6], [(0.0, 1.0, 5.0), (1.0, 1.0, 5.0)], 0.5)
        with pytest.raises(ValueError):
            mixture_quantile([1.0], [(0.0, -1.0, 5.0)], 0.5)
        with pytest.raises(ValueError):
            mixture_quantile([1.0], [(0.0, 1.0, 5.0)], 1.0)


class TestMixtureEs:
    def test_single_component_closed_form(self):
        got = mixture_es([1.0], [(0.4, 1.5, 6.0)], 0.05)
        assert abs(got - (0.4 + 1.5 * t_es(0.05, 6.0))) < 1e-10

    def test_es_below_var(self):
        rng = np.random.default_rng(12)
        w = rng.dirichlet(np.ones(3))
        comps = [(float(rng.normal()), float(rng.uniform(0.5, 2.0)),
                  float(rng.uniform(2.5, 15.0))) for _ in range(3)]
        assert mixture_es(w, comps, 0.05) < mixture_quantile(w, comps, 0.05)

    def test_monte_carlo(self):
        rng = np.random.default_rng(13)
        w = np.array([0.2, 0.5, 0.3])
        comps = [(-0.5, 1.0, 4.0), (0.3, 0.7, 9.0), (1.0, 2.0, 25.0)]
        n = 10**7
        ks = rng.choice(3, size=n, p=w)
        draws = np.empty(n)
        for k, (m, s, nu) in enumerate(comps):
            mask = ks == k
            draws[mask] = m + s * rng.standard_t(nu, size=mask.sum())
        tau = 0.05
        q = mixture_quantile(w, comps, tau)
        tail = draws[draws <= q]
        se = tail.std(ddof=1) / np.sqrt(tail.size)
        assert abs(mixture_es(w, comps, tau) - tail.mean()) < 3 * se

    def test_requires_nu_above_one(self):
        with pytest.raises(ValueError):
            mixture_es([1.0], [(0.0, 1.0, 0.9)], 0.05)

    def test_truncated_mean_no_mass(self):
        with pytest.raises(ValueError):
            mixture_truncated_mean([1.0], [(0.0, 1.0, 5.0)], -1e80)
