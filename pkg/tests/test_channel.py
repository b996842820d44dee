import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from irs_ee.specfun import bessel_i
from irs_ee.channel import (
    CHUNK_TRIALS,
    GammaFit,
    Rayleigh,
    Rician,
    fit_gamma,
    fit_gaussian,
    product_moments,
    raw_moment,
    rician_mean_closed_form,
    sample_products,
)

K_RAYLEIGH = math.pi**2 / (16 - math.pi**2)
THETA_RAYLEIGH = (16 - math.pi**2) / (4 * math.pi)

k_factor = st.floats(0.0, 20.0)
omega = st.floats(0.05, 20.0)


class TestModels:
    def test_validation(self):
        with pytest.raises(ValueError):
            Rician(k1=-1.0)
        with pytest.raises(ValueError):
            Rician(omega2=0.0)
        with pytest.raises(ValueError):
            Rician(k1=math.inf)
        with pytest.raises(ValueError):
            Rayleigh(sigma=0.0)

    def test_default_rayleigh_scale(self):
        assert Rayleigh().sigma == pytest.approx(1 / math.sqrt(2))

    def test_unsupported_model(self):
        with pytest.raises(TypeError):
            raw_moment("rician", 1)


class TestRawMoment:
    def test_rayleigh_first_two(self):
        assert raw_moment(Rayleigh(), 1) == pytest.approx(math.pi / 4, rel=1e-14)
        assert raw_moment(Rayleigh(), 2) == pytest.approx(1.0, rel=1e-14)

    def test_rician_k0_is_rayleigh(self):
        assert raw_moment(Rician(0, 0, 1, 1), 1) == pytest.approx(math.pi / 4, rel=1e-14)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    @pytest.mark.parametrize("sigma", [0.3, 1 / math.sqrt(2), 2.0])
    def test_k0_matches_rayleigh(self, k, sigma):
        w = 2 * sigma**2
        assert raw_moment(Rician(0, 0, w, w), k) == pytest.approx(
            raw_moment(Rayleigh(sigma), k), rel=1e-9
        )

    @settings(max_examples=100, deadline=None)
    @given(k1=k_factor, k2=k_factor, w1=omega, w2=omega)
    def test_rician_second_moment_is_power_product(self, k1, k2, w1, w2):
        assert raw_moment(Rician(k1, k2, w1, w2), 2) == pytest.approx(w1 * w2, rel=1e-10)

    def test_large_k_does_not_overflow(self):
        m = Rician(650.0, 700.0)
        assert raw_moment(m, 2) == pytest.approx(1.0, rel=1e-10)
        # nearly deterministic unit envelopes
        assert raw_moment(m, 1) == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("k", [0, 5, 2.5])
    def test_unsupported_order(self, k):
        with pytest.raises(ValueError):
            raw_moment(Rayleigh(), k)

    def test_rician_mean_monte_carlo(self):
        model = Rician(3, 3, 1, 1)
        x = sample_products(model, 1, 10_000_000, seed=11)
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - raw_moment(model, 1)) <= 4 * se


class TestProductMoments:
    def test_rayleigh(self):
        m = product_moments(Rayleigh())
        assert m.mean == pytest.approx(math.pi / 4, rel=1e-14)
        assert m.variance == pytest.approx(1 - math.pi**2 / 16, rel=1e-12)
        assert m.variance == pytest.approx(0.3831497, abs=1e-7)

    def test_rayleigh_signed_third(self):
        m = product_moments(Rayleigh())
        mu = math.pi / 4
        expected = 9 * math.pi / 16 - 3 * mu * 1.0 + 2 * mu**3
        assert m.central3_signed == pytest.approx(expected, rel=1e-12)
        x = sample_products(Rayleigh(), 1, 2_000_000, seed=5)
        dev3 = (x - mu) ** 3
        se = dev3.std(ddof=1) / math.sqrt(x.size)
        assert abs(dev3.mean() - expected) <= 4 * se

    def test_rayleigh_abs_third_quadrature(self):
        # frozen from a 40-digit mpmath quadrature of |y - pi/4|^3 * 4y K0(2y)
        m = product_moments(Rayleigh())
        assert m.central3_abs == pytest.approx(0.50897623036164574523, rel=1e-9)
        assert m.central3_abs_stderr == 0.0

    def test_rician_mean_closed_form(self):
        model = Rician(1, 1, 1, 1)
        j = 2 * bessel_i(0, 0.5) + bessel_i(1, 0.5)
        bessel_form = math.pi * math.exp(-1) / (4 * math.sqrt(4)) * j * j
        assert product_moments(model).mean == pytest.approx(bessel_form, rel=1e-10)
        assert rician_mean_closed_form(model) == pytest.approx(raw_moment(model, 1), rel=1e-10)

    @pytest.mark.parametrize("params", [(0.5, 2.0, 1.0, 3.0), (4.0, 0.0, 0.5, 0.5), (12.0, 7.0, 2.0, 1.0)])
    def test_rician_mean_closed_form_general(self, params):
        model = Rician(*params)
        assert rician_mean_closed_form(model) == pytest.approx(raw_moment(model, 1), rel=1e-10)

    @pytest.mark.parametrize("model", [Rayleigh(), Rayleigh(1.3), Rician(1, 1), Rician(3, 0.5, 2, 1)])
    def test_invariants(self, model):
        m = product_moments(model)
        assert m.variance == pytest.approx(m.raw2 - m.mean**2, rel=1e-12)
        assert m.variance > 0
        assert m.central3_signed == pytest.approx(
            m.raw3 - 3 * m.mean * m.raw2 + 2 * m.mean**3, rel=1e-12
        )
        assert m.central3_abs >= abs(m.central3_signed)

    def test_rician_abs_third_has_stderr(self):
        m = product_moments(Rician(1, 1))
        assert 0 < m.central3_abs_stderr < 1e-2 * m.central3_abs


class TestFits:
    def test_rayleigh_single_element(self):
        g = fit_gamma(Rayleigh(), 1)
        assert g.shape == pytest.approx(K_RAYLEIGH, rel=1e-12)
        assert g.scale == pytest.approx(THETA_RAYLEIGH, rel=1e-12)
        assert g.shape * g.scale == pytest.approx(math.pi / 4, rel=1e-12)
        assert g.shape * g.scale**2 == pytest.approx(1 - math.pi**2 / 16, rel=1e-12)

    def test_rayleigh_additive_shape(self):
        g = fit_gamma(Rayleigh(), 4)
        assert g.shape == pytest.approx(4 * K_RAYLEIGH, rel=1e-12)
        assert g.shape == pytest.approx(6.43978, abs=1e-5)
        assert g.scale == pytest.approx(THETA_RAYLEIGH, rel=1e-12)

    def test_rician_moment_identities(self):
        model = Rician(2, 2, 1, 1)
        g = fit_gamma(model, 8)
        m = product_moments(model)
        assert g.shape * g.scale == pytest.approx(8 * m.mean, rel=1e-12)
        assert g.shape * g.scale**2 == pytest.approx(8 * m.variance, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(k1=k_factor, k2=k_factor, w1=omega, w2=omega, n=st.integers(1, 256))
    def test_gamma_fit_identities(self, k1, k2, w1, w2, n):
        model = Rician(k1, k2, w1, w2)
        g = fit_gamma(model, n)
        mean = raw_moment(model, 1)
        var = raw_moment(model, 2) - mean**2
        assert g.mean == pytest.approx(n * mean, rel=1e-12)
        assert g.variance == pytest.approx(n * var, rel=1e-12)

    def test_gaussian_rayleigh(self):
        g = fit_gaussian(Rayleigh(), 16)
        assert g.mu == pytest.approx(4 * math.pi, rel=1e-14)
        assert g.sigma2 == pytest.approx(16 * (1 - math.pi**2 / 16), rel=1e-12)
        assert g.sigma2 == pytest.approx(6.1303956, abs=1e-6)

    @pytest.mark.parametrize("model", [Rayleigh(), Rician(1, 0.5)])
    def test_gaussian_single_element(self, model):
        g = fit_gaussian(model, 1)
        m = product_moments(model)
        assert (g.mu, g.sigma2) == pytest.approx((m.mean, m.variance), rel=1e-12)

    def test_gaussian_linearity(self):
        model = Rician(1, 0.5, 1, 1)
        g = fit_gaussian(model, 32)
        m = product_moments(model)
        assert g.mu == pytest.approx(32 * m.mean, rel=1e-12)
        assert g.sigma2 == pytest.approx(32 * m.variance, rel=1e-12)

    def test_bad_n(self):
        with pytest.raises(ValueError):
            fit_gamma(Rayleigh(), 0)
        with pytest.raises(ValueError):
            fit_gaussian(Rayleigh(), 0)


class TestSampling:
    def test_rayleigh_mean(self):
        x = sample_products(Rayleigh(), 1, 1_000_000, seed=3)
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - math.pi / 4) <= 4 * se

    def test_rician_k0_matches_rayleigh_in_distribution(self):
        sigma = 0.9
        a = sample_products(Rician(0, 0, 2 * sigma**2, 2 * sigma**2), 3, 100_000, seed=1)
        b = sample_products(Rayleigh(sigma), 3, 100_000, seed=2)
        assert stats.ks_2samp(a, b).statistic <= 0.01

    @pytest.mark.parametrize("model", [Rayleigh(), Rician(2, 1, 1, 3)])
    def test_deterministic(self, model):
        a = sample_products(model, 5, 200_001, seed=2**63 + 17)
        b = sample_products(model, 5, 200_001, seed=2**63 + 17)
        assert np.array_equal(a, b)

    def test_independent_of_workers(self):
        model = Rician(1, 2)
        a = sample_products(model, 4, 300_000, seed=9, workers=1)
        b = sample_products(model, 4, 300_000, seed=9, workers=4)
        assert np.array_equal(a, b)

    def test_prefix_stability(self):
        # whole chunks do not depend on how many trials follow them
        a = sample_products(Rayleigh(), 2, CHUNK_TRIALS, seed=4)
        b = sample_products(Rayleigh(), 2, 2 * CHUNK_TRIALS + 5, seed=4)
        assert np.array_equal(a, b[:CHUNK_TRIALS])

    def test_seeds_differ(self):
        a = sample_products(Rayleigh(), 2, 1000, seed=1)
        b = sample_products(Rayleigh(), 2, 1000, seed=2)
        assert not np.array_equal(a, b)

    def test_positive_and_shape(self):
        x = sample_products(Rician(1, 1), 8, 12345, seed=0)
        assert x.shape == (12345,)
        assert np.all(x > 0)

    @pytest.mark.parametrize("model", [Rayleigh(), Rician(3, 1, 1, 2)])
    def test_moments_converge_like_inverse_sqrt(self, model):
        n = 4
        mean = n * raw_moment(model, 1)
        sd = math.sqrt(fit_gaussian(model, n).sigma2)
        for trials, seed in ((10_000, 21), (1_000_000, 22)):
            x = sample_products(model, n, trials, seed)
            assert abs(x.mean() - mean) <= 4 * sd / math.sqrt(trials)
            # second moment of X: n*E[x^2] + n(n-1)E[x]^2
            m2 = n * raw_moment(model, 2) + n * (n - 1) * raw_moment(model, 1) ** 2
            se2 = (x**2).std(ddof=1) / math.sqrt(trials)
            assert abs((x**2).mean() - m2) <= 5 * se2

    def test_invalid(self):
        with pytest.raises(ValueError):
            sample_products(Rayleigh(), 0, 10, 0)
        with pytest.raises(ValueError):
            sample_products(Rayleigh(), 1, 0, 0)


def test_gamma_fit_properties():
    g = GammaFit(shape=3.0, scale=0.5)
    assert g.mean == 1.5
    assert g.variance == 0.75
