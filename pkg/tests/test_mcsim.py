import math

import numpy as np
import pytest
from scipy import stats

from irs_ee.channel import Rayleigh, Rician, fit_gamma, fit_gaussian
from irs_ee.mcsim import McEstimate, SampleSet, clopper_pearson, mc_cdf, mc_op_ee, mc_op_rate
from irs_ee.outage import (
    EeThreshold,
    ExponentOverflowError,
    RateThreshold,
    SystemConfig,
    op_ee_gamma,
    op_rate,
    q_threshold,
)


@pytest.fixture
def n4_config():
    return SystemConfig(n_elements=4, p_tx=1.0, p_circuit=0.5, p_irs=0.5, n0=1.0)


class TestMcOpEe:
    def test_zero_threshold(self, n4_config):
        est = mc_op_ee(n4_config, Rayleigh(), EeThreshold(1e-12), 10_000, seed=1)
        assert est.estimate == 0.0
        assert est.stderr == 0.0

    @pytest.mark.parametrize("eta", [1.0, 1.5, 1.8, 2.2])
    def test_matches_gamma(self, n4_config, eta):
        est = mc_op_ee(n4_config, Rayleigh(), EeThreshold(eta), 1_000_000, seed=2)
        assert abs(est.estimate - op_ee_gamma(n4_config, Rayleigh(), EeThreshold(eta))) <= 0.015

    def test_deterministic(self, n4_config):
        a = mc_op_ee(n4_config, Rician(1, 1), EeThreshold(1.8), 50_000, seed=77)
        b = mc_op_ee(n4_config, Rician(1, 1), EeThreshold(1.8), 50_000, seed=77)
        assert a == b

    def test_min_trials(self, n4_config):
        with pytest.raises(ValueError):
            mc_op_ee(n4_config, Rayleigh(), EeThreshold(1.0), 99, seed=0)

    def test_overflow_propagates(self, n4_config):
        with pytest.raises(ExponentOverflowError):
            mc_op_ee(n4_config, Rayleigh(), EeThreshold(1e4), 1000, seed=0)

    def test_disjoint_seeds_agree(self, n4_config):
        a = mc_op_ee(n4_config, Rician(2, 1), EeThreshold(1.8), 200_000, seed=1001)
        b = mc_op_ee(n4_config, Rician(2, 1), EeThreshold(1.8), 200_000, seed=2002)
        pooled = math.hypot(a.stderr, b.stderr)
        assert abs(a.estimate - b.estimate) <= 6 * pooled

    def test_equals_cdf_at_threshold(self, n4_config):
        eta = EeThreshold(1.7)
        est = mc_op_ee(n4_config, Rayleigh(), eta, 100_000, seed=5)
        root = q_threshold(n4_config, eta)[1]
        cdf = mc_cdf(Rayleigh(), 4, 100_000, 5, [root])[0]
        assert abs(est.estimate - cdf) <= 1 / 100_000


class TestMcOpRate:
    def test_zero_threshold(self, n4_config):
        assert mc_op_rate(n4_config, Rayleigh(), RateThreshold(1e-12), 10_000, 0).estimate == 0.0

    def test_monotone_in_power(self):
        samples = SampleSet(Rayleigh(), 4, 100_000, seed=8)
        values = []
        for p in np.geomspace(0.05, 5.0, 10):
            c = SystemConfig(n_elements=4, p_tx=p, n0=1.0)
            values.append(mc_op_rate(c, Rayleigh(), RateThreshold(2.0), 100_000, 8, samples=samples))
        for a, b in zip(values, values[1:]):
            assert b.estimate <= a.estimate + 2 * math.hypot(a.stderr, b.stderr)
        assert values[-1].estimate < values[0].estimate

    @pytest.mark.parametrize("p", [0.1, 0.5, 1.0, 3.0])
    def test_matches_gamma(self, p):
        c = SystemConfig(n_elements=4, p_tx=p, n0=1.0)
        est = mc_op_rate(c, Rayleigh(), RateThreshold(2.0), 1_000_000, seed=3)
        assert abs(est.estimate - op_rate(c, Rayleigh(), RateThreshold(2.0))) <= 0.015


class TestMcCdf:
    def test_below_zero_and_tail(self):
        mu = fit_gaussian(Rayleigh(), 4).mu
        f = mc_cdf(Rayleigh(), 4, 1_000_000, 4, [-1.0, 0.0, 10 * mu])
        assert f[0] == 0.0
        assert f[1] == 0.0
        assert f[2] >= 1 - 1e-4

    def test_gamma_median_probe(self):
        g = fit_gamma(Rayleigh(), 4)
        median = stats.gamma.ppf(0.5, g.shape, scale=g.scale)
        f = mc_cdf(Rayleigh(), 4, 1_000_000, 3, [median])[0]
        assert abs(f - 0.5) <= 3 * math.sqrt(0.25 / 1_000_000)

    def test_monotone_bounded(self):
        grid = np.linspace(-1, 20, 300)
        f = mc_cdf(Rician(1, 3), 6, 20_000, 9, grid)
        assert np.all(np.diff(f) >= 0)
        assert f.min() >= 0 and f.max() <= 1

    def test_unsorted_grid(self):
        with pytest.raises(ValueError):
            mc_cdf(Rayleigh(), 2, 1000, 0, [1.0, 0.5])


class TestEstimate:
    def test_stderr(self):
        e = McEstimate.from_count(250, 1000, seed=3)
        assert e.estimate == 0.25
        assert e.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 1000))
        lo, hi = e.interval()
        assert lo < 0.25 < hi

    def test_clopper_pearson(self):
        lo, hi = clopper_pearson(0, 10_000)
        assert lo == 0.0
        assert hi == pytest.approx(1 - 0.025 ** (1 / 10_000), rel=1e-9)
        lo, hi = clopper_pearson(5, 100)
        assert lo < 0.05 < hi

    def test_sample_set_count(self):
        s = SampleSet(Rayleigh(), 3, 1000, seed=1)
        assert s.count_below(np.inf) == 1000
        assert s.count_below(0.0) == 0
        with pytest.raises(ValueError):
            SampleSet(Rayleigh(), 3, 10, seed=1)
