"""Outage probability of energy efficiency for finite-element IRS links."""

from .channel import (
    GammaFit,
    GaussianFit,
    ProductMoments,
    Rayleigh,
    Rician,
    fit_gamma,
    fit_gaussian,
    product_moments,
    raw_moment,
    sample_products,
)
from .convergence import BerryEsseenReport, approximation_error_sweep, berry_esseen_bound
from .mcsim import McEstimate, SampleSet, mc_cdf, mc_op_ee, mc_op_rate
from .optimize import OptimizationProblem, Optimum, minimize_op, objective, required_elements
from .outage import (
    EeThreshold,
    RateThreshold,
    SystemConfig,
    dbm_to_watts,
    energy_efficiency,
    op_ee_clt,
    op_ee_gamma,
    op_rate,
    q_threshold,
    snr,
    watts_to_dbm,
)

__version__ = "0.1.0"
