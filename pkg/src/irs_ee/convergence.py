"""Berry-Esseen bound on the CLT error and the Gamma-vs-CLT gap sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel, fit_gamma, fit_gaussian, product_moments
from .mcsim import SampleSet
from .outage import EeThreshold, SystemConfig, gamma_cdf, gaussian_cdf, op_ee_clt, op_ee_gamma

__all__ = [
    "BERRY_ESSEEN_C",
    "DEFAULT_GRID_SIZE",
    "BerryEsseenReport",
    "berry_esseen_bound",
    "clt_grid",
    "approximation_error_sweep",
]

BERRY_ESSEEN_C = 0.56
DEFAULT_GRID_SIZE = 512


@dataclass
class BerryEsseenReport:
    """Convergence measurements for one element count.

    empirical_gap is the sup over `grid` of |Gamma CDF - Gaussian CDF|;
    gap_at_threshold is the same difference at sqrt(Q) for the configured
    eta_th. mc_gap/mc_stderr are filled only when Monte-Carlo samples are
    requested and compare the empirical CDF against the Gaussian one.
    """

    n_elements: int
    bound: float
    empirical_gap: float
    grid: list = field(repr=False)
    gap_at_threshold: float | None = None
    mc_gap: float | None = None
    mc_stderr: float | None = None


def berry_esseen_bound(model: ChannelModel, n: int) -> float:
    """c E|x - Ex|^3 / (Var[x]^{3/2} sqrt(n)) with c = 0.56."""
    if n < 1:
        raise ValueError(f"element count must be >= 1, got {n}")
    m = product_moments(model)
    return BERRY_ESSEEN_C * m.central3_abs / (m.variance**1.5 * math.sqrt(n))


def clt_grid(model: ChannelModel, n: int, grid_size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Uniform abscissas over mu +/- 4 sigma; a single point sits at mu."""
    if grid_size < 1:
        raise ValueError(f"grid_size must be >= 1, got {grid_size}")
    g = fit_gaussian(model, n)
    if grid_size == 1:
        return np.array([g.mu])
    return np.linspace(g.mu - 4.0 * g.sigma, g.mu + 4.0 * g.sigma, grid_size)


def _report(config, model, n, eta, grid_size, trials, seed):
    gamma_fit = fit_gamma(model, n)
    gauss_fit = fit_gaussian(model, n)
    grid = clt_grid(model, n, grid_size)
    clt = np.array([gaussian_cdf(gauss_fit, x) for x in grid])
    gam = np.array([gamma_cdf(gamma_fit, x) for x in grid])
    report = BerryEsseenReport(
        n_elements=n,
        bound=berry_esseen_bound(model, n),
        empirical_gap=float(np.max(np.abs(gam - clt))),
        grid=grid.tolist(),
    )
    if config is not None and eta is not None:
        cfg = config.with_elements(n)
        report.gap_at_threshold = abs(op_ee_gamma(cfg, model, eta) - op_ee_clt(cfg, model, eta))
    if trials:
        samples = SampleSet(model, n, trials, seed)
        f_mc = samples.count_below(grid) / trials
        worst = int(np.argmax(np.abs(f_mc - clt)))
        report.mc_gap = float(abs(f_mc[worst] - clt[worst]))
        report.mc_stderr = float(math.sqrt(f_mc[worst] * (1.0 - f_mc[worst]) / trials))
    return report


def approximation_error_sweep(
    config: SystemConfig | None,
    model: ChannelModel,
    n_values,
    eta: EeThreshold | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
    trials: int = 0,
    seed: int = 0,
) -> list[BerryEsseenReport]:
    """One :class:`BerryEsseenReport` per element count in `n_values`.

    `config` supplies the link budget for the gap at the eta_th threshold
    (its n_elements is overridden); pass trials > 0 to also measure the
    Monte-Carlo CDF against the Gaussian one.
    """
    n_values = list(n_values)
    if not n_values:
        raise ValueError("n_values must be nonempty")
    return [_report(config, model, int(n), eta, grid_size, trials, seed) for n in n_values]
