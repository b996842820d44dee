"""Outage probability of energy efficiency and of rate for the IRS link.

With ideal phase alignment the end-to-end SNR is (p/N0) X^2, so both
outage events reduce to X < sqrt(Q) for a power-dependent threshold Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import specfun
from .channel import ChannelModel, GammaFit, GaussianFit, fit_gamma, fit_gaussian

__all__ = [
    "SystemConfig",
    "EeThreshold",
    "RateThreshold",
    "ExponentOverflowError",
    "MAX_EXPONENT_BITS",
    "dbm_to_watts",
    "watts_to_dbm",
    "snr",
    "energy_efficiency",
    "q_threshold",
    "q_rate_threshold",
    "gamma_cdf",
    "gaussian_cdf",
    "op_ee_gamma",
    "op_ee_clt",
    "op_rate",
]

# 2^1000 ~ 1e301 still fits in a double; anything past it is treated as certain outage
MAX_EXPONENT_BITS = 1000.0
_SATURATION = 1.0 - 1e-16


class ExponentOverflowError(OverflowError):
    """The threshold exponent eta * P_T (or R_th) exceeds MAX_EXPONENT_BITS."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """Link budget in watts. Bandwidth is normalized to 1 Hz."""

    n_elements: int = 4
    p_tx: float = dbm_to_watts(28.0)
    p_circuit: float = dbm_to_watts(10.0)
    p_irs: float = dbm_to_watts(10.0)
    n0: float = dbm_to_watts(-90.0)

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ValueError(f"n_elements must be a positive integer, got {self.n_elements}")
        for name in ("p_circuit", "p_irs", "n0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")
        if not (math.isfinite(self.p_tx) and self.p_tx >= 0):
            raise ValueError(f"p_tx must be finite and >= 0, got {self.p_tx}")

    @property
    def total_power(self):
        return self.p_tx + self.p_circuit + self.p_irs

    @property
    def mean_snr(self):
        return self.p_tx / self.n0

    def with_power(self, p_tx):
        return replace(self, p_tx=p_tx)

    def with_elements(self, n):
        return replace(self, n_elements=n)


@dataclass(frozen=True)
class EeThreshold:
    eta_th: float  # bits/Hz/J

    def __post_init__(self):
        if not (math.isfinite(self.eta_th) and self.eta_th > 0):
            raise ValueError(f"eta_th must be finite and > 0, got {self.eta_th}")


@dataclass(frozen=True)
class RateThreshold:
    r_th: float  # bits/s/Hz

    def __post_init__(self):
        if not (math.isfinite(self.r_th) and self.r_th > 0):
            raise ValueError(f"r_th must be finite and > 0, got {self.r_th}")


def snr(config: SystemConfig, x: float) -> float:
    if x < 0:
        raise ValueError(f"channel sum must be >= 0, got {x}")
    return config.p_tx / config.n0 * x * x


def energy_efficiency(config: SystemConfig, x: float) -> float:
    """log2(1 + SNR) / P_T in bits/Hz/J."""
    return math.log2(1.0 + snr(config, x)) / config.total_power


def _two_pow_minus_one(bits):
    if bits > MAX_EXPONENT_BITS:
        raise ExponentOverflowError(
            f"threshold exponent {bits:.6g} bits exceeds {MAX_EXPONENT_BITS:g}"
        )
    return math.expm1(bits * math.log(2.0))


def _require_power(config):
    if not config.p_tx > 0:
        raise ValueError("p_tx must be > 0 to form an outage threshold")


def q_threshold(config: SystemConfig, eta: EeThreshold) -> tuple[float, float]:
    """Return (Q, sqrt(Q)) with Q = (2^(eta * P_T) - 1) / (p / N0)."""
    _require_power(config)
    q = _two_pow_minus_one(eta.eta_th * config.total_power) / config.mean_snr
    return q, math.sqrt(q)


def q_rate_threshold(config: SystemConfig, rate: RateThreshold) -> tuple[float, float]:
    """Return (Q, sqrt(Q)) with Q = (2^R_th - 1) / (p / N0)."""
    _require_power(config)
    q = _two_pow_minus_one(rate.r_th) / config.mean_snr
    return q, math.sqrt(q)


def gamma_cdf(fit: GammaFit, x: float) -> float:
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    value = specfun.reg_lower_incomplete_gamma(fit.shape, x / fit.scale)
    return 1.0 if value >= _SATURATION else value


def gaussian_cdf(fit: GaussianFit, x: float) -> float:
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    return specfun.normal_cdf((x - fit.mu) / fit.sigma)


def _sqrt_threshold(config, threshold):
    """sqrt(Q) for either threshold type, or inf once the exponent guard trips."""
    try:
        if isinstance(threshold, EeThreshold):
            return q_threshold(config, threshold)[1]
        if isinstance(threshold, RateThreshold):
            return q_rate_threshold(config, threshold)[1]
    except ExponentOverflowError:
        return math.inf
    raise TypeError(f"unsupported threshold {threshold!r}")


def op_ee_gamma(config: SystemConfig, model: ChannelModel, eta: EeThreshold) -> float:
    """P[EE < eta_th] under the moment-matched Gamma law for X."""
    return gamma_cdf(fit_gamma(model, config.n_elements), _sqrt_threshold(config, eta))


def op_ee_clt(config: SystemConfig, model: ChannelModel, eta: EeThreshold) -> float:
    """P[EE < eta_th] under the Gaussian (CLT) law for X."""
    return gaussian_cdf(fit_gaussian(model, config.n_elements), _sqrt_threshold(config, eta))


def op_rate(
    config: SystemConfig,
    model: ChannelModel,
    rate: RateThreshold,
    method: str = "gamma",
) -> float:
    """P[log2(1 + SNR) < R_th] with either the Gamma or the CLT law."""
    root_q = _sqrt_threshold(config, rate)
    if method == "gamma":
        return gamma_cdf(fit_gamma(model, config.n_elements), root_q)
    if method == "clt":
        return gaussian_cdf(fit_gaussian(model, config.n_elements), root_q)
    raise ValueError(f"method must be 'gamma' or 'clt', got {method!r}")
