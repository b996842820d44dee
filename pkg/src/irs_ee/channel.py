"""Fading models for the two IRS hops and the statistics of x_i = alpha_i * beta_i.

Each reflecting element contributes the product of two independent envelopes.
The sum X over N elements is what the outage expressions need, either as a
moment-matched Gamma law or as a Gaussian.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import integrate, special

from . import specfun

__all__ = [
    "Rician",
    "Rayleigh",
    "ChannelModel",
    "ProductMoments",
    "GammaFit",
    "GaussianFit",
    "raw_moment",
    "product_moments",
    "rician_mean_closed_form",
    "fit_gamma",
    "fit_gaussian",
    "sample_products",
    "CHUNK_TRIALS",
]

CHUNK_TRIALS = 1 << 16
ABS_MOMENT_MC_TRIALS = 10_000_000
ABS_MOMENT_MC_SEED = 0x1A5_EED
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class Rician:
    """Rician envelopes on both hops.

    k1, k2 are the LOS-to-scatter power ratios; omega1, omega2 the mean-square
    envelopes E[alpha^2], E[beta^2].
    """

    k1: float = 0.0
    k2: float = 0.0
    omega1: float = 1.0
    omega2: float = 1.0

    def __post_init__(self):
        for name in ("k1", "k2", "omega1", "omega2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.k1 < 0 or self.k2 < 0:
            raise ValueError("Rician K factors must be >= 0")
        if self.omega1 <= 0 or self.omega2 <= 0:
            raise ValueError("Rician omega must be > 0")

    def hop(self, which):
        """(K, Omega) for hop 1 (Tx-IRS) or hop 2 (IRS-Rx)."""
        return (self.k1, self.omega1) if which == 1 else (self.k2, self.omega2)


@dataclass(frozen=True)
class Rayleigh:
    """Rayleigh envelopes with a common scale sigma; E[alpha^2] = 2 sigma^2."""

    sigma: float = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"Rayleigh sigma must be finite and > 0, got {self.sigma}")


ChannelModel = Union[Rician, Rayleigh]


@dataclass(frozen=True)
class ProductMoments:
    """Moments of a single cascade amplitude x_i.

    central3_abs is E|x - E x|^3, which is what the Berry-Esseen bound needs;
    central3_signed is kept for comparison. central3_abs_stderr is zero when
    the absolute moment comes from quadrature.
    """

    mean: float
    variance: float
    raw2: float
    raw3: float
    central3_signed: float
    central3_abs: float
    central3_abs_stderr: float = 0.0


@dataclass(frozen=True)
class GammaFit:
    shape: float
    scale: float

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def variance(self):
        return self.shape * self.scale**2


@dataclass(frozen=True)
class GaussianFit:
    mu: float
    sigma2: float

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)


def _check_model(model):
    if not isinstance(model, (Rician, Rayleigh)):
        raise TypeError(f"expected Rician or Rayleigh, got {type(model).__name__}")


def raw_moment(model: ChannelModel, k: int) -> float:
    """E[x_i^k] for k in 1..4."""
    _check_model(model)
    if k not in (1, 2, 3, 4):
        raise ValueError(f"raw moments are supported for k in 1..4, got {k}")
    g = math.exp(2.0 * math.lgamma(1.0 + 0.5 * k))
    if isinstance(model, Rayleigh):
        return (2.0 * model.sigma**2) ** k * g
    a = 1.0 + 0.5 * k
    # e^{-K} 1F1(a; 1; K) is evaluated jointly so large K does not overflow
    f1 = specfun.hyp1f1_b1_scaled(a, model.k1)
    f2 = specfun.hyp1f1_b1_scaled(a, model.k2)
    per_hop = (model.omega1 / (1.0 + model.k1)) * (model.omega2 / (1.0 + model.k2))
    return per_hop ** (0.5 * k) * g * f1 * f2


def rician_mean_closed_form(model: Rician) -> float:
    """E[x_i] from the Bessel-I expression for a Rician product.

    Independent of :func:`raw_moment`; used to cross-check it.
    """

    def scaled_j(k):
        # e^{-K/2} [(K+1) I0(K/2) + K I1(K/2)]
        return (k + 1.0) * specfun.bessel_i_scaled(0, 0.5 * k) + k * specfun.bessel_i_scaled(
            1, 0.5 * k
        )

    return (
        math.pi
        * math.sqrt(model.omega1 * model.omega2)
        / (4.0 * math.sqrt((model.k1 + 1.0) * (model.k2 + 1.0)))
        * scaled_j(model.k1)
        * scaled_j(model.k2)
    )


def _rayleigh_abs_central3(model, mean):
    # density of the product of two Rayleigh(sigma): y/s^4 K0(y/s^2);
    # work in t = y/s^2 where it is t K0(t)
    s2 = model.sigma**2
    m = mean / s2

    def integrand(t):
        return abs(t - m) ** 3 * t * special.k0e(t) * math.exp(-t)

    lower, _ = integrate.quad(integrand, 0.0, m, epsabs=0.0, epsrel=1e-12, limit=200)
    upper, _ = integrate.quad(integrand, m, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return s2**3 * (lower + upper)


def _rician_abs_central3(model, mean):
    x = sample_products(model, 1, ABS_MOMENT_MC_TRIALS, ABS_MOMENT_MC_SEED)
    dev = np.abs(x - mean) ** 3
    return float(dev.mean()), float(dev.std(ddof=1) / math.sqrt(dev.size))


@lru_cache(maxsize=256)
def product_moments(model: ChannelModel) -> ProductMoments:
    _check_model(model)
    m1 = raw_moment(model, 1)
    m2 = raw_moment(model, 2)
    m3 = raw_moment(model, 3)
    variance = m2 - m1 * m1
    if not variance > 0:
        raise ArithmeticError(f"non-positive variance {variance} for {model}")
    central3 = m3 - 3.0 * m1 * m2 + 2.0 * m1**3
    if isinstance(model, Rayleigh):
        abs3, abs3_se = _rayleigh_abs_central3(model, m1), 0.0
    else:
        abs3, abs3_se = _rician_abs_central3(model, m1)
    return ProductMoments(
        mean=m1,
        variance=variance,
        raw2=m2,
        raw3=m3,
        central3_signed=central3,
        central3_abs=abs3,
        central3_abs_stderr=abs3_se,
    )


def _mean_variance(model):
    # first two moments only; avoids the costly absolute third moment
    m1 = raw_moment(model, 1)
    return m1, raw_moment(model, 2) - m1 * m1


def fit_gamma(model: ChannelModel, n: int) -> GammaFit:
    """Moment-matched Gamma law for X = sum of n products.

    Rician uses the first Laguerre term for X directly; Rayleigh fits each x_i
    and sums n iid Gamma laws. Both give shape = n E[x]^2/Var[x] and
    scale = Var[x]/E[x].
    """
    _check_model(model)
    if n < 1:
        raise ValueError(f"element count must be >= 1, got {n}")
    mean, var = _mean_variance(model)
    # for Rayleigh, mean^2/var = pi^2/(16 - pi^2) whatever sigma is
    return GammaFit(shape=n * mean * mean / var, scale=var / mean)


def fit_gaussian(model: ChannelModel, n: int) -> GaussianFit:
    _check_model(model)
    if n < 1:
        raise ValueError(f"element count must be >= 1, got {n}")
    mean, var = _mean_variance(model)
    return GaussianFit(mu=n * mean, sigma2=n * var)


# -- sampling -------------------------------------------------------------------


def _chunk_rng(seed, index):
    ss = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def _rician_envelopes(rng, k, omega, shape):
    los = math.sqrt(k * omega / (1.0 + k))
    scatter = math.sqrt(omega / (2.0 * (1.0 + k)))
    z = rng.standard_normal((2,) + shape)
    return np.hypot(los + scatter * z[0], scatter * z[1])


def _rayleigh_envelopes(rng, sigma, shape):
    u = rng.random(shape)
    # 1 - u lies in (0, 1], so the log is finite
    return sigma * np.sqrt(-2.0 * np.log1p(-u))


def _sample_chunk(model, n, seed, index, size):
    rng = _chunk_rng(seed, index)
    shape = (size, n)
    if isinstance(model, Rician):
        alpha = _rician_envelopes(rng, model.k1, model.omega1, shape)
        beta = _rician_envelopes(rng, model.k2, model.omega2, shape)
    else:
        alpha = _rayleigh_envelopes(rng, model.sigma, shape)
        beta = _rayleigh_envelopes(rng, model.sigma, shape)
    return (alpha * beta).sum(axis=1)


def sample_products(
    model: ChannelModel, n: int, trials: int, seed: int, workers: int = 1
) -> np.ndarray:
    """Draw `trials` realizations of X = sum_i alpha_i beta_i over n elements.

    Trials are generated in fixed-size chunks, each from its own Philox stream
    keyed on (seed, chunk index), so the output depends only on the seed and
    never on `workers`.
    """
    _check_model(model)
    if n < 1:
        raise ValueError(f"element count must be >= 1, got {n}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    n_chunks = -(-trials // CHUNK_TRIALS)
    sizes = [min(CHUNK_TRIALS, trials - i * CHUNK_TRIALS) for i in range(n_chunks)]
    out = np.empty(trials)

    def fill(index):
        start = index * CHUNK_TRIALS
        out[start : start + sizes[index]] = _sample_chunk(model, n, seed, index, sizes[index])

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_chunks)))
    else:
        for i in range(n_chunks):
            fill(i)
    return out
