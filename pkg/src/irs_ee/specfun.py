"""Scalar special-function kernels used by the moment and outage code.

ln Gamma and erf are thin wrappers over :mod:`math`; the regularized
incomplete gamma, modified Bessel I0/I1 and the b=1 confluent
hypergeometric function are evaluated here from their series,
continued-fraction and asymptotic forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Precision",
    "DEFAULT_PRECISION",
    "SpecialFunctionError",
    "ConvergenceError",
    "ln_gamma",
    "erf",
    "normal_cdf",
    "reg_lower_incomplete_gamma",
    "reg_upper_incomplete_gamma",
    "gamma_pdf",
    "bessel_i",
    "bessel_i_scaled",
    "hyp1f1_b1",
    "hyp1f1_b1_scaled",
]

_TINY = 1e-300
_LOG_MAX = 709.782712893384  # log(DBL_MAX)
_BESSEL_ASYMPTOTIC_X = 30.0
_HYP_ASYMPTOTIC_X = 60.0


class SpecialFunctionError(ArithmeticError):
    """Domain or range failure in a special-function kernel."""


class ConvergenceError(SpecialFunctionError):
    """A series or continued fraction did not converge within the term cap."""


@dataclass(frozen=True)
class Precision:
    rel_tol: float = 1e-12
    max_terms: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_PRECISION = Precision()


def _check_finite(name, value):
    if not math.isfinite(value):
        raise SpecialFunctionError(f"{name} must be finite, got {value}")


def ln_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    _check_finite("x", x)
    if x <= 0:
        raise SpecialFunctionError(f"ln_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def erf(x: float) -> float:
    if math.isnan(x):
        raise SpecialFunctionError("erf of NaN")
    if math.isinf(x):
        return math.copysign(1.0, x)
    # math.erf is odd by construction; route negatives through it anyway
    if x < 0:
        return -math.erf(-x)
    return math.erf(x)


def normal_cdf(z: float) -> float:
    """Standard normal CDF, 0.5*(1 + erf(z/sqrt(2)))."""
    if z < -5.0:
        # erfc keeps relative accuracy in the lower tail
        return 0.5 * math.erfc(-z / math.sqrt(2.0))
    return 0.5 * (1.0 + erf(z / math.sqrt(2.0)))


# -- incomplete gamma ---------------------------------------------------------


def _term_cap(a, precision):
    # both expansions need O(sqrt(a)) terms near the transition x ~ a
    return max(precision.max_terms, int(20.0 * math.sqrt(a)) + 50)


def _log_prefactor(a, x):
    return a * math.log(x) - x - math.lgamma(a)


def _lower_series(a, x, precision):
    """P(a, x) by the power series, valid for x < a + 1."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_term_cap(a, precision)):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * precision.rel_tol * 1e-2:
            log_p = _log_prefactor(a, x) + math.log(total)
            return math.exp(log_p) if log_p > -745.0 else 0.0
    raise ConvergenceError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _upper_continued_fraction(a, x, precision):
    """Q(a, x) by the Legendre continued fraction (modified Lentz), x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _term_cap(a, precision) + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < precision.rel_tol * 1e-2:
            log_q = _log_prefactor(a, x) + math.log(h)
            return math.exp(log_q) if log_q > -745.0 else 0.0
    raise ConvergenceError(
        f"incomplete gamma continued fraction did not converge (a={a}, x={x})"
    )


def _check_gamma_args(a, x):
    _check_finite("a", a)
    if math.isnan(x):
        raise SpecialFunctionError("x is NaN")
    if a <= 0:
        raise SpecialFunctionError(f"shape a must be > 0, got {a}")
    if x < 0:
        raise SpecialFunctionError(f"x must be >= 0, got {x}")


def reg_lower_incomplete_gamma(
    a: float, x: float, precision: Precision = DEFAULT_PRECISION
) -> float:
    """Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).

    Uses the power series below x = a + 1 and the continued fraction for
    the complement above it.
    """
    _check_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _lower_series(a, x, precision))
    return max(0.0, 1.0 - _upper_continued_fraction(a, x, precision))


def reg_upper_incomplete_gamma(
    a: float, x: float, precision: Precision = DEFAULT_PRECISION
) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    _check_gamma_args(a, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _lower_series(a, x, precision))
    return min(1.0, _upper_continued_fraction(a, x, precision))


def gamma_pdf(a: float, x: float) -> float:
    """Density x^(a-1) e^(-x) / Gamma(a) of the unit-scale Gamma law.

    This is d/dx P(a, x).
    """
    _check_gamma_args(a, x)
    if x == 0.0:
        if a < 1.0:
            return math.inf
        return 1.0 if a == 1.0 else 0.0
    return math.exp((a - 1.0) * math.log(x) - x - math.lgamma(a))


# -- modified Bessel functions of the first kind --------------------------------


def _bessel_i_series(order, x, precision):
    if x == 0.0:
        return 1.0 if order == 0 else 0.0
    half = 0.5 * x
    term = 1.0 if order == 0 else half
    total = term
    q = half * half
    for k in range(1, precision.max_terms + 1):
        term *= q / (k * (k + order))
        total += term
        if term < total * precision.rel_tol * 1e-2:
            return total
    raise ConvergenceError(f"Bessel I{order} series did not converge at x={x}")


def _bessel_i_asymptotic_scaled(order, x, precision):
    """e^-x I_v(x) from the Hankel expansion; x must be large."""
    mu = 4.0 * order * order
    term = 1.0
    total = 1.0
    prev = math.inf
    for k in range(1, precision.max_terms + 1):
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) > prev:
            break
        total += term
        prev = abs(term)
        if abs(term) < precision.rel_tol * 1e-2:
            break
    return total / math.sqrt(2.0 * math.pi * x)


def _check_bessel_args(order, x):
    if order not in (0, 1):
        raise SpecialFunctionError(f"only orders 0 and 1 are supported, got {order}")
    _check_finite("x", x)
    if x < 0:
        raise SpecialFunctionError(f"x must be >= 0, got {x}")


def bessel_i_scaled(
    order: int, x: float, precision: Precision = DEFAULT_PRECISION
) -> float:
    """Exponentially scaled e^-x I_v(x) for v in {0, 1}; never overflows."""
    _check_bessel_args(order, x)
    if x < _BESSEL_ASYMPTOTIC_X:
        return _bessel_i_series(order, x, precision) * math.exp(-x)
    return _bessel_i_asymptotic_scaled(order, x, precision)


def bessel_i(order: int, x: float, precision: Precision = DEFAULT_PRECISION) -> float:
    """Modified Bessel function I_v(x) of the first kind, v in {0, 1}."""
    _check_bessel_args(order, x)
    if x < _BESSEL_ASYMPTOTIC_X:
        return _bessel_i_series(order, x, precision)
    scaled = _bessel_i_asymptotic_scaled(order, x, precision)
    log_value = x + math.log(scaled)
    if log_value > _LOG_MAX:
        raise OverflowError(f"I{order}({x}) exceeds the double range")
    return math.exp(log_value)


# -- confluent hypergeometric 1F1(a; 1; x) --------------------------------------


def _check_hyp_args(a, x):
    _check_finite("a", a)
    _check_finite("x", x)
    if a <= 0:
        raise SpecialFunctionError(f"a must be > 0, got {a}")
    if x < 0:
        raise SpecialFunctionError(f"x must be >= 0, got {x}")


def _log_hyp1f1_b1_series(a, x, precision):
    """log 1F1(a; 1; x) by direct summation; terms are all positive."""
    # term_{k+1} / term_k = (a + k) x / (k + 1)^2
    term = 1.0
    total = 1.0
    log_shift = 0.0
    for k in range(precision.max_terms):
        term *= (a + k) * x / ((k + 1) * (k + 1))
        total += term
        if total > 1e280:
            # rescale to keep the running sum finite
            log_shift += math.log(total)
            term /= total
            total = 1.0
        if term < total * precision.rel_tol * 1e-2 and (k + 1) > x:
            return log_shift + math.log(total)
    raise ConvergenceError(f"1F1({a}; 1; {x}) series did not converge")


def _log_hyp1f1_b1_asymptotic(a, x, precision):
    """log 1F1(a; 1; x) for large x:

    Gamma(1)/Gamma(a) e^x x^(a-1) sum_s (1-a)_s (1-a)_s / (s! x^s).
    """
    c = 1.0 - a
    term = 1.0
    total = 1.0
    prev = math.inf
    for s in range(precision.max_terms):
        term *= (c + s) * (c + s) / ((s + 1) * x)
        if term == 0.0 or abs(term) > prev:
            break
        total += term
        prev = abs(term)
        if abs(term) < precision.rel_tol * 1e-2:
            break
    return x + (a - 1.0) * math.log(x) - math.lgamma(a) + math.log(total)


def _log_hyp1f1_b1(a, x, precision):
    if x == 0.0:
        return 0.0
    if x < _HYP_ASYMPTOTIC_X:
        return _log_hyp1f1_b1_series(a, x, precision)
    return _log_hyp1f1_b1_asymptotic(a, x, precision)


def hyp1f1_b1(a: float, x: float, precision: Precision = DEFAULT_PRECISION) -> float:
    """Kummer's function 1F1(a; 1; x) for a > 0, x >= 0."""
    _check_hyp_args(a, x)
    log_value = _log_hyp1f1_b1(a, x, precision)
    if log_value > _LOG_MAX:
        raise OverflowError(f"1F1({a}; 1; {x}) exceeds the double range")
    return math.exp(log_value)


def hyp1f1_b1_scaled(
    a: float, x: float, precision: Precision = DEFAULT_PRECISION
) -> float:
    """e^-x 1F1(a; 1; x); stays finite where the unscaled value overflows."""
    _check_hyp_args(a, x)
    return math.exp(_log_hyp1f1_b1(a, x, precision) - x)
