"""Transmit-power minimization of the EE outage and element-count search.

The outage is g(h(p)) with h strictly convex in p and g a CDF, so it is
strictly pseudo-convex on (0, P_max): a single line search finds the global
minimum. Full SQP is unnecessary for a one-dimensional box constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel
from .outage import EeThreshold, SystemConfig, op_ee_gamma

__all__ = [
    "OptimizationProblem",
    "Optimum",
    "InfeasibleError",
    "NotAchievableError",
    "objective",
    "minimize_op",
    "required_elements",
    "derivative_sign_changes",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_COARSE_POINTS = 256
_SATURATED = 1.0 - 1e-15


class InfeasibleError(ArithmeticError):
    """The objective is saturated at 1 over the whole feasible interval."""


class NotAchievableError(ValueError):
    """No element count up to n_max reaches the requested outage target."""


@dataclass(frozen=True)
class OptimizationProblem:
    config: SystemConfig  # p_tx is ignored
    model: ChannelModel
    eta: EeThreshold
    p_max: float
    p_min: float = 1e-6

    def __post_init__(self):
        if not (0.0 < self.p_min < self.p_max):
            raise ValueError(f"need 0 < p_min < p_max, got {self.p_min}, {self.p_max}")


@dataclass(frozen=True)
class Optimum:
    p_star: float
    op_star: float
    iterations: int
    bracket_width: float
    at_boundary: bool = False
    polished: bool = field(default=False, compare=False)


def objective(problem: OptimizationProblem, p: float) -> float:
    """EE outage at transmit power p; the same number op_ee_gamma returns."""
    if not p > 0:
        raise ValueError(f"transmit power must be > 0, got {p}")
    return op_ee_gamma(problem.config.with_power(p), problem.model, problem.eta)


def _golden(f, lo, hi, tol):
    """Golden-section search on [lo, hi]; returns (x, f(x), iterations, width)."""
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    it = 0
    while hi - lo > tol:
        it += 1
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
    x = c if fc <= fd else d
    return x, min(fc, fd), it, hi - lo


def _central_derivative(f, p):
    h = max(1e-9, 1e-6 * p)
    return (f(p + h) - f(p - h)) / (2.0 * h)


def _polish(f, x, fx, lo, hi, max_iter=60):
    """Bisect on the sign of the numerical derivative inside [lo, hi].

    Safeguarded: only used when the end-point derivatives bracket a root,
    and only accepted when it does not raise the objective.
    """
    if lo <= 0:
        return x, fx, 0, False
    dlo, dhi = _central_derivative(f, lo), _central_derivative(f, hi)
    if not (dlo < 0 < dhi):
        return x, fx, 0, False
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        dm = _central_derivative(f, mid)
        if dm == 0:
            lo = hi = mid
            break
        if dm < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * mid:
            break
    cand = 0.5 * (lo + hi)
    fcand = f(cand)
    if fcand <= fx:
        return cand, fcand, it, True
    return x, fx, it, False


def minimize_op(problem: OptimizationProblem, bracket: tuple | None = None) -> Optimum:
    """Global minimizer of the EE outage over p in [p_min, p_max].

    A log-spaced scan locates the basin, golden-section search narrows it to
    1e-8 * p_max, and a derivative bisection polishes the result. An optimum
    on the p_max edge is returned with ``at_boundary=True``.
    """
    lo_bound, hi_bound = problem.p_min, problem.p_max
    if bracket is not None:
        lo_bound = max(lo_bound, bracket[0])
        hi_bound = min(hi_bound, bracket[1])
        if not lo_bound < hi_bound:
            raise ValueError(f"empty bracket {bracket} within [{problem.p_min}, {problem.p_max}]")

    def f(p):
        return objective(problem, p)

    grid = np.geomspace(lo_bound, hi_bound, _COARSE_POINTS)
    values = np.array([f(p) for p in grid])
    if np.all(values >= _SATURATED):
        raise InfeasibleError(
            f"outage is 1 everywhere on [{lo_bound:.3g}, {hi_bound:.3g}] W"
        )
    # first index of the minimum: plateaus at 1 are on both flanks, never at the bottom
    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    tol = 1e-8 * problem.p_max

    x, fx, iterations, width = _golden(f, lo, hi, tol)
    iterations += len(grid)

    x, fx, extra, polished = _polish(f, x, fx, max(lo_bound, x - width), min(hi_bound, x + width))
    iterations += extra

    # the interior search cannot return the end points themselves
    for edge in (lo_bound, hi_bound):
        fe = f(edge)
        if fe < fx:
            x, fx = edge, fe
    at_boundary = x >= hi_bound - tol
    return Optimum(
        p_star=float(x),
        op_star=float(fx),
        iterations=iterations,
        bracket_width=float(width),
        at_boundary=bool(at_boundary),
        polished=polished,
    )


def derivative_sign_changes(values) -> int:
    """Number of sign flips in the forward differences of `values`, ignoring flat steps."""
    diffs = np.diff(np.asarray(values, dtype=float))
    signs = np.sign(diffs)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def required_elements(
    config: SystemConfig,
    model: ChannelModel,
    eta: EeThreshold,
    p: float,
    op_target: float,
    n_max: int,
) -> int:
    """Smallest N <= n_max whose Gamma-approximated outage is <= op_target.

    The outage is nonincreasing in N, so an exponential bracket followed by
    binary search suffices.
    """
    if not 0.0 < op_target <= 1.0:
        raise ValueError(f"op_target must lie in (0, 1], got {op_target}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    base = config.with_power(p)

    def ok(n):
        return op_ee_gamma(base.with_elements(n), model, eta) <= op_target

    if ok(1):
        return 1
    lo, hi = 1, 2
    while not ok(min(hi, n_max)):
        if hi >= n_max:
            raise NotAchievableError(
                f"outage target {op_target:g} not reached with N <= {n_max}"
            )
        lo, hi = hi, 2 * hi
    hi = min(hi, n_max)
    # invariant: ok(hi) and not ok(lo)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
