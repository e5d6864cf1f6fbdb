"""Largest points of the limiting process and their limit laws.

Counts are recovered from factorial moments through the alternating series

    P(N = m) = sum_{j >= m} (-1)**(j - m) C(j, m) M_j / j!

whose partial sums are alternately upper and lower bounds (Bonferroni), so
every probability comes with a two-sided bracket.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm

from .errors import SeriesError
from .intensity import IntensityParams, intensity_total
from .moments import (
    MAX_FACTORIAL_ORDER,
    Estimate,
    choose_cutoff,
    factorial_moments,
    tail_bound,
)
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate

#: A bracket wider than this is reported as a failure.
MAX_BRACKET_WIDTH = 1e-3


class ProbabilityBound(NamedTuple):
    value: float
    bound: float

    @property
    def bracket(self):
        return (max(0.0, self.value - self.bound), min(1.0, self.value + self.bound))


def _stages(order_limit):
    return sorted({min(k, order_limit) for k in (4, 8, order_limit)})


def count_probability(lam: float, a: float, m: int, spec: QuadratureSpec = DEFAULT_SPEC, *,
                      width_tol: float = 1e-10, order_limit: int = MAX_FACTORIAL_ORDER) -> ProbabilityBound:
    """``P(N = m)`` for ``N`` the number of points in ``(a, inf)``.

    The series is summed until the Bonferroni bracket (widened by the
    factorial-moment error bounds) is narrower than ``width_tol``, trying
    orders 4, 8 and ``order_limit`` in turn. A bracket still wider than
    :data:`MAX_BRACKET_WIDTH` at ``order_limit`` raises :class:`SeriesError`.
    """
    if int(m) != m or m < 0:
        raise ValueError("m must be a nonnegative integer")
    m = int(m)
    if order_limit < m + 1:
        raise ValueError("order_limit must exceed m")
    lower, upper = 0.0, 1.0
    for K in _stages(order_limit):
        if K < m + 1:
            continue
        table = factorial_moments(lam, a, K, spec, order_limit=max(order_limit, MAX_FACTORIAL_ORDER))
        lower, upper, err = _bracket(table.values, table.certified_abs_err, m)
        if upper - lower + 2 * err <= width_tol:
            break
    lo = max(0.0, lower - err)
    hi = min(1.0, upper + err)
    if hi - lo > MAX_BRACKET_WIDTH:
        raise SeriesError(
            f"alternating series for P(N={m}) on ({a:g}, inf) at lam={lam:g} only bracketed to "
            f"[{lo:.6g}, {hi:.6g}] with {order_limit} factorial moments",
            bracket=(lo, hi), best_bound=0.5 * (hi - lo), estimate=0.5 * (lo + hi),
        )
    value = min(1.0, max(0.0, 0.5 * (lower + upper)))
    return ProbabilityBound(value, 0.5 * (upper - lower) + err)


def _bracket(values, errors, m):
    j = np.arange(m, len(values))
    log_binom_fact = gammaln(j + 1) - gammaln(m + 1) - gammaln(j - m + 1) - gammaln(j + 1)
    weight = np.exp(log_binom_fact)  # C(j, m) / j!
    terms = weight * values[m:]
    errs = weight * errors[m:]
    lower, upper = -math.inf, math.inf
    partial = 0.0
    for i, term in enumerate(terms):
        partial += term if i % 2 == 0 else -term
        if i % 2 == 0:
            upper = min(upper, partial)
        else:
            lower = max(lower, partial)
    lower = max(lower, 0.0)
    upper = min(upper, 1.0)
    if upper < lower:  # rounding only; collapse onto the midpoint
        mid = 0.5 * (upper + lower)
        lower = upper = mid
    return lower, upper, float(np.sum(errs))


def void_probability(lam: float, a: float, spec: QuadratureSpec = DEFAULT_SPEC, **kw) -> ProbabilityBound:
    """Probability that no point exceeds ``a``."""
    if not a > 0:
        raise ValueError("a must be positive")
    return count_probability(lam, a, 0, spec, **kw)


def largest_cdf(x: float, lam: float, spec: QuadratureSpec = DEFAULT_SPEC, **kw) -> Estimate:
    """``P(xi_1 <= x)``. All points are positive, so the value is 0 for ``x <= 0``."""
    if x <= 0:
        return Estimate(0.0, 0.0)
    res = void_probability(lam, x, spec, **kw)
    return Estimate(res.value, res.bound)


def kth_largest_cdf(x: float, k: int, lam: float, spec: QuadratureSpec = DEFAULT_SPEC, **kw) -> Estimate:
    """``P(xi_k <= x) = P(at most k - 1 points above x)``."""
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    if x <= 0:
        return Estimate(0.0, 0.0)
    total, bound = 0.0, 0.0
    for m in range(int(k)):
        res = count_probability(lam, x, m, spec, **kw)
        total += res.value
        bound += res.bound
    return Estimate(min(total, 1.0), bound)


def kth_largest_density(x: float, k: int, lam: float, spec: QuadratureSpec = DEFAULT_SPEC, **kw) -> Estimate:
    """Density of the k-th largest point: ``P(N^{lam-x}(x, inf) = k - 1) * Lambda^lam(x)``."""
    if not x > 0:
        raise ValueError("x must be positive")
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    lam_x = intensity_total(x, IntensityParams(lam))
    res = count_probability(lam - x, x, int(k) - 1, spec, **kw)
    return Estimate(res.value * lam_x, res.bound * lam_x)


def density_mass(k: int, lam: float, lower: float, spec: QuadratureSpec = DEFAULT_SPEC,
                 tol: float = 1e-6, **kw) -> Estimate:
    """``int_lower^inf h_k(x) dx`` by adaptive quadrature of the density, tail certified."""
    X = choose_cutoff(float(max(lam, 0.0)), 0.0, tol / 10.0, float(lower))
    tail = tail_bound(X, max(lam, 0.0), 0.0)  # h_k <= Lambda

    def f(xs):
        return np.array([float(kth_largest_density(float(x), k, lam, spec, **kw)) for x in xs])

    qspec = QuadratureSpec(abs_tol=tol, rel_tol=tol, max_subdivisions=200)
    res = integrate(f, lower, X, qspec, initial_panels=2)
    # pointwise density bounds, integrated with their largest value on a coarse grid
    worst = _worst_density_error(k, lam, lower, X, spec, **kw)
    return Estimate(res.value, res.error + tail + worst * (X - lower))


def _worst_density_error(k, lam, lower, X, spec, **kw):
    grid = np.linspace(lower, X, 9)
    return max(kth_largest_density(float(x), k, lam, spec, **kw).error for x in grid)


# -- limit laws --------------------------------------------------------------

@dataclass(frozen=True)
class ExtremeValueParams:
    """Centering for the largest point as ``lam -> -inf``: ``(lam**2/2) xi_1 - a_lam``."""

    lam: float
    a_lambda: float

    @property
    def scale(self) -> float:
        return 2.0 / self.lam ** 2

    def location(self, s):
        """Point ``x`` whose standardized value is ``s``: ``2 lam**-2 (a_lam + s)``."""
        return self.scale * (self.a_lambda + np.asarray(s, dtype=float))

    def standardize(self, x):
        return np.asarray(x, dtype=float) / self.scale - self.a_lambda


def gumbel_params(lam: float) -> ExtremeValueParams:
    """``a_lam = 3 ln|lam| - 5/2 ln ln|lam| - 1/2 ln(2**4 3**5 pi)``; needs ``|lam| > e``."""
    L = abs(float(lam))
    if not L > math.e:
        raise ValueError("|lam| must exceed e")
    a = 3.0 * math.log(L) - 2.5 * math.log(math.log(L)) - 0.5 * math.log(2 ** 4 * 3 ** 5 * math.pi)
    return ExtremeValueParams(float(lam), a)


def gumbel_cdf(s):
    out = np.exp(-np.exp(-np.asarray(s, dtype=float)))
    return float(out) if out.ndim == 0 else out


def kth_record_cdf(s, i: int):
    """``sum_{j < i} exp(-j s) / j! * exp(-exp(-s))``: limit law of the i-th largest point."""
    if int(i) != i or i < 1:
        raise ValueError("i must be a positive integer")
    s = np.asarray(s, dtype=float)
    j = np.arange(int(i)).reshape((-1,) + (1,) * s.ndim)
    logs = -j * s - np.exp(-s) - gammaln(j + 1)
    out = np.minimum(np.exp(logs).sum(axis=0), 1.0)
    return float(out) if out.ndim == 0 else out


def normal_approx_params(lam: float):
    """Mean and variance of the normal law approximating ``xi_1`` for large positive ``lam``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    return 2.0 * lam, 2.0 / lam


def normal_cdf(x, lam: float):
    mean, var = normal_approx_params(lam)
    return norm.cdf(x, loc=mean, scale=math.sqrt(var))
