"""Total progeny of a Galton-Watson tree with Poisson offspring.

The progeny ``T`` of a ``Po(alpha)`` tree has the Borel law
``P(T = k) = (k alpha)**(k-1) exp(-k alpha) / k!``; for ``alpha > 1`` the
remaining mass ``q`` sits at ``T = inf`` and solves ``1 - q = exp(-alpha q)``.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, zeta

from .moments import Estimate
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_CHUNK = 1 << 20


def borel_pmf(k, mean: float):
    """``P(T = k)`` for Poisson(``mean``) offspring, evaluated through logs."""
    if not mean > 0:
        raise ValueError("mean must be positive")
    k = np.asarray(k)
    if np.any(k < 1) or np.any(k != np.floor(k)):
        raise ValueError("k must be a positive integer")
    kf = k.astype(float)
    logp = (kf - 1.0) * np.log(kf * mean) - kf * mean - gammaln(kf + 1.0)
    out = np.exp(logp)
    return float(out) if out.ndim == 0 else out


def borel_cdf(k_max: int, mean: float) -> float:
    """``P(T <= k_max)``, summed in chunks with compensated addition."""
    k_max = int(k_max)
    if k_max < 1:
        return 0.0
    parts = []
    for start in range(1, k_max + 1, _CHUNK):
        ks = np.arange(start, min(start + _CHUNK, k_max + 1))
        parts.append(math.fsum(borel_pmf(ks, mean)))
    return math.fsum(parts)


class MassCheck(NamedTuple):
    partial: float
    tail_low: float
    tail_high: float

    @property
    def total(self) -> float:
        return self.partial + 0.5 * (self.tail_low + self.tail_high)


def borel_mass(mean: float, k_max: int = 10 ** 6) -> MassCheck:
    """Finite-``k`` mass of the Borel law: the sum to ``k_max`` plus a bracketed tail.

    Writing ``k**(k-1)/k! = exp(k - theta_k) / (sqrt(2 pi) k**1.5)`` with
    ``1/(12k+1) < theta_k < 1/(12k)``, each tail term is ``r**k exp(-theta_k) /
    (mean sqrt(2 pi) k**1.5)`` with ``r = mean exp(1 - mean) <= 1``, and the
    tail of ``k**-1.5`` is a Hurwitz zeta value.
    """
    partial = borel_cdf(k_max, mean)
    r_log = math.log(mean) + 1.0 - mean  # <= 0
    z15 = float(zeta(1.5, k_max + 1))
    z25 = float(zeta(2.5, k_max + 1))
    high = math.exp((k_max + 1) * r_log) * z15 * _INV_SQRT_2PI / mean
    if r_log == 0.0:
        low = (z15 - z25 / 12.0) * _INV_SQRT_2PI / mean
    else:
        low = 0.0
    return MassCheck(partial, low, high)


def survival_probability(alpha: float) -> float:
    """Largest root ``q in [0, 1)`` of ``1 - q = exp(-alpha q)``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha <= 1.0:
        return 0.0

    def h(q):
        return -math.expm1(-alpha * q) - q

    # h > 0 on (0, q*) and h(1) < 0; h((alpha - 1)/alpha**2) > 0 keeps the bracket off q = 0
    lo = (alpha - 1.0) / (alpha * alpha)
    return brentq(h, lo, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)


def _ue_integrand_large(lam, eps):
    # x = eps / v**2 maps [eps, inf) to (0, 1]
    c = 0.5 * lam * lam * eps
    scale = 2.0 * _INV_SQRT_2PI / math.sqrt(eps)

    def f(v):
        with np.errstate(divide="ignore", over="ignore"):
            return scale * np.exp(-c / (v * v))
    return f


def _ue_integrand_small(lam):
    # x = u**2 on [0, eps]: (2 pi)**-1/2 x**-3/2 (1 - exp(-lam**2 x/2)) dx = 2 (2 pi)**-1/2 u**-2 (...) du
    c = 0.5 * lam * lam

    def f(u):
        u2 = u * u
        with np.errstate(invalid="ignore", divide="ignore"):
            out = 2.0 * _INV_SQRT_2PI * -np.expm1(-c * u2) / u2
        return np.where(u2 > 0, out, 2.0 * _INV_SQRT_2PI * c)
    return f


def u_eps(lam: float, eps: float, spec: QuadratureSpec = DEFAULT_SPEC, form: str = "large") -> Estimate:
    """Limit of ``n**(1/3) P(T >= eps n**(2/3))`` for offspring mean ``1 + lam n**(-1/3)``.

    ``form="large"``: ``2 max(lam, 0) + int_eps^inf (2 pi)**-1/2 x**-3/2 exp(-lam**2 x/2) dx``.
    ``form="small"``: ``(2/pi)**1/2 eps**-1/2 + lam + int_0^eps (2 pi)**-1/2 x**-3/2 (1 - exp(-lam**2 x/2)) dx``.
    """
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError("eps must be positive")
    lam = float(lam)
    if form == "large":
        res = integrate(_ue_integrand_large(lam, eps), 0.0, 1.0, spec)
        return Estimate(2.0 * max(lam, 0.0) + res.value, res.error)
    if form == "small":
        res = integrate(_ue_integrand_small(lam), 0.0, math.sqrt(eps), spec)
        lead = math.sqrt(2.0 / math.pi) / math.sqrt(eps)
        return Estimate(lead + lam + res.value, res.error)
    raise ValueError(f"unknown form {form!r}")


def u_eps_forms(lam: float, eps: float, spec: QuadratureSpec = DEFAULT_SPEC):
    """Both representations of ``u_eps``; they must agree within their combined error."""
    return u_eps(lam, eps, spec, "large"), u_eps(lam, eps, spec, "small")


def _threshold(eps: float, n: int) -> int:
    # np.cbrt(n)**2 is exact for perfect cubes, unlike n**(2/3)
    return max(1, math.ceil(eps * float(np.cbrt(n)) ** 2))


class ProgenyTail(NamedTuple):
    finite: float  # P(threshold <= T < inf)
    survival: float  # P(T = inf)

    @property
    def total(self) -> float:
        return self.finite + self.survival


def progeny_tail(lam: float, eps: float, n: int) -> ProgenyTail:
    """``P(T >= eps n**(2/3))`` split into finite and infinite progeny, offspring mean ``1 + lam n**(-1/3)``.

    The total is ``1 - P(T < threshold)``, which already includes the mass at
    infinity, so no truncated upper sum is needed.
    """
    if int(n) != n or n < 1000:
        raise ValueError("n must be an integer >= 1000")
    if not eps > 0:
        raise ValueError("eps must be positive")
    mean = 1.0 + lam / float(np.cbrt(n))
    if not mean > 0:
        raise ValueError("offspring mean must be positive")
    k0 = _threshold(eps, int(n))
    total = 1.0 - borel_cdf(k0 - 1, mean)
    q = survival_probability(mean)
    return ProgenyTail(max(total - q, 0.0), q)


def progeny_tail_scaled(lam: float, eps: float, n: int) -> float:
    """``n**(1/3) P(T(Po(1 + lam n**(-1/3))) >= eps n**(2/3))``."""
    return float(np.cbrt(n)) * progeny_tail(lam, eps, n).total
