"""Moments and moment generating function of the Brownian excursion area.

The Wright constants are ``w_l = E[L**l] / l!`` where ``L`` is the area under a
normalized Brownian excursion. They are produced by Takacs' recurrence

    K_0 = -1/2
    K_k = (3k - 4)/4 * K_{k-1} + sum_{j=1}^{k-1} K_j K_{k-j}
    E[L**k] = 4 sqrt(pi) 2**(-k/2) k! K_k / Gamma((3k - 1)/2)

evaluated in log space, so the table can be pushed far past the point where
``w_l`` underflows a double.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.special import gammaln, logsumexp

from .errors import PrecisionError

#: Largest coefficient index ever tabulated.
MAX_ORDER = 4000
#: Largest argument for which :func:`psi` returns a finite double.
PSI_MAX_ARGUMENT = 120.0

_LOG_4_SQRT_PI = math.log(4.0 * math.sqrt(math.pi))


@lru_cache(maxsize=1)
def _log_wright_table() -> np.ndarray:
    lk = np.empty(MAX_ORDER + 1)
    lw = np.empty(MAX_ORDER + 1)
    lw[0] = 0.0
    lk[0] = np.nan  # K_0 < 0, never used in log form
    lk[1] = math.log(0.125)
    for k in range(1, MAX_ORDER + 1):
        if k > 1:
            conv = logsumexp(lk[1:k] + lk[k - 1:0:-1])
            lk[k] = np.logaddexp(math.log((3 * k - 4) / 4.0) + lk[k - 1], conv)
        lw[k] = _LOG_4_SQRT_PI - 0.5 * k * math.log(2.0) + lk[k] - gammaln((3 * k - 1) / 2.0)
    lw.setflags(write=False)
    return lw


@lru_cache(maxsize=1)
def _log_ratio_table() -> np.ndarray:
    # log(w_{l+1}/w_l); the tail bound below relies on this being nonincreasing.
    r = np.diff(_log_wright_table())
    if np.any(np.diff(r) > 1e-12):
        raise RuntimeError("Wright coefficient ratios are not monotone; tail bound invalid")
    r.setflags(write=False)
    return r


@dataclass(frozen=True)
class WrightCoefficients:
    """Table ``(w_0, ..., w_L)``.

    ``values`` underflows to zero beyond roughly ``l = 330``; ``log_values`` does not.
    """

    log_values: np.ndarray
    order: int

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    @property
    def moments(self) -> np.ndarray:
        """``E[L**l]`` for ``l = 0..order``."""
        ell = np.arange(self.order + 1)
        return np.exp(self.log_values + gammaln(ell + 1))

    def __len__(self):
        return self.order + 1

    def __getitem__(self, ell):
        return self.values[ell]


def wright_coefficients(order: int) -> WrightCoefficients:
    """Return the Wright constants ``w_0 .. w_order``."""
    if not (0 <= int(order) <= MAX_ORDER) or int(order) != order:
        raise ValueError(f"order must be an integer in [0, {MAX_ORDER}], got {order!r}")
    order = int(order)
    return WrightCoefficients(_log_wright_table()[: order + 1].copy(), order)


@dataclass(frozen=True)
class MgfEvaluation:
    argument: float
    value: float
    truncation_order: int
    tail_bound: float


def _log_terms(t: float) -> np.ndarray:
    ell = np.arange(MAX_ORDER + 1)
    with np.errstate(divide="ignore"):
        return _log_wright_table() + ell * math.log(t)


def _truncation(t: float, log_tol: float):
    """Smallest order whose geometric tail bound is below ``exp(log_tol)``.

    Returns ``(order, log_tail_bound, log_terms)``; ``order`` is ``None`` when no
    admissible order exists inside the table.
    """
    lt = _log_terms(t)
    lr = _log_ratio_table() + math.log(t)  # lr[l] = log(term_{l+1}/term_l)
    # tail after order L: term_{L+1} / (1 - rho), rho = term_{L+2}/term_{L+1}
    rho = lr[1:]  # rho for L = 0 .. MAX_ORDER-2
    with np.errstate(invalid="ignore", divide="ignore"):
        log_tail = np.where(rho < 0.0, lt[1:-1] - np.log1p(-np.exp(rho)), np.inf)
    ok = np.flatnonzero(log_tail <= log_tol)
    if ok.size == 0:
        finite = log_tail[np.isfinite(log_tail)]
        return None, (finite.min() if finite.size else np.inf), lt
    order = int(ok[0])
    return order, float(log_tail[order]), lt


def psi(t: float, tol: float = 1e-12, *, relative: bool = False) -> MgfEvaluation:
    """Evaluate ``Psi(t) = E exp(t L) = sum_l w_l t**l``.

    The series is truncated at the first order whose certified tail (a geometric
    majorant built from the nonincreasing coefficient ratios) is at most ``tol``;
    with ``relative=True`` the bound is ``tol * Psi(t)``.
    """
    t = float(t)
    if not (t >= 0.0) or not math.isfinite(t):
        raise ValueError(f"t must be a finite nonnegative number, got {t!r}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if t > PSI_MAX_ARGUMENT:
        raise ValueError(f"t={t} overflows double precision (limit {PSI_MAX_ARGUMENT})")
    if t == 0.0:
        return MgfEvaluation(0.0, 1.0, 0, 0.0)
    log_tol = math.log(tol)
    if relative:
        # log Psi >= max log-term; bound the tail against that lower estimate first
        log_tol += float(np.max(_log_terms(t)))
    order, log_tail, lt = _truncation(t, log_tol)
    if order is None:
        raise PrecisionError(
            f"cannot certify Psi({t}) to {tol:g} within order {MAX_ORDER}",
            best_bound=math.exp(log_tail) if np.isfinite(log_tail) else math.inf,
        )
    value = math.fsum(np.exp(lt[: order + 1]))
    return MgfEvaluation(t, value, order, math.exp(log_tail))


@lru_cache(maxsize=4096)
def _order_for(t_bucket: float, log_rtol: float) -> int:
    lt = _log_terms(t_bucket)
    order, _, _ = _truncation(t_bucket, log_rtol + float(np.max(lt)))
    if order is None:
        raise PrecisionError(
            f"cannot certify Psi({t_bucket}) to relative {math.exp(log_rtol):g}",
        )
    return order


@lru_cache(maxsize=4096)
def _scaled_coefficients(c: float, order: int):
    # w_l c**l / exp(shift): the largest scaled coefficient is 1
    logc = _log_wright_table()[: order + 1] + np.arange(order + 1) * math.log(c)
    shift = float(logc.max())
    return np.exp(logc - shift), shift


@njit(cache=True)
def _horner(coeffs, y):
    out = np.empty(y.size)
    n = coeffs.size
    for i in range(y.size):
        acc = 0.0
        yi = y[i]
        for k in range(n - 1, -1, -1):
            acc = acc * yi + coeffs[k]
        out[i] = acc
    return out


def log_psi(t, rtol: float = 1e-14) -> np.ndarray:
    """Vectorized ``log Psi(t)`` with relative truncation error at most ``rtol``.

    Works beyond :data:`PSI_MAX_ARGUMENT` as long as the coefficient table is
    long enough (up to ``t`` of roughly 180).
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    if t.size == 0:
        return out
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("t must be finite and nonnegative")
    flat_t = t.ravel()
    flat_out = out.ravel()
    # the relative tail grows with t, so the order for a bucket's upper edge serves the bucket
    buckets = np.ceil(flat_t * 4.0) / 4.0
    log_rtol = math.log(rtol)
    for bucket in np.unique(buckets[flat_t > 0]):
        idx = np.flatnonzero(buckets == bucket)
        order = _order_for(float(bucket), log_rtol)
        coeffs, shift = _scaled_coefficients(float(bucket), order)
        flat_out[idx] = shift + np.log(_horner(coeffs, flat_t[idx] / bucket))
    return flat_out.reshape(t.shape)


def psi_asymptotic(t):
    """Leading large-``t`` behaviour ``t**2/2 * exp(t**2/24)``."""
    t = np.asarray(t, dtype=float)
    return 0.5 * t * t * np.exp(t * t / 24.0)
