"""Moment integrals of the limiting point process.

Every semi-infinite integral is split at a cutoff ``X``. Quadrature covers
``[a, X]`` and the remainder is bounded with the envelope

    Lambda^mu(x) <= (2 pi)**-1/2 * kappa * x**-5/2 * (1 + x**3) * exp(-x (x - 2 lam)**2 / 8)

valid for all ``mu <= lam`` and ``x >= max(2 lam, 1)``. ``kappa`` bounds
``Psi(t) exp(-t**2/24) / (1 + t**2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .errors import PrecisionError
from .excursion_mgf import _log_wright_table, log_psi, psi
from .intensity import (
    MAX_X,
    IntensityParams,
    drift_F,
    intensity_label,
    intensity_total,
    log_psi_part,
    log_shift_ratio,
)
from .quadrature import DEFAULT_SPEC, QuadratureSpec, QuadResult, integrate

__all__ = [
    "Estimate",
    "QuadratureSpec",
    "QuadResult",
    "FactorialMomentTable",
    "integrate",
    "tail_bound",
    "choose_cutoff",
    "expected_weight",
    "weight_variance",
    "expected_count",
    "count_variance",
    "power_moment",
    "factorial_moments",
    "weight_identity_residual",
    "cubic_identity_residual",
    "unicyclic_weight",
    "window_label_law",
    "weight_mean_asymptotic",
    "weight_variance_asymptotic",
    "count_mean_asymptotic",
    "count_variance_asymptotic",
]

#: Upper bound for Psi(t) exp(-t**2/24) / (1 + t**2) on the supported range (max is about 1.1055).
ENVELOPE_KAPPA = 1.11
#: Largest factorial-moment order accepted by default.
MAX_FACTORIAL_ORDER = 12
#: Hard limit when callers opt into longer series.
EXTENDED_FACTORIAL_ORDER = 60

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class Estimate(float):
    """A float carrying a certified absolute error bound in ``.error``."""

    def __new__(cls, value, error):
        obj = super().__new__(cls, value)
        obj.error = float(error)
        return obj

    def __repr__(self):
        return f"Estimate({float(self)!r}, error={self.error:.3g})"

    def __reduce__(self):
        return (Estimate, (float(self), self.error))


# -- tail control ------------------------------------------------------------

def _exp_tail(cutoff: float, lam: float, m: float) -> float:
    """Bound ``int_X^inf x**m exp(-g(x)) dx`` with ``g(x) = x (x - 2 lam)**2 / 8``.

    Uses convexity of ``g`` past ``4 lam / 3``: ``g(x) >= g(X) + g'(X)(x - X)``,
    and ``(X + u)**m <= X**m exp(m u / X)``. Returns ``inf`` when the bound does
    not apply.
    """
    X = float(cutoff)
    if X <= 0 or X <= 2.0 * lam or X <= 4.0 * lam / 3.0:
        return math.inf
    g = X * (X - 2.0 * lam) ** 2 / 8.0
    slope = (X - 2.0 * lam) * (3.0 * X - 2.0 * lam) / 8.0
    rate = slope - max(m, 0.0) / X
    if rate <= 0:
        return math.inf
    return math.exp(-g + m * math.log(X)) / rate


def tail_bound(cutoff: float, lam: float, power: float = 0.0) -> float:
    """Certified bound on ``int_X^inf x**power Lambda^mu(x) dx`` for every ``mu <= lam``."""
    if cutoff < 1.0:
        return math.inf
    # x**-5/2 (1 + x**3) <= 2 x**1/2 once x >= 1
    return 2.0 * _INV_SQRT_2PI * ENVELOPE_KAPPA * _exp_tail(cutoff, lam, power + 0.5)


@lru_cache(maxsize=512)
def choose_cutoff(lam: float, power: float = 0.0, tol: float = 1e-10, start: float = 0.0) -> float:
    """Smallest ``X >= start`` on a 1/16 grid whose certified tail is ``<= tol``."""
    X = max(1.0, start, 2.0 * lam + 0.25)
    X = math.ceil(X * 16.0) / 16.0
    while X <= MAX_X:
        if tail_bound(X, lam, power) <= tol:
            return X
        X += 0.0625
    raise PrecisionError(
        f"no cutoff below {MAX_X} brings the tail under {tol:g} (lam={lam})",
        best_bound=tail_bound(MAX_X, lam, power),
    )


def _resolve_cutoff(spec: QuadratureSpec, lam: float, power: float, start: float = 0.0):
    if spec.upper_cutoff is not None:
        X = max(spec.upper_cutoff, start)
    else:
        X = choose_cutoff(float(lam), float(power), spec.abs_tol / 10.0, float(start))
    return X, tail_bound(X, lam, power)


def _log_lambda(x, lam, rtol=1e-14):
    return log_psi_part(x, rtol) - drift_F(x, lam)


def _finish(value, err, spec: QuadratureSpec, what: str) -> Estimate:
    tol = max(spec.abs_tol, spec.rel_tol * abs(value))
    if not err <= 1.5 * tol:
        raise PrecisionError(f"{what}: error bound {err:.3g} exceeds tolerance {tol:.3g}",
                             best_bound=err, estimate=value)
    return Estimate(value, err)


def _check_eps(eps):
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError("eps must be positive and finite")


def _transform_for(lo, hi):
    return "log" if lo > 0 and hi / lo > 8.0 else None


def _power_integral(power, lo, params: IntensityParams, spec: QuadratureSpec, what):
    """``int_lo^inf x**power Lambda^lam(x) dx`` with the tail certified."""
    lam = params.lam
    X, tail = _resolve_cutoff(spec, lam, power, start=lo)
    hi = max(X, lo + 2.0)
    tail = min(tail, tail_bound(hi, lam, power))

    def f(x):
        return np.exp(power * np.log(x) + _log_lambda(x, lam, params.psi_tol))

    if lo == 0.0:
        res = integrate(f, 0.0, hi, spec.scaled(0.9), transform="sqrt")
    else:
        res = integrate(f, lo, hi, spec.scaled(0.9), transform=_transform_for(lo, hi))
    return _finish(res.value, res.error + tail, spec, what)


# -- first moments ----------------------------------------------------------

def expected_weight(eps: float, params: IntensityParams, spec: QuadratureSpec = DEFAULT_SPEC) -> Estimate:
    """Mean total weight of the points ``>= eps``: ``int_eps^inf x Lambda(x) dx``."""
    _check_eps(eps)
    return _power_integral(1.0, float(eps), params, spec, "expected_weight")


def expected_count(eps: float, params: IntensityParams, spec: QuadratureSpec = DEFAULT_SPEC) -> Estimate:
    """Mean number of points ``>= eps``."""
    _check_eps(eps)
    return _power_integral(0.0, float(eps), params, spec, "expected_count")


def power_moment(power: float, params: IntensityParams, spec: QuadratureSpec = DEFAULT_SPEC,
                 lower: float = 0.0) -> Estimate:
    """``int_lower^inf x**power Lambda(x) dx``; needs ``power > 3/2`` when ``lower == 0``."""
    if lower == 0.0 and not power > 1.5:
        raise ValueError("the integral diverges at 0 unless power > 3/2")
    if lower < 0:
        raise ValueError("lower must be nonnegative")
    return _power_integral(float(power), float(lower), params, spec, f"power_moment({power})")


# -- variance of the weight ---------------------------------------------------

def _inner_spec(spec: QuadratureSpec) -> QuadratureSpec:
    # inner integrals are controlled in relative terms; the outer pass carries their errors
    return QuadratureSpec(abs_tol=1e-300, rel_tol=spec.rel_tol / 10.0,
                          max_subdivisions=spec.max_subdivisions)


def weight_variance(eps: float, params: IntensityParams, spec: QuadratureSpec = DEFAULT_SPEC,
                    form: str = "small") -> Estimate:
    """Variance of the total weight of the points ``>= eps``.

    ``form="small"`` integrates the difference ``Lambda^lam(y) - Lambda^{lam-x}(y)``
    over ``y < eps``; ``form="large"`` subtracts the same difference integrated
    over ``y >= eps`` from the second moment. Both are exact; they serve as
    cross-checks of each other.
    """
    _check_eps(eps)
    eps = float(eps)
    lam = params.lam
    rtol = params.psi_tol
    ispec = _inner_spec(spec)

    if form == "small":
        def inner(xs):
            def g(y):
                d = log_shift_ratio(xs[None, :], y[:, None], lam)
                w = np.exp(np.log(y) + _log_lambda(y, lam, rtol))
                return w[:, None] * -np.expm1(-d)
            val, err = integrate(g, 0.0, eps, ispec, transform="sqrt")
            return val, err

        # for x >= X >= 2 lam: 0 <= 1 - exp(-D) <= D <= x y (x + eps) / 2, so the inner
        # integral is at most x**2 * int_0^eps y**2 Lambda(y) dy
        c2 = _INV_SQRT_2PI * psi(eps ** 1.5, 1e-12).value * (2.0 / 3.0) * eps ** 1.5
        X, tail3 = _resolve_cutoff(spec, lam, 3.0, start=eps)
        while c2 * tail3 > spec.abs_tol / 10.0 and X < MAX_X:
            X += 0.5
            tail3 = tail_bound(X, lam, 3.0)
        hi = max(X, eps + 2.0)
        outer_tail = c2 * tail_bound(hi, lam, 3.0)
        res = _nested(inner, eps, hi, lam, rtol, spec)
        value, err = res
        return _finish(value, err + outer_tail, spec, "weight_variance")

    if form == "large":
        # difference of two O(1) terms: both are computed to a hundredth of the relative budget
        tight = QuadratureSpec(abs_tol=spec.abs_tol / 4.0, rel_tol=spec.rel_tol / 100.0,
                               max_subdivisions=spec.max_subdivisions)
        ispec = _inner_spec(tight)
        first = _power_integral(2.0, eps, params, tight, "weight_variance")
        mean = expected_weight(eps, params, spec)
        Y, _ = _resolve_cutoff(tight, lam, 1.0, start=eps)
        yhi = max(Y, eps + 2.0)
        ytail = tail_bound(yhi, lam, 1.0)

        def inner(xs):
            def g(y):
                d = log_shift_ratio(xs[None, :], y[:, None], lam)
                w = np.exp(np.log(y) + _log_lambda(y, lam, rtol))
                return w[:, None] * -np.expm1(-d)
            val, err = integrate(g, eps, yhi, ispec, transform=_transform_for(eps, yhi))
            return val, err + ytail

        # for x >= X >= 2 lam the inner integral is at most the mean weight
        X, t1 = _resolve_cutoff(tight, lam, 1.0, start=eps)
        while (float(mean) + mean.error) * t1 > tight.abs_tol / 10.0 and X < MAX_X:
            X += 0.5
            t1 = tail_bound(X, lam, 1.0)
        hi = max(X, eps + 2.0)
        outer_tail = (float(mean) + mean.error) * tail_bound(hi, lam, 1.0)
        value, err = _nested(inner, eps, hi, lam, rtol, tight)
        return _finish(float(first) - value, first.error + err + outer_tail, spec, "weight_variance")

    raise ValueError(f"unknown form {form!r}")


def _nested(inner, lo, hi, lam, rtol, spec: QuadratureSpec):
    """``int_lo^hi x Lambda(x) I(x) dx`` where ``inner`` returns ``(I, err_I)`` on a node vector."""

    def outer(x):
        val, err = inner(x)
        w = np.exp(np.log(x) + _log_lambda(x, lam, rtol))
        return np.stack([w * val, w * err], axis=1)

    vals, errs = integrate(outer, lo, hi, _OuterSpec.of(spec), transform=_transform_for(lo, hi))
    return float(vals[0]), float(errs[0] + abs(vals[1]) + errs[1])


class _OuterSpec:
    @staticmethod
    def of(spec: QuadratureSpec) -> QuadratureSpec:
        # the second component (propagated inner error) only needs a loose estimate
        return QuadratureSpec(abs_tol=spec.abs_tol * 0.45, rel_tol=spec.rel_tol * 0.45,
                              max_subdivisions=spec.max_subdivisions)


# -- identities --------------------------------------------------------------

def weight_identity_residual(lam: float, spec: QuadratureSpec = DEFAULT_SPEC,
                             psi_tol: float = 1e-14) -> Estimate:
    """``int_0^inf x (Lambda^lam(x) - Lambda^0(x)) dx - lam``; zero in exact arithmetic."""
    lam = float(lam)
    if lam == 0.0:
        return Estimate(0.0, 0.0)
    top = max(lam, 0.0)
    X, tail = _resolve_cutoff(spec, top, 1.0)

    def f(x):
        # Lambda^lam - Lambda^0 = Lambda^0 * expm1(F(x, 0) - F(x, lam))
        return np.exp(np.log(x) + _log_lambda(x, 0.0, psi_tol)) * np.expm1(-0.5 * x * lam * (lam - x))

    # the residual is near zero, so the integral needs absolute control
    aspec = QuadratureSpec(abs_tol=spec.abs_tol * 0.8, rel_tol=1e-300,
                           max_subdivisions=spec.max_subdivisions)
    res = integrate(f, 0.0, X, aspec, transform="sqrt")
    return _finish(res.value - lam, res.error + 2.0 * tail, spec, "weight_identity_residual")


def cubic_identity_residual(lam: float, spec: QuadratureSpec = DEFAULT_SPEC,
                            psi_tol: float = 1e-14) -> Estimate:
    """``int x**3 Lambda - 2 - 2 lam int x**2 Lambda``; zero in exact arithmetic."""
    params = IntensityParams(float(lam), psi_tol)
    p3 = power_moment(3.0, params, spec)
    p2 = power_moment(2.0, params, spec)
    value = float(p3) - 2.0 - 2.0 * lam * float(p2)
    return Estimate(value, p3.error + 2.0 * abs(lam) * p2.error)


def unicyclic_weight(lam: float, spec: QuadratureSpec = DEFAULT_SPEC, w1: float | None = None):
    """Both sides of ``int x Lambda_1(x) dx = 1/4 int exp(-F(x, lam)) dx``.

    ``w1`` overrides the first Wright constant on the left-hand side.
    Returns ``(left, right)`` as :class:`Estimate` values.
    """
    lam = float(lam)
    params = IntensityParams(lam)
    scale = 1.0 if w1 is None else w1 / math.exp(_log_wright_table()[1])
    top = max(lam, 0.0)
    X = choose_cutoff(top, 1.0, spec.abs_tol / 10.0)

    def left_f(x):
        return scale * x * intensity_label(x, 1, params)

    def right_f(x):
        return 0.25 * np.exp(-drift_F(x, lam))

    # x Lambda_1(x) <= x Lambda(x); exp(-F) <= exp(-x (x - 2 lam)**2 / 8)
    left_tail = abs(scale) * tail_bound(X, top, 1.0)
    right_tail = 0.25 * _exp_tail(X, top, 0.0)
    lres = integrate(left_f, 0.0, X, spec.scaled(0.8))
    rres = integrate(right_f, 0.0, X, spec.scaled(0.8))
    left = _finish(lres.value, lres.error + left_tail, spec, "unicyclic_weight")
    right = _finish(rres.value, rres.error + right_tail, spec, "unicyclic_weight")
    return left, right


# -- factorial moments -------------------------------------------------------

@dataclass(frozen=True)
class FactorialMomentTable:
    """``values[k] = E[N (N-1) ... (N-k+1)]`` for ``N`` the number of points in ``(a, inf)``."""

    lam: float
    a: float
    values: np.ndarray
    certified_abs_err: np.ndarray

    @property
    def order(self) -> int:
        return len(self.values) - 1


@dataclass
class _Level:
    """``M_j(nu)`` for ``nu`` in ``[lo, hi]`` as a Chebyshev fit of ``log M_j``; zero below ``lo``."""

    lo: float
    hi: float
    coeffs: np.ndarray | None  # None: identically zero on the range
    rel_err: float
    abs_err: float  # includes the truncation below lo
    peak: float  # max of M_j over the range (with error)

    def __call__(self, nu):
        nu = np.asarray(nu, dtype=float)
        out = np.zeros(nu.shape)
        if self.coeffs is None:
            return out
        inside = nu >= self.lo
        if np.any(nu > self.hi + 1e-9 * (1.0 + abs(self.hi))):
            raise AssertionError("factorial-moment table queried above its range")
        if self.hi == self.lo:
            out[inside] = math.exp(self.coeffs[0])
            return out
        t = (2.0 * nu[inside] - (self.lo + self.hi)) / (self.hi - self.lo)
        out[inside] = np.exp(cheb.chebval(np.minimum(t, 1.0), self.coeffs))
        return out


_TRUNCATION = 1e-40  # mass dropped below the table range, in absolute terms
_INTERP_RTOL = 1e-10
_MAX_NODES = 257


def _lobatto(n):
    return np.cos(np.pi * np.arange(n + 1) / n)[::-1]  # ascending on [-1, 1]


class _MomentBuilder:
    def __init__(self, lam, a, K, spec: QuadratureSpec, psi_tol):
        self.lam = float(lam)
        self.a = float(a)
        self.K = int(K)
        self.psi_tol = psi_tol
        self.qspec = QuadratureSpec(abs_tol=1e-300, rel_tol=min(spec.rel_tol, 1e-10),
                                    max_subdivisions=spec.max_subdivisions)
        # one cutoff serves every shifted parameter mu <= lam
        self.X = max(choose_cutoff(self.lam, 0.0, 1e-18, self.a), self.a + 1.0)
        self.tail = tail_bound(self.X, self.lam, 0.0)
        self.transform = _transform_for(self.a, self.X)

    def _integral(self, nus, inner: _Level | None):
        """``int_a^X Lambda^nu(x) m(nu - x) dx`` for each ``nu`` in ``nus``."""
        nus = np.asarray(nus, dtype=float)
        rtol = self.psi_tol

        def f(x):
            base = log_psi_part(x, rtol)[:, None]
            logv = base - drift_F(x[:, None], nus[None, :])
            v = np.exp(logv)
            if inner is not None:
                v = v * inner(nus[None, :] - x[:, None])
            return v

        vals, errs = integrate(f, self.a, self.X, self.qspec, transform=self.transform)
        return vals, errs

    def m1_zero_bound(self, m1_at_zero):
        """``nu <= 0`` below which ``M_1(nu)**j`` is certainly under the truncation level, per j."""
        # F(x, nu) >= F(x, 0) + a nu**2/2 + a**2 |nu|/2 for x >= a, nu <= 0
        out = []
        for j in range(1, self.K + 1):
            target = math.log(_TRUNCATION) / j - math.log(max(m1_at_zero, 1e-300))
            if target >= 0:
                out.append(0.0)
                continue
            # a nu**2 / 2 + a**2 |nu| / 2 = -target
            A, B, C = self.a / 2.0, self.a ** 2 / 2.0, target
            r = (-B + math.sqrt(B * B - 4 * A * C)) / (2 * A)
            out.append(-r)
        return out

    def build(self):
        K, lam, a, X = self.K, self.lam, self.a, self.X
        m1_zero, m1_zero_err = self._integral([0.0], None)
        m1_zero = float(m1_zero[0] + m1_zero_err[0]) * (1 + 1e-9) + self.tail
        lows = self.m1_zero_bound(m1_zero)
        levels: list[_Level | None] = [None]
        hi = lam - a
        for j in range(1, K):
            # level j is only ever queried at lam - x_1 - ... with K - j further points >= a
            lo = max(lows[j - 1], lam - (K - j) * X)
            if lows[j - 1] >= hi or (levels[j - 1] is not None and levels[j - 1].coeffs is None):
                # M_j <= M_1**j is below the truncation level on the whole range
                levels.append(_Level(hi, hi, None, 0.0, _TRUNCATION, 0.0))
                continue
            levels.append(self._fit_level(levels[j - 1], lo, hi, lows[j - 1]))
        # top values M_j(lam) for j = 1..K in one vector integral
        top_vals = np.empty(K + 1)
        top_err = np.empty(K + 1)
        top_vals[0], top_err[0] = 1.0, 0.0
        rtol = self.psi_tol

        def f(x):
            v = np.exp(log_psi_part(x, rtol) - drift_F(x, lam))
            cols = [v]
            for j in range(1, K):
                cols.append(v * levels[j](lam - x))
            return np.stack(cols, axis=1)

        vals, errs = integrate(f, a, X, self.qspec, transform=self.transform)
        for j in range(1, K + 1):
            inner = levels[j - 1]
            if inner is None:
                inherited = 0.0
                tail = self.tail
            else:
                inherited = inner.rel_err * vals[j - 1] + inner.abs_err * vals[0]
                tail = inner.peak * self.tail
            top_vals[j] = vals[j - 1]
            top_err[j] = errs[j - 1] + inherited + tail
        return top_vals, top_err

    def _fit_level(self, inner: _Level | None, lo, hi, zero_below):
        if inner is None:
            in_rel, in_abs, in_peak = 0.0, 0.0, 1.0
        else:
            in_rel, in_abs, in_peak = inner.rel_err, inner.abs_err, inner.peak
        if hi - lo < 1e-12:
            vals, errs = self._integral([hi], inner)
            v = max(float(vals[0]), 1e-300)
            coeffs = np.array([math.log(v)])
            rel = float(errs[0]) / v + in_rel
            return _Level(hi, hi, coeffs, rel, in_abs * v + self.tail * in_peak + _TRUNCATION,
                          v * (1 + rel))
        n = 16
        t = _lobatto(n)
        raised = False
        for _ in range(8):
            nus = lo + (t + 1.0) * 0.5 * (hi - lo)
            vals, errs = self._integral(nus, inner)
            # M_j increases on nu <= 0; drop the part already below the truncation level
            negligible = np.flatnonzero((vals < _TRUNCATION) & (nus <= 0.0))
            if negligible.size == 0:
                break
            if nus[negligible[-1]] >= hi:
                return _Level(hi, hi, None, 0.0, _TRUNCATION + in_abs * self._m1_peak(), 0.0)
            lo = float(nus[negligible[-1]])
            raised = True
        while True:
            logv = np.log(np.maximum(vals, 1e-300))
            coeffs = cheb.chebfit(t, logv, n)
            n2 = 2 * n
            t2 = _lobatto(n2)
            new_t = t2[1::2]
            new_nus = lo + (new_t + 1.0) * 0.5 * (hi - lo)
            new_vals, new_errs = self._integral(new_nus, inner)
            approx = np.exp(cheb.chebval(new_t, coeffs))
            # absolute slack: truncation below lo and errors inherited in absolute terms
            # (cutting the inner table at its lower end leaves a kink of about this size)
            floor = 4.0 * (_TRUNCATION * max(1.0, float(np.max(vals)))
                           + in_abs * self._m1_peak() + self.tail * in_peak)
            gap = np.abs(approx - new_vals)
            # merge so that the refined fit uses every node computed so far
            merged = np.empty(n2 + 1)
            merged_err = np.empty(n2 + 1)
            merged[0::2], merged[1::2] = vals, new_vals
            merged_err[0::2], merged_err[1::2] = errs, new_errs
            t, vals, errs, n = t2, merged, merged_err, n2
            # values carry the inner level's relative error as noise, which no degree can fit
            ok = np.all(gap <= (_INTERP_RTOL + 2.0 * in_rel) * new_vals + 2.0 * new_errs + floor)
            if ok or n + 1 >= _MAX_NODES:
                break
        if not ok:
            raise PrecisionError(f"factorial-moment table did not resolve on [{lo:.4g}, {hi:.4g}]")
        coeffs = cheb.chebfit(t, np.log(np.maximum(vals, 1e-300)), n)
        quad_rel = float(np.max(errs / np.maximum(vals, 1e-300)))
        rel = in_rel + min(quad_rel, 1.0) + _INTERP_RTOL
        m1_range = self._m1_peak()
        abs_err = (in_abs * m1_range + self.tail * in_peak + floor
                   + (_TRUNCATION if raised or lo >= zero_below - 1e-12 else 0.0))
        peak = float(np.max(vals)) * (1.0 + rel) + abs_err
        return _Level(float(lo), float(hi), coeffs, rel, abs_err, peak)

    def _m1_peak(self):
        # estimate of max M_1(nu) over nu <= lam; only scales the propagated absolute errors.
        # M_1 is increasing on nu <= 0, so the scan starts there.
        if not hasattr(self, "_m1p"):
            grid = np.linspace(min(self.lam, 0.0), self.lam, 17)
            vals, errs = self._integral(grid, None)
            self._m1p = float(np.max(vals + errs)) * 1.01 + self.tail
        return self._m1p


@lru_cache(maxsize=256)
def _factorial_cached(lam, a, K, rel_tol, max_subdivisions, psi_tol):
    spec = QuadratureSpec(rel_tol=rel_tol, max_subdivisions=max_subdivisions)
    vals, errs = _MomentBuilder(lam, a, K, spec, psi_tol).build()
    vals.setflags(write=False)
    errs.setflags(write=False)
    return vals, errs


def factorial_moments(lam: float, a: float, K: int, spec: QuadratureSpec = DEFAULT_SPEC, *,
                      psi_tol: float = 1e-14, order_limit: int = MAX_FACTORIAL_ORDER) -> FactorialMomentTable:
    """Factorial moments ``M_0..M_K`` of the number of points in ``(a, inf)``.

    ``M_k(lam) = int_a^inf Lambda^lam(x) M_{k-1}(lam - x) dx`` with ``M_0 = 1``.
    The inner moments are tabulated once per level as Chebyshev fits of
    ``log M_j`` over the shifted parameter, so the cost grows linearly in ``K``.
    ``order_limit`` may be raised up to :data:`EXTENDED_FACTORIAL_ORDER`.
    """
    if not (a > 0 and math.isfinite(a)):
        raise ValueError("a must be positive")
    if not (1 <= order_limit <= EXTENDED_FACTORIAL_ORDER):
        raise ValueError(f"order_limit must be in [1, {EXTENDED_FACTORIAL_ORDER}]")
    if int(K) != K or not (1 <= K <= order_limit):
        raise ValueError(f"K must be an integer in [1, {order_limit}]")
    vals, errs = _factorial_cached(float(lam), float(a), int(K), float(spec.rel_tol),
                                   int(spec.max_subdivisions), float(psi_tol))
    return FactorialMomentTable(float(lam), float(a), vals.copy(), errs.copy())


def count_variance(eps: float, params: IntensityParams, spec: QuadratureSpec = DEFAULT_SPEC) -> Estimate:
    """Variance of the number of points ``> eps``: ``M_2 + M_1 - M_1**2``."""
    _check_eps(eps)
    table = factorial_moments(params.lam, eps, 2, spec, psi_tol=params.psi_tol)
    m1, m2 = table.values[1], table.values[2]
    e1, e2 = table.certified_abs_err[1], table.certified_abs_err[2]
    value = m2 + m1 - m1 * m1
    return Estimate(value, e2 + e1 * (1.0 + 2.0 * m1 + e1))


def window_label_law(a: float, b: float, params: IntensityParams, max_label: int = 8,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Label law of a point drawn from the intensity restricted to ``[a, b]``.

    ``int_a^b Lambda_l / int_a^b Lambda`` for ``l = 0..max_label``; the limit of
    the label frequencies among points whose size falls in the window.
    """
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    total = integrate(lambda x: intensity_total(x, params), a, b, spec)
    out = np.empty(max_label + 1)
    for ell in range(max_label + 1):
        out[ell] = integrate(lambda x: intensity_label(x, ell, params), a, b, spec).value
    return out / total.value


# -- small-eps expansions -------------------------------------------------------

def weight_mean_asymptotic(eps: float, lam: float = 0.0) -> float:
    """``(2/pi)**1/2 eps**-1/2 + lam + (2 pi)**-1/2 lam**2 eps**1/2``; error ``O(eps)``."""
    _check_eps(eps)
    return math.sqrt(2.0 / math.pi / eps) + lam + lam * lam * math.sqrt(eps / (2.0 * math.pi))


def weight_variance_asymptotic(eps: float) -> float:
    """``(2/pi)**1/2 eps**1/2``; error ``O(eps)``."""
    _check_eps(eps)
    return math.sqrt(2.0 * eps / math.pi)


def count_mean_asymptotic(eps: float, lam: float = 0.0) -> float:
    """``(2/(9 pi))**1/2 eps**-3/2 - (2 pi)**-1/2 lam**2 eps**-1/2 + ln(1/eps)/4``; error ``O(1)``."""
    _check_eps(eps)
    return (math.sqrt(2.0 / (9.0 * math.pi)) * eps ** -1.5
            - lam * lam / math.sqrt(2.0 * math.pi * eps) + 0.25 * math.log(1.0 / eps))


def count_variance_asymptotic(eps: float) -> float:
    """``(2/(9 pi))**1/2 eps**-3/2``; error ``O(1/eps)``."""
    _check_eps(eps)
    return math.sqrt(2.0 / (9.0 * math.pi)) * eps ** -1.5
