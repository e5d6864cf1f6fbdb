"""Intensity of the limiting component-size point process and its label law.

All densities are assembled in log space,

    log Lambda(x) = -log(2 pi)/2 - 5/2 log x + log Psi(x**1.5) - F(x, lam),

so that ratios stay meaningful long after ``exp(-F)`` underflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .excursion_mgf import MAX_ORDER, _log_wright_table, log_psi

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
#: Largest x accepted; beyond it Psi(x**1.5) needs more than MAX_ORDER terms.
MAX_X = 31.0


@dataclass(frozen=True)
class IntensityParams:
    """Window parameter plus evaluation controls.

    ``psi_tol`` is the relative truncation tolerance used for ``Psi``.
    """

    lam: float
    psi_tol: float = 1e-14
    max_label: int = 64

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ValueError("lam must be finite")
        if not self.psi_tol > 0:
            raise ValueError("psi_tol must be positive")
        if not (0 <= self.max_label <= MAX_ORDER):
            raise ValueError(f"max_label must be in [0, {MAX_ORDER}]")

    def shifted(self, s: float) -> "IntensityParams":
        return IntensityParams(palm_shift(self.lam, s), self.psi_tol, self.max_label)


@dataclass(frozen=True)
class LabelDistribution:
    x: float
    masses: np.ndarray
    tail_mass: float


def drift_F(x, lam):
    """``F(x, lam) = ((x - lam)**3 + lam**3) / 6``, computed as ``x**3/24 + x (x - 2 lam)**2 / 8``.

    The second form is a sum of nonnegative terms, so it never cancels.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    out = x ** 3 / 24.0 + x * (x - 2.0 * lam) ** 2 / 8.0
    return float(out) if out.ndim == 0 else out


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("x must be positive")
    if np.any(x > MAX_X):
        raise ValueError(f"x above {MAX_X} is outside the supported range")
    return x


def log_psi_part(x, rtol: float = 1e-14):
    """``-log(2 pi)/2 - 5/2 log x + log Psi(x**1.5)``: the lambda-free part of log Lambda."""
    x = _check_x(x)
    return -_HALF_LOG_2PI - 2.5 * np.log(x) + log_psi(x ** 1.5, rtol)


def log_intensity_total(x, lam: float, rtol: float = 1e-14):
    x = _check_x(x)
    return log_psi_part(x, rtol) - drift_F(x, lam)


def intensity_total(x, params: IntensityParams):
    """Total intensity ``Lambda^lam(x)``; scalar in, scalar out."""
    out = np.exp(log_intensity_total(x, params.lam, params.psi_tol))
    return float(out) if out.ndim == 0 else out


def intensity_label(x, label: int, params: IntensityParams):
    """Intensity of the points carrying complexity ``label``."""
    if not (0 <= int(label) <= MAX_ORDER) or int(label) != label:
        raise ValueError(f"label must be an integer in [0, {MAX_ORDER}]")
    x = _check_x(x)
    lw = _log_wright_table()[int(label)]
    out = np.exp(-_HALF_LOG_2PI + lw + (1.5 * label - 2.5) * np.log(x) - drift_F(x, params.lam))
    return float(out) if out.ndim == 0 else out


def label_distribution(x: float, params: IntensityParams) -> LabelDistribution:
    """Law of the complexity label of a point at ``x``: ``w_l x**(3l/2) / Psi(x**1.5)``."""
    x = float(_check_x(x))
    ell = np.arange(params.max_label + 1)
    logm = _log_wright_table()[: params.max_label + 1] + 1.5 * ell * math.log(x)
    masses = np.exp(logm - float(log_psi(x ** 1.5, params.psi_tol)))
    masses = np.minimum(masses, 1.0)
    tail = max(0.0, 1.0 - math.fsum(masses))
    return LabelDistribution(x, masses, tail)


def palm_shift(lam: float, s: float) -> float:
    """Parameter of the process seen from a point at ``s``: ``lam - s``."""
    if not s > 0:
        raise ValueError("s must be positive")
    return lam - s


def log_shift_ratio(x, y, lam):
    """``F(y, lam - x) - F(y, lam) = x y (y + x - 2 lam) / 2``.

    ``Lambda^{lam - x}(y) = Lambda^lam(y) * exp(-log_shift_ratio(x, y, lam))``.
    """
    return 0.5 * x * y * (y + x - 2.0 * lam)
