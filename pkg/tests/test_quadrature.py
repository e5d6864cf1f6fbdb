import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma, roots_legendre

from critwindow.errors import QuadratureError
from critwindow.quadrature import QuadratureSpec, integrate

TIGHT = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12)


def test_inverse_sqrt_singularity():
    res = integrate(lambda x: x ** -0.5, 0.0, 1.0, TIGHT, transform="sqrt")
    assert abs(res.value - 2.0) <= 1e-10
    assert res.error <= 1e-10


def test_cubic_exponential_two_methods():
    res = integrate(lambda x: np.exp(-x ** 3 / 24), 0.0, 40.0, TIGHT)
    closed = 24 ** (1 / 3) * gamma(4 / 3)
    # fixed-grid Gauss-Legendre on [0, 20], 400 nodes
    t, w = roots_legendre(400)
    x = 10.0 * (t + 1.0)
    grid = 10.0 * np.sum(w * np.exp(-x ** 3 / 24))
    assert abs(grid - closed) <= 1e-8
    assert abs(res.value - grid) <= 1e-8
    assert abs(res.value - closed) <= res.error + 1e-12


def test_zero_integrand():
    res = integrate(lambda x: np.zeros_like(x), 1.0, 2.0)
    assert res.value == 0.0 and res.error == 0.0


@given(st.integers(0, 13), st.floats(-3, 3), st.floats(0.1, 4))
def test_polynomials_exact(deg, a, width):
    b = a + width
    res = integrate(lambda x: x ** deg, a, b, TIGHT)
    want = (b ** (deg + 1) - a ** (deg + 1)) / (deg + 1)
    assert abs(res.value - want) <= 1e-11 * max(1.0, abs(want))


@given(st.floats(0.5, 5.0), st.floats(0.05, 3.0))
def test_error_bound_honest(k, c):
    f = lambda x: np.exp(-k * x) * np.cos(c * x)
    res = integrate(f, 0.0, 10.0, QuadratureSpec(abs_tol=1e-9, rel_tol=1e-9))
    want = (k - math.exp(-10 * k) * (k * math.cos(10 * c) - c * math.sin(10 * c))) / (k * k + c * c)
    assert abs(res.value - want) <= res.error + 1e-15
    assert res.error <= max(1e-9, 1e-9 * abs(res.value)) * 1.5


def test_vector_integrand():
    vals, errs = integrate(lambda x: np.stack([x, x * x], axis=1), 0.0, 1.0, TIGHT)
    assert np.allclose(vals, [0.5, 1 / 3], atol=1e-14)
    assert np.all(errs >= 0)


def test_log_transform_long_range():
    res = integrate(lambda x: 1.0 / (x * x), 1e-3, 1e3, TIGHT, transform="log")
    assert res.value == pytest.approx(1e3 - 1e-3, rel=1e-11)


def test_budget_exhaustion_reports_estimate():
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=3)
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: np.sin(50 * x) ** 2 / (x + 1e-3), 0.0, 20.0, spec)
    assert math.isfinite(info.value.best_bound) and info.value.estimate is not None


def test_breakpoints_and_reversed_limits():
    f = lambda x: np.abs(x - 0.3)
    res = integrate(f, 0.0, 1.0, TIGHT, breakpoints=(0.3,))
    assert res.value == pytest.approx(0.045 + 0.245, abs=1e-14)
