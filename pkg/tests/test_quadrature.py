import math

import numpy as np
import pytest

from hardystab.quadrature import QuadratureError, integrate, sphere_area


def test_polynomial_exact():
    res = integrate(lambda x: 5 * x ** 4, 0.0, 2.0)
    assert res.value == pytest.approx(32.0, rel=1e-15)


def test_vector_valued_integrand():
    res = integrate(lambda x: np.vstack([np.sin(x), np.cos(x)]), 0.0, math.pi)
    assert res.value[0] == pytest.approx(2.0, rel=1e-13)
    assert abs(res.value[1]) < 1e-13


def test_breakpoint_handles_kink():
    res = integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, breakpoints=[0.3])
    assert res.value == pytest.approx(0.3 ** 2 / 2 + 0.7 ** 2 / 2, rel=1e-14)
    assert res.panels <= 16


def test_exponential_weight_in_log_variable():
    # integral of r^{a-1} over (1, e^3) as an integral in t = ln r
    a = 4.5
    res = integrate(lambda t: np.exp(a * t), 0.0, 3.0, rtol=1e-13)
    assert res.value == pytest.approx((math.exp(3 * a) - 1) / a, rel=1e-12)


def test_nonconvergence_raises():
    with pytest.raises(QuadratureError) as err:
        integrate(lambda x: np.sign(np.sin(1 / np.maximum(x, 1e-300))), 0.0, 1.0,
                  rtol=1e-14, max_panels=64)
    assert err.value.value is not None


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi ** 2)


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        integrate(np.sin, 1.0, 1.0)
