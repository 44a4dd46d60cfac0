import cmath
import math

import pytest

from carlemanlab.errors import DivergenceDetectedError
from carlemanlab.quadrature import (
    adaptive,
    bracket_log_bell,
    integrate_left_tail,
    integrate_log_bell,
)


def test_adaptive_polynomial_exact():
    value, err = adaptive(lambda x: x**3 - 2.0 * x + 1.0, 0.0, 2.0)
    assert value == pytest.approx(4.0 - 4.0 + 2.0, rel=1e-14)
    assert err < 1e-12


def test_adaptive_oscillatory():
    value, _ = adaptive(math.sin, 0.0, math.pi, tol_rel=1e-12)
    assert value == pytest.approx(2.0, rel=1e-12)


def test_adaptive_complex_shared_panels():
    value, _ = adaptive(lambda x: cmath.exp(1j * x), 0.0, 1.0, tol_rel=1e-12)
    expect = (cmath.exp(1j) - 1.0) / 1j
    assert value == pytest.approx(expect, rel=1e-12)


def test_log_bell_gaussian():
    # integral of exp(-x^2) dx = sqrt(pi)
    log_i, rel = integrate_log_bell(lambda x: -x * x, tol_rel=1e-11)
    assert log_i == pytest.approx(0.5 * math.log(math.pi), abs=1e-11)
    assert rel < 1e-9


def test_log_bell_gamma_function():
    # integral t^(s-1) e^-t dt on the log axis: g(x) = s x - e^x
    for s in (1.0, 3.5, 12.0):
        log_i, _ = integrate_log_bell(lambda x, s=s: s * x - math.exp(x))
        assert log_i == pytest.approx(math.lgamma(s), abs=1e-9)


def test_log_bell_peak_far_right():
    # peak beyond the initial scan window is found by expansion
    log_i, _ = integrate_log_bell(lambda x: 50.0 * x - math.exp(x))
    assert log_i == pytest.approx(math.lgamma(50.0), abs=1e-8)


def test_divergence_detection():
    with pytest.raises(DivergenceDetectedError):
        integrate_log_bell(lambda x: 2.0 * x)


def test_bracket_drop():
    x_lo, x_peak, x_hi, peak = bracket_log_bell(lambda x: -(x - 3.0) ** 2)
    assert x_peak == pytest.approx(3.0, abs=1e-6)
    assert x_lo < 3.0 - 6.0 and x_hi > 3.0 + 6.0  # drop 40 => width ~ 6.3


def test_left_tail_real():
    # integral over (-inf, 0] of e^x dx = 1
    value, err = integrate_left_tail(lambda x: math.exp(x) + 0.0j, 0.0)
    assert value.real == pytest.approx(1.0, rel=1e-10)
    assert abs(value.imag) < 1e-12


def test_left_tail_complex_phase():
    # integral e^{(1+i) x} dx over (-inf, 0] = 1 / (1+i)
    value, _ = integrate_left_tail(lambda x: cmath.exp((1 + 1j) * x), 0.0)
    assert value == pytest.approx(1.0 / (1 + 1j), rel=1e-10)


def test_left_tail_zero_function():
    value, err = integrate_left_tail(lambda x: 0.0 + 0.0j, 1.0)
    assert value == 0.0
