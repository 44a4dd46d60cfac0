import cmath
import math

import pytest

from carlemanlab.errors import (
    CertificationFailureError,
    InvalidParameterError,
    NotInClassError,
    OutOfSectorError,
)
from carlemanlab.extension import (
    CoefficientSequence,
    ExtensionOperator,
    RightInverseConfig,
    asymptotic_error,
    borel_recover,
    certify_expansion,
    extend,
    formal_borel,
    lambda_norm,
    right_inverse_check,
    subsector_grid,
)
from carlemanlab.proximate import PolarPoint, flat_function, gevrey_weight

DELTA = CoefficientSequence.from_values([1.0] + [0.0] * 11)


def lower_incomplete_gamma(s: int, y: float) -> float:
    """Closed form for integer s: (s-1)! (1 - e^-y sum_{k<s} y^k / k!)."""
    tail = sum(y**k / math.factorial(k) for k in range(s))
    return math.factorial(s - 1) * (1.0 - math.exp(-y) * tail)


# ---------------------------------------------------------------------------
# norms and the formal Borel transform
# ---------------------------------------------------------------------------

def test_lambda_norm_examples(gevrey1):
    equality = CoefficientSequence.from_values(
        [math.factorial(p) ** 2 for p in range(12)])
    assert lambda_norm(equality, gevrey1, 1.0) == pytest.approx(1.0, rel=1e-12)
    assert lambda_norm(DELTA, gevrey1, 1.0) == 1.0
    impulse = CoefficientSequence.from_values([0.0, 1.0, 0.0])
    assert lambda_norm(impulse, gevrey1, 1.0) == pytest.approx(1.0)
    doubling = CoefficientSequence.from_values(
        [2.0**p * math.factorial(p) ** 2 for p in range(12)])
    assert lambda_norm(doubling, gevrey1, 1.0) == pytest.approx(2.0**11)
    assert lambda_norm(doubling, gevrey1, 2.0) == pytest.approx(1.0)
    with pytest.raises(InvalidParameterError):
        lambda_norm(DELTA, gevrey1, 0.0)


def test_formal_borel_unit_coefficients(table_v_z, gevrey1):
    a = CoefficientSequence.from_values(
        [math.factorial(p) ** 2 for p in range(12)])
    borel = formal_borel(a, table_v_z)
    assert borel.D2 == pytest.approx(1.0, rel=1e-9)
    assert borel.R0 == pytest.approx(0.9, rel=1e-9)
    assert all(abs(b - 1.0) < 1e-9 for b in borel.coefficients)


def test_formal_borel_geometric(table_v_z):
    a = CoefficientSequence.from_values(
        [3.0**p * math.factorial(p) ** 2 for p in range(12)])
    borel = formal_borel(a, table_v_z)
    assert borel.D2 == pytest.approx(3.0, rel=1e-9)
    assert borel.R0 == pytest.approx(0.3, rel=1e-9)


def test_formal_borel_degenerate(table_v_z):
    borel = formal_borel(DELTA, table_v_z)
    assert borel.D2 is None
    assert borel.R0 == 1.0


def test_formal_borel_not_in_class(table_v_z):
    runaway = CoefficientSequence.from_values(
        [math.factorial(p) ** 3 for p in range(12)])
    with pytest.raises(NotInClassError):
        formal_borel(runaway, table_v_z)


def test_coefficients_from_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"coeffs_re": [1.0, 0.5], "coeffs_im": [0.0, -1.0], "A": 2.0}')
    a = CoefficientSequence.from_json(str(path))
    assert a.values == (1.0 + 0.0j, 0.5 - 1.0j)
    assert a.declared == (1.0, 2.0)
    with pytest.raises(InvalidParameterError):
        CoefficientSequence.from_json({"coeffs_im": [1.0]})


def test_coefficients_from_generator():
    a = CoefficientSequence.from_generator(lambda p: p + 1.0, 5)
    assert a.generator_backed
    assert a.values == (1.0, 2.0, 3.0, 4.0, 5.0)


# ---------------------------------------------------------------------------
# the extension operator: closed forms
# ---------------------------------------------------------------------------

def test_extend_exponential_closed_form(kernel_v_z, table_v_z):
    op = ExtensionOperator(DELTA, kernel_v_z, table_v_z, r0=1.0, tol=1e-12)
    for x in (0.1, 0.2, 0.5):
        expect = 1.0 - math.exp(-1.0 / x)
        assert op(PolarPoint(x, 0.0)).real == pytest.approx(expect, rel=1e-10)
    value = extend(DELTA, kernel_v_z, table_v_z, 1.0, PolarPoint(0.1, 0.0))
    assert value.real == pytest.approx(1.0 - math.exp(-10.0), rel=1e-10)


def test_extend_erf_closed_form(kernel_v_z2, table_v_z2):
    # V = z^2, delta coefficients: f(x) = erf(R0/x) exactly
    op = ExtensionOperator(DELTA, kernel_v_z2, table_v_z2, r0=1.0, tol=1e-12)
    for x in (0.1, 0.3, 0.8):
        assert op(PolarPoint(x, 0.0)).real == pytest.approx(
            math.erf(1.0 / x), rel=1e-10)


def test_extend_polynomial_coefficients_closed_form(kernel_v_z, table_v_z):
    # with V = z the extension has an incomplete-gamma closed form
    a = CoefficientSequence.from_values([0.5, 2.0, 0.0, -1.5])
    op = ExtensionOperator(a, kernel_v_z, table_v_z, r0=1.0, tol=1e-12)
    b = [0.5, 2.0, 0.0, -1.5 / (math.factorial(3) * math.factorial(3))]
    for x in (0.2, 0.6):
        expect = sum(bp * x**p * lower_incomplete_gamma(p + 1, 1.0 / x)
                     for p, bp in enumerate(b))
        assert op(PolarPoint(x, 0.0)).real == pytest.approx(expect, rel=1e-10)


def test_extend_linearity(kernel_v_z, table_v_z):
    first = CoefficientSequence.from_values([1.0, 0.0, 0.0])
    second = CoefficientSequence.from_values([0.0, 1.0, 0.0])
    combo = CoefficientSequence.from_values([0.5, 2.0, 0.0])
    z = PolarPoint(0.3, 0.2)
    lhs = ExtensionOperator(combo, kernel_v_z, table_v_z, r0=1.0)(z)
    rhs = 0.5 * ExtensionOperator(first, kernel_v_z, table_v_z, r0=1.0)(z) \
        + 2.0 * ExtensionOperator(second, kernel_v_z, table_v_z, r0=1.0)(z)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_extend_zero_sequence(kernel_v_z, table_v_z):
    zero = CoefficientSequence.from_values([0.0] * 6)
    op = ExtensionOperator(zero, kernel_v_z, table_v_z, r0=1.0)
    assert op(PolarPoint(0.3, 0.0)) == 0.0


def test_extend_out_of_sector(kernel_v_z, table_v_z):
    op = ExtensionOperator(DELTA, kernel_v_z, table_v_z, r0=1.0)
    with pytest.raises(OutOfSectorError):
        op(PolarPoint(0.3, 0.6 * math.pi))


# ---------------------------------------------------------------------------
# asymptotic error and certification
# ---------------------------------------------------------------------------

def test_asymptotic_error_closed_form():
    z = PolarPoint(0.1, 0.0)
    f_value = 1.0 - math.exp(-10.0)
    assert asymptotic_error(f_value, DELTA, z, 1) == pytest.approx(
        math.exp(-10.0), rel=1e-9)
    assert asymptotic_error(f_value, DELTA, z, 0) == pytest.approx(
        abs(f_value), rel=1e-12)


def test_certify_expansion_closed_form(gevrey1):
    f = lambda z: 1.0 - cmath.exp(-1.0 / z.to_complex())
    cert = certify_expansion(f, DELTA, gevrey1, alpha=0.5, r0=0.3,
                             N_range=(1, 15))
    assert cert.passed
    assert cert.residual_max <= 0.0
    assert math.isfinite(cert.C) and math.isfinite(cert.A)


def test_certify_expansion_perturbed_fails(gevrey1):
    f = lambda z: 1.0 - cmath.exp(-1.0 / z.to_complex()) + 0.001
    with pytest.raises(CertificationFailureError) as info:
        certify_expansion(f, DELTA, gevrey1, alpha=0.5, r0=0.3,
                          N_range=(1, 15))
    assert 1 in info.value.diagnostics["failing_orders"]


def test_certify_polynomial_minus_extension_is_flat(kernel_v_z, table_v_z,
                                                    gevrey1):
    # finite coefficient sequences certify far beyond their degree
    a = CoefficientSequence.from_values([1.0, -0.5, 0.25])
    op = ExtensionOperator(a, kernel_v_z, table_v_z, tol=1e-12)
    cert = certify_expansion(op, a, gevrey1, alpha=0.5, r0=0.25,
                             N_range=(1, 12), noise_floor=1e-9)
    assert cert.passed


def test_certificate_monotone_under_subsector_shrink(gevrey1):
    f = lambda z: 1.0 - cmath.exp(-1.0 / z.to_complex())
    grid = subsector_grid(0.6, 0.3, n_r=20, n_rays=5)
    nested = [z for z in grid if abs(z.theta) <= 0.4 * math.pi / 2.0
              and z.r <= 0.2]
    big = certify_expansion(f, DELTA, gevrey1, alpha=0.6, r0=0.3,
                            z_grid=grid, N_range=(1, 10))
    small = certify_expansion(f, DELTA, gevrey1, alpha=0.4, r0=0.2,
                              z_grid=nested, N_range=(1, 10))
    assert small.A <= big.A * (1.0 + 1e-12)


# ---------------------------------------------------------------------------
# coefficient recovery
# ---------------------------------------------------------------------------

def test_recover_linear_function(gevrey1):
    rec = borel_recover(lambda z: z.to_complex(), gevrey1, 5,
                        x0=0.25, levels=12, f_noise=1e-15)
    assert abs(rec.values[1] - 1.0) < 1e-10
    for p in (0, 2, 3, 4, 5):
        assert abs(rec.values[p]) < 1e-8


def test_recover_closed_form_exponential(gevrey1):
    f = lambda z: 1.0 - cmath.exp(-1.0 / z.to_complex())
    rec = borel_recover(f, gevrey1, 8, x0=0.25, levels=16, f_noise=1e-15)
    assert abs(rec.values[0] - 1.0) <= 1e-8
    assert abs(rec.values[1]) <= 1e-6


def test_recover_flat_function_is_null(gevrey1):
    flat = flat_function(gevrey_weight(1.0))
    rec = borel_recover(flat, gevrey1, 8, x0=0.2, levels=16, f_noise=1e-15)
    for p in range(9):
        bound = 1e-6 * math.factorial(p) * math.factorial(p)
        assert abs(rec.values[p]) <= bound


def test_recover_order_cap(gevrey1):
    with pytest.raises(InvalidParameterError):
        borel_recover(lambda z: 1.0, gevrey1, 20)


def test_recover_fail_tol_truncates(gevrey1):
    # a rough noise source with a tight failure threshold stops early
    noisy = lambda z: 1.0 + 0.05 * math.sin(1e4 * z.r)
    rec = borel_recover(noisy, gevrey1, 8, x0=0.25, levels=10,
                        f_noise=1e-12, fail_tol=1e-6)
    assert rec.failed_at is not None
    assert len(rec.values) == rec.failed_at


# ---------------------------------------------------------------------------
# round trip
# ---------------------------------------------------------------------------

def test_right_inverse_delta(kernel_v_z, table_v_z, gevrey1):
    report = right_inverse_check(DELTA, kernel_v_z, table_v_z, gevrey1,
                                 RightInverseConfig(n_max=8))
    assert report.max_weighted_error <= 1e-6


def test_right_inverse_impulse(kernel_v_z, table_v_z, gevrey1):
    impulse = CoefficientSequence.from_values([0.0, 1.0] + [0.0] * 10)
    report = right_inverse_check(impulse, kernel_v_z, table_v_z, gevrey1,
                                 RightInverseConfig(n_max=8))
    assert report.weighted_errors[1] <= 1e-4
    assert report.max_weighted_error <= 1e-3


def test_right_inverse_zero(kernel_v_z, table_v_z, gevrey1):
    zero = CoefficientSequence.from_values([0.0] * 10)
    report = right_inverse_check(zero, kernel_v_z, table_v_z, gevrey1,
                                 RightInverseConfig(n_max=8))
    assert report.max_weighted_error == 0.0
