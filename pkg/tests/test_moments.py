import cmath
import math

import numpy as np
import pytest

from carlemanlab.errors import (
    DivergenceDetectedError,
    InvalidParameterError,
    InvalidVariantError,
    TableExhaustedError,
)
from carlemanlab.growth import GrowthProfile
from carlemanlab.moments import (
    FV_eval,
    VARIANT_CLASSICAL,
    VARIANT_GENERAL,
    _log_hM_integral,
    equivalence_certificate,
    hM_integral_bound,
    kernel,
    kernel_bound_certificate,
    komatsu_growth_check,
    moment,
    moment_table,
    parse_kernel_spec,
)
from carlemanlab.proximate import (
    KIND_SECTORIAL,
    PolarPoint,
    Weight,
    gevrey_weight,
    real_weight_from_M,
)
from carlemanlab.sequences import build_builtin
from carlemanlab.quadrature import adaptive


def midpoint_moment_oracle(kern, lam, x_lo=-30.0, x_hi=12.0, n=200_000):
    """Independent fixed-grid midpoint rule for the moment integral."""
    g = kern.moment_log_integrand(lam)
    h = (x_hi - x_lo) / n
    total = 0.0
    for i in range(n):
        total += math.exp(g(x_lo + (i + 0.5) * h))
    return total * h


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def test_kernel_values(kernel_v_z, kernel_classical2):
    assert kernel_v_z(PolarPoint(2.0, 0.0)) == pytest.approx(2 * math.exp(-2.0))
    assert kernel_classical2(PolarPoint(1.0, 0.0)) == pytest.approx(
        2.0 * math.exp(-1.0))
    # unit modulus of the weight factor on the diagonal ray for V = z^2
    value = kernel(gevrey_weight(2.0), VARIANT_GENERAL)(
        PolarPoint(1.0, math.pi / 4.0))
    assert abs(value) == pytest.approx(1.0, rel=1e-12)


def test_kernel_positive_on_axis(kernel_v_z, kernel_classical2):
    for x in np.geomspace(0.01, 20.0, 30):
        for kern in (kernel_v_z, kernel_classical2):
            value = kern(PolarPoint(float(x), 0.0))
            assert value.imag == pytest.approx(0.0, abs=1e-14)
            assert value.real > 0.0


def test_kernel_variant_rules():
    with pytest.raises(InvalidVariantError):
        kernel(real_weight_from_M(GrowthProfile(build_builtin("gevrey", 1.0))),
               VARIANT_CLASSICAL)
    with pytest.raises(InvalidVariantError):
        kernel(gevrey_weight(1.0), "fancy")
    spec = parse_kernel_spec("classical:2")
    assert spec.variant == VARIANT_CLASSICAL
    with pytest.raises(InvalidParameterError):
        parse_kernel_spec("general")


# ---------------------------------------------------------------------------
# moment function: closed forms and an independent oracle
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("k", [0.5, 1.0, 2.0])
def test_classical_moments_match_gamma(k):
    kern = kernel(gevrey_weight(k), VARIANT_CLASSICAL)
    for p in range(0, 41, 4):
        got = moment(kern, float(p), tol=1e-10)
        assert got.log_value == pytest.approx(math.lgamma(1.0 + p / k),
                                              abs=1e-9)


def test_general_kernel_moments_are_factorials(kernel_v_z):
    for lam, expect in ((0.0, 1.0), (1.0, 1.0), (3.0, 6.0), (4.0, 24.0)):
        assert moment(kernel_v_z, lam).value == pytest.approx(expect, rel=1e-9)


def test_moment_continuous_in_order(kernel_v_z):
    # the moment function interpolates Gamma(lam + 1) between integers
    for lam in (0.5, 2.5, 7.25):
        assert moment(kernel_v_z, lam).value == pytest.approx(
            math.gamma(lam + 1.0), rel=1e-9)
    step = [moment(kernel_v_z, 3.0 + d).value for d in (0.0, 1e-4)]
    assert abs(step[1] - step[0]) / step[0] < 1e-3


def test_moment_against_midpoint_oracle(kernel_v_z):
    oracle = midpoint_moment_oracle(kernel_v_z, 3.0)
    assert moment(kernel_v_z, 3.0).value == pytest.approx(oracle, rel=1e-7)


def test_classical_k2_example(kernel_classical2):
    assert moment(kernel_classical2, 4.0).value == pytest.approx(2.0, rel=1e-9)


def test_moment_of_nonintegrable_weight():
    bounded = Weight(name="bounded", func=lambda z: 1.0 + 0.0j,
                     kind=KIND_SECTORIAL, rho_target=1.0, sector_gamma=2.0)
    with pytest.raises(DivergenceDetectedError):
        moment(kernel(bounded, VARIANT_GENERAL), 1.0)
    with pytest.raises(InvalidParameterError):
        moment_table(kernel(gevrey_weight(1.0), VARIANT_GENERAL), 500)


def test_moment_table_structure(table_v_z):
    assert len(table_v_z) == 41
    assert table_v_z.value(5) == pytest.approx(120.0, rel=1e-9)
    assert all(err < 1e-8 for _, _, _, err in table_v_z.rows())
    # moment sequences of positive measures are log-convex
    logs = table_v_z.log_values
    assert np.all(np.diff(logs, 2) >= -1e-9)


def test_fromM_weight_moment_table(profile_g1, gevrey1):
    kern = kernel(real_weight_from_M(profile_g1), VARIANT_GENERAL)
    table = moment_table(kern, 40, tol=1e-10)
    cert = equivalence_certificate(table, gevrey1, (5, 40))
    assert cert.verdict == "plausible"
    assert 1.0 <= cert.L <= cert.H < 2.0


# ---------------------------------------------------------------------------
# equivalence certificates
# ---------------------------------------------------------------------------

def test_equivalence_identity(table_v_z, gevrey1):
    cert = equivalence_certificate(table_v_z, gevrey1)
    assert cert.L == pytest.approx(1.0, abs=1e-10)
    assert cert.H == pytest.approx(1.0, abs=1e-10)
    assert cert.verdict == "plausible"


def test_equivalence_classical_k1(gevrey1):
    table = moment_table(kernel(gevrey_weight(1.0), VARIANT_CLASSICAL), 30)
    cert = equivalence_certificate(table, gevrey1)
    assert cert.L == pytest.approx(1.0, abs=1e-9)
    assert cert.H == pytest.approx(1.0, abs=1e-9)


def test_equivalence_both_variants_for_k2(gevrey05):
    classical = moment_table(kernel(gevrey_weight(2.0), VARIANT_CLASSICAL), 40)
    general = moment_table(kernel(gevrey_weight(2.0), VARIANT_GENERAL), 40)
    assert equivalence_certificate(classical, gevrey05).verdict == "plausible"
    assert equivalence_certificate(general, gevrey05).verdict == "plausible"
    # the two variants differ by value but agree as equivalence classes:
    # general-variant moments are Gamma((p+1)/k)/k, not Gamma(1+p/k)
    for p in range(0, 41, 8):
        assert general.log_value(p) == pytest.approx(
            math.lgamma((p + 1) / 2.0) - math.log(2.0), abs=1e-9)


# ---------------------------------------------------------------------------
# F_V growth
# ---------------------------------------------------------------------------

def test_FV_matches_exponential(table_v_z):
    for z in (0.0, 1.0, -2.5, 5.0, 2 + 1j, -1 - 3j):
        expect = cmath.exp(complex(z))
        assert FV_eval(table_v_z, z) == pytest.approx(expect, rel=1e-9)


def test_FV_table_exhaustion(table_v_z):
    with pytest.raises(TableExhaustedError):
        FV_eval(table_v_z, 25.0)


def test_komatsu_growth(table_v_z, profile_g1):
    cert = komatsu_growth_check(table_v_z, profile_g1)
    assert 1.0 <= cert.K_tilde <= 2.0
    assert cert.coeff_c == pytest.approx(1.0, abs=1e-6)
    assert cert.coeff_k == pytest.approx(1.0, abs=1e-6)
    # the fitted bound actually holds on a fresh grid
    for r in np.geomspace(0.5, 8.0, 15):
        lhs = abs(FV_eval(table_v_z, complex(r, 0.0), tol=1e-9))
        rhs = cert.C_tilde * math.exp(profile_g1.bigM(cert.K_tilde * float(r)))
        assert lhs <= rhs * (1.0 + 1e-9)


def test_komatsu_classical_k2(gevrey05):
    table = moment_table(kernel(gevrey_weight(2.0), VARIANT_CLASSICAL), 180,
                         tol=1e-10)
    cert = komatsu_growth_check(table, GrowthProfile(gevrey05),
                                r_min=0.5, r_max=5.0)
    assert cert.K_tilde < 4.0


# ---------------------------------------------------------------------------
# kernel bound certificate
# ---------------------------------------------------------------------------

def test_kernel_bound_certificate(kernel_v_z, profile_g1):
    cert = kernel_bound_certificate(kernel_v_z, profile_g1, alpha=0.5)
    assert math.isfinite(cert.log_C)
    for r in np.geomspace(0.2, 40.0, 20):
        for theta in (-0.24 * math.pi, 0.0, 0.24 * math.pi):
            z = PolarPoint(float(r), float(theta))
            lhs = abs(kernel_v_z(z))
            rhs = cert.C * profile_g1.hM(cert.K / z.r)
            assert lhs <= rhs * (1.0 + 1e-9)


def test_kernel_bound_needs_alpha_inside(kernel_v_z, profile_g1):
    with pytest.raises(InvalidParameterError):
        kernel_bound_certificate(kernel_v_z, profile_g1, alpha=1.0)


def test_kernel_integrable_at_origin(kernel_v_z):
    # integral of |e_V(t e^{i tau})| / t near the origin converges
    for tau in (0.0, 0.3 * math.pi, -0.45 * math.pi):
        value, _ = adaptive(
            lambda x, tau=tau: abs(kernel_v_z(PolarPoint(math.exp(x), tau))),
            -40.0, 0.0, tol_rel=1e-8)
        assert 0.0 < value < 10.0


# ---------------------------------------------------------------------------
# piecewise-exact h_M integral bound
# ---------------------------------------------------------------------------

def test_hM_integral_doubling_oracle(profile_g1):
    # substitution t -> 2t multiplies the integral by exactly 2^p
    for p in (1, 5, 17, 30):
        gap = _log_hM_integral(profile_g1, 2.0, p) \
            - _log_hM_integral(profile_g1, 1.0, p) - p * math.log(2.0)
        assert abs(gap) <= 1e-9


def test_hM_integral_positive_finite(profile_g1):
    value = _log_hM_integral(profile_g1, 1.0, 1)
    assert math.isfinite(value)


def test_hM_integral_bound(profile_g1):
    bound = hM_integral_bound(profile_g1, 1.0, (1, 30))
    assert bound.drift.verdict == "plausible"
    assert math.isfinite(bound.C) and math.isfinite(bound.D)
    # envelope holds entrywise
    logM = profile_g1.seq.log_values(30)
    for i, p in enumerate(range(1, 31)):
        lhs = bound.log_integrals[i]
        rhs = math.log(bound.C) + p * math.log(bound.D) + logM[p]
        assert lhs <= rhs + 1e-9


def test_hM_integral_quadrature_crosscheck(profile_g1):
    # piecewise-exact sum vs adaptive quadrature of t^(p-1) h_M(1/... K/t)
    for p, big_k in ((3, 1.0), (7, 2.0)):
        exact = _log_hM_integral(profile_g1, big_k, p)

        def integrand(x):
            t = math.exp(x)
            return math.exp(p * x) * profile_g1.hM(big_k / t)

        value, _ = adaptive(integrand, -10.0, math.log(
            profile_g1.quotient(400)), tol_rel=1e-9)
        assert math.log(value) == pytest.approx(exact, abs=1e-7)
