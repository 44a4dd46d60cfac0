import json
import math
from concurrent.futures import ThreadPoolExecutor

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carlemanlab.errors import (
    InvalidParameterError,
    InvalidSequenceError,
    RangeExceededError,
)
from carlemanlab.sequences import (
    build_builtin,
    certify_regularity,
    equivalence_constants,
    parse_sequence_spec,
    power_sequence,
    quotient,
)


def test_gevrey_log_values(gevrey1):
    assert gevrey1.log(0) == 0.0
    assert gevrey1.log(3) == pytest.approx(math.log(6.0), abs=1e-14)
    assert gevrey1.log(10) == pytest.approx(math.log(math.factorial(10)), rel=1e-14)


def test_alphabeta_zero_beta_matches_gevrey(gevrey1):
    ab = build_builtin("alphabeta", 1.0, 0.0)
    for p in range(50):
        assert ab.log(p) == pytest.approx(gevrey1.log(p), abs=1e-12)


def test_qpower_values():
    qp = build_builtin("qpower", 2.0)
    assert qp.value(3) == pytest.approx(512.0, rel=1e-12)
    assert qp.log(5) == pytest.approx(25.0 * math.log(2.0), rel=1e-14)


def test_scaled_gevrey_values():
    s = build_builtin("gevrey_scaled", 2.0, 1.0)
    assert s.log(0) == 0.0
    assert s.log(4) == pytest.approx(4 * math.log(2.0) + math.log(24.0), rel=1e-14)


def test_quotients(gevrey1, alphabeta12):
    assert quotient(gevrey1, 2) == pytest.approx(3.0, rel=1e-13)
    # algebraic quotient of p!^alpha
    g = build_builtin("gevrey", 1.7)
    for p in (0, 1, 5, 20):
        assert quotient(g, p) == pytest.approx((p + 1.0) ** 1.7, rel=1e-12)
    # direct quotient from the alpha-beta definition
    assert quotient(alphabeta12, 1) == pytest.approx(
        2.0 * math.log(math.e + 2.0) ** 2, rel=1e-12)


def test_invalid_parameters():
    with pytest.raises(InvalidParameterError):
        build_builtin("gevrey", -1.0)
    with pytest.raises(InvalidParameterError):
        build_builtin("gevrey_scaled", 0.0, 1.0)
    with pytest.raises(InvalidParameterError):
        build_builtin("qpower", 1.0)
    with pytest.raises(InvalidParameterError):
        build_builtin("alphabeta", 0.0, 1.0)
    with pytest.raises(InvalidParameterError):
        build_builtin("nope", 1.0)


def test_user_sequence_roundtrip(tmp_path):
    payload = {"logM": [0.0, 0.5, 1.4, 2.8]}
    path = tmp_path / "seq.json"
    path.write_text(json.dumps(payload))
    s = build_builtin("user", str(path))
    assert s.log(2) == 1.4
    with pytest.raises(RangeExceededError):
        s.log(10)


def test_user_sequence_normalization(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"logM": [0.5, 1.0]}))
    with pytest.raises(InvalidSequenceError):
        build_builtin("user", str(path))


def test_parse_sequence_spec():
    assert parse_sequence_spec("gevrey:1").name == "gevrey:1"
    assert parse_sequence_spec("gevrey-scaled:2:1").log(1) == pytest.approx(
        math.log(2.0))
    assert parse_sequence_spec("alphabeta:1:2").kind == "alphabeta"
    assert parse_sequence_spec("qpower:2").value(2) == pytest.approx(16.0)
    with pytest.raises(InvalidParameterError):
        parse_sequence_spec("gevrey")
    with pytest.raises(InvalidParameterError):
        parse_sequence_spec("mystery:3")


# ---------------------------------------------------------------------------
# regularity certification
# ---------------------------------------------------------------------------

BUILTINS = [
    ("gevrey", 0.5),
    ("gevrey", 1.0),
    ("gevrey", 2.0),
    ("gevrey_scaled", 2.0, 1.0),
    ("alphabeta", 1.0, 2.0),
    ("alphabeta", 0.5, -1.0),
]


@pytest.mark.parametrize("spec", BUILTINS, ids=lambda s: ":".join(map(str, s)))
def test_builtins_strongly_regular_to_1e4(spec):
    seq = build_builtin(*spec)
    report = certify_regularity(seq, 10_000)
    assert report.log_convex.passed
    assert report.moderate.passed, report.moderate
    assert report.snq.passed
    assert report.snq.heuristic


def test_gevrey1_witness_values(gevrey1):
    report = certify_regularity(gevrey1, 100)
    # binomial bound: witness <= 2^alpha
    assert report.moderate.witness <= 2.0
    assert report.moderate.trend == "bounded"
    # tail sum of 1/(l+1)^2 against 1/(p+1): O(1) witness
    assert report.snq.witness < 3.0
    assert math.isfinite(report.snq.tail_residual)


def test_qpower_not_moderate():
    report = certify_regularity(build_builtin("qpower", 2.0), 50)
    assert report.log_convex.passed
    assert not report.moderate.passed
    assert report.moderate.trend == "growing"
    assert report.snq.passed  # strongly non-quasianalytic all the same


def test_nonconvex_user_sequence_flagged():
    # quotient drops between p=1 and p=2: log-convexity violated there
    table = [0.0, 2.0, 2.5] + [2.5 + 1.5 * k for k in range(1, 22)]
    s = build_builtin("user", table)
    report = certify_regularity(s, 5, 20)
    assert not report.log_convex.passed
    assert report.log_convex.first_violation is not None


def test_moderate_witness_midpoint_matches_bruteforce():
    # the log-convex shortcut must agree with the full pairwise scan
    from carlemanlab.sequences import _moderate_witness_curve

    seq = build_builtin("alphabeta", 1.0, 2.0)
    logM = seq.log_values(60)
    fast = _moderate_witness_curve(logM, convex=True)
    slow = _moderate_witness_curve(logM, convex=False)
    assert fast == pytest.approx(slow, abs=1e-12)


def test_e107_bound_on_prefix(gevrey1):
    # m_p <= A^2 M_p^(1/p) <= A^2 m_p with the fitted moderate witness
    report = certify_regularity(gevrey1, 400)
    a_sq = report.moderate.witness ** 2
    for p in range(1, 200):
        m_p = quotient(gevrey1, p)
        root = math.exp(gevrey1.log(p) / p)
        assert m_p <= a_sq * root * (1.0 + 1e-12)
        assert root <= a_sq * m_p * (1.0 + 1e-12)


def test_witnesses_monotone_under_prefix_extension(gevrey1):
    r1 = certify_regularity(gevrey1, 50)
    r2 = certify_regularity(gevrey1, 200)
    assert r2.moderate.witness >= r1.moderate.witness - 1e-15
    assert r2.e107_witness >= r1.e107_witness - 1e-15


# ---------------------------------------------------------------------------
# equivalence
# ---------------------------------------------------------------------------

def test_equivalence_reflexive(gevrey1):
    cert = equivalence_constants(gevrey1, gevrey1, 40)
    assert cert.L == pytest.approx(1.0, abs=1e-14)
    assert cert.H == pytest.approx(1.0, abs=1e-14)
    assert cert.verdict == "plausible"


def test_equivalence_scaled(gevrey1):
    scaled = build_builtin("gevrey_scaled", 2.0, 1.0)
    cert = equivalence_constants(gevrey1, scaled, 40)
    assert cert.L == pytest.approx(2.0, rel=1e-12)
    assert cert.H == pytest.approx(2.0, rel=1e-12)
    assert cert.verdict == "plausible"


def test_equivalence_swap_inverts(gevrey1):
    scaled = build_builtin("gevrey_scaled", 3.0, 1.0)
    fwd = equivalence_constants(gevrey1, scaled, 60)
    rev = equivalence_constants(scaled, gevrey1, 60)
    assert rev.L == pytest.approx(1.0 / fwd.H, rel=1e-12)
    assert rev.H == pytest.approx(1.0 / fwd.L, rel=1e-12)


def test_equivalence_refuted_across_orders(gevrey1, gevrey2):
    cert = equivalence_constants(gevrey1, gevrey2, 40)
    assert cert.verdict == "refuted-on-prefix"
    # H >= (p!)^(1/p) grows without bound
    assert cert.H > 10.0


# ---------------------------------------------------------------------------
# power transform
# ---------------------------------------------------------------------------

def test_power_sequence_matches_gevrey(gevrey1, gevrey2):
    squared = power_sequence(gevrey1, 2.0)
    for p in range(30):
        assert squared.log(p) == gevrey2.log(p)


def test_power_identity(gevrey1):
    same = power_sequence(gevrey1, 1.0)
    for p in range(20):
        assert same.log(p) == gevrey1.log(p)


def test_power_roundtrip_exact_for_binary_exponent(gevrey1):
    back = power_sequence(power_sequence(gevrey1, 2.0), 0.5)
    for p in range(50):
        assert back.log(p) == gevrey1.log(p)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(min_value=0.3, max_value=3.0,
                   allow_nan=False, allow_infinity=False))
def test_power_roundtrip_close_for_general_exponent(s):
    base = build_builtin("gevrey", 1.0)
    back = power_sequence(power_sequence(base, s), 1.0 / s)
    for p in (1, 5, 17):
        assert back.log(p) == pytest.approx(base.log(p), rel=1e-12)


def test_power_invalid():
    with pytest.raises(InvalidParameterError):
        power_sequence(build_builtin("gevrey", 1.0), 0.0)


# ---------------------------------------------------------------------------
# cache behavior
# ---------------------------------------------------------------------------

def test_concurrent_fills_bit_identical():
    reference = build_builtin("alphabeta", 1.0, 2.0).log_values(3000)

    fresh = build_builtin("alphabeta", 1.0, 2.0)

    def reader(k):
        return fresh.log(k)

    with ThreadPoolExecutor(max_workers=8) as pool:
        indices = [((7 * i) % 3000) + 1 for i in range(600)]
        results = list(pool.map(reader, indices))
    for idx, value in zip(indices, results):
        assert value == reference[idx]


def test_cache_extension_is_idempotent():
    a = build_builtin("alphabeta", 0.5, 1.5)
    b = build_builtin("alphabeta", 0.5, 1.5)
    a.ensure(100)
    a.ensure(1000)
    b.ensure(1000)
    assert list(a.log_values(1000)) == list(b.log_values(1000))
