"""Kernels, moment functions and moment-sequence certificates.

The kernel built from a weight V is e_V(z) = z e^{-V(z)}; for the
Gevrey monomial weights the classical kernel k z^k e^{-z^k} is offered
as a variant.  Moment functions m_V(lambda) are computed by adaptive
quadrature on the log axis; moment tables store log-values with
per-entry error estimates.  The growth certificates for the kernel
bound, the Komatsu-type growth of the series F_V, and the piecewise
exact h_M integral bound live here as well.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (
    CertificationFailureError,
    InvalidParameterError,
    InvalidVariantError,
    OutOfSectorError,
    RangeExceededError,
    TableExhaustedError,
    WeightEvaluationError,
)
from .fits import DriftReport, escaping_trend, ratio_drift
from .growth import GrowthProfile
from .proximate import PolarPoint, Weight, gevrey_weight
from .quadrature import integrate_log_bell

__all__ = [
    "Kernel",
    "MomentTable",
    "MomentValue",
    "kernel",
    "parse_kernel_spec",
    "moment",
    "moment_table",
    "kernel_bound_certificate",
    "equivalence_certificate",
    "FV_eval",
    "komatsu_growth_check",
    "hM_integral_bound",
]

VARIANT_GENERAL = "general"
VARIANT_CLASSICAL = "classical"

MAX_TABLE_ORDER = 200  # double-precision log-space guard


@dataclass(frozen=True)
class Kernel:
    """Kernel evaluator e_V; positive real on the positive axis."""

    weight: Weight
    variant: str

    @property
    def sector_gamma(self) -> float:
        """Opening (in pi units) of the sector the kernel properties hold on."""
        return 1.0 / self.weight.rho_target

    def __call__(self, z: PolarPoint) -> complex:
        # evaluation is allowed on the weight's analytic domain; the
        # optimal sector S_{sector_gamma} only bounds where the kernel
        # estimates (and the extension operator) apply
        domain = self.weight.sector_gamma
        if domain is not None and abs(z.theta) >= domain * math.pi / 2.0:
            raise OutOfSectorError(
                f"arg(z)={z.theta:.4g} outside the weight domain "
                f"(half-opening {domain * math.pi / 2.0:.4g})")
        if self.variant == VARIANT_CLASSICAL:
            k = self.weight.params["k"]
            w = cmath.rect(z.r**k, k * z.theta)
            return k * w * _guarded_exp(-w)
        v = self.weight(z)
        return z.to_complex() * _guarded_exp(-v)

    def log_abs_axis(self, t: float) -> float:
        """log e_V(t) for t > 0 (real positive values on the axis)."""
        if self.variant == VARIANT_CLASSICAL:
            k = self.weight.params["k"]
            return math.log(k) + k * math.log(t) - t**k
        return math.log(t) - self.weight.on_axis(t)

    def moment_log_integrand(self, lam: float):
        """g(x) with m_V(lam) = integral exp(g(x)) dx after t = e^x."""
        if self.variant == VARIANT_CLASSICAL:
            k = self.weight.params["k"]
            log_k = math.log(k)

            def g(x: float) -> float:
                kx = k * x
                if kx > 700.0:
                    return -math.inf
                return log_k + (lam + k) * x - math.exp(kx)

            return g

        weight = self.weight

        def g(x: float) -> float:
            if x > 700.0:
                return -math.inf
            try:
                v = weight.on_axis(math.exp(x))
            except RangeExceededError:
                # beyond the computable quotient range the weight already
                # exceeds any polynomial factor: the integrand is zero there
                return -math.inf
            return (lam + 1.0) * x - v

        return g


def _guarded_exp(w: complex) -> complex:
    if w.real > 700.0:
        raise WeightEvaluationError("kernel evaluation overflows")
    if w.real < -745.0:
        return 0.0
    return cmath.exp(w)


def kernel(weight: Weight, variant: str = VARIANT_GENERAL) -> Kernel:
    """Build a kernel from a weight.

    The classical variant k z^k e^{-z^k} is only available for monomial
    weights; everything else uses the z e^{-V(z)} form.
    """
    if variant == VARIANT_CLASSICAL:
        if weight.params.get("kind") != "monomial" or \
                weight.params.get("coeff", 1.0) != 1.0:
            raise InvalidVariantError(
                "the classical kernel variant needs a plain monomial weight")
        return Kernel(weight=weight, variant=variant)
    if variant != VARIANT_GENERAL:
        raise InvalidVariantError(f"unknown kernel variant {variant!r}")
    return Kernel(weight=weight, variant=variant)


def parse_kernel_spec(spec: str, weight: Weight | None = None) -> Kernel:
    """CLI mini-language: ``classical:<k>`` or ``general`` (with --weight)."""
    head, _, rest = spec.partition(":")
    if head == "classical":
        try:
            return kernel(gevrey_weight(float(rest)), VARIANT_CLASSICAL)
        except (TypeError, ValueError) as exc:
            raise InvalidParameterError(f"bad kernel spec {spec!r}") from exc
    if head == "general":
        if weight is None:
            raise InvalidParameterError(
                "kernel spec 'general' needs an explicit weight")
        return kernel(weight, VARIANT_GENERAL)
    raise InvalidParameterError(f"unknown kernel spec {spec!r}")


# ---------------------------------------------------------------------------
# moment function and tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentValue:
    value: float
    log_value: float
    rel_error: float


def moment(k: Kernel, lam: float, tol: float = 1e-9) -> MomentValue:
    """m_V(lam) = integral_0^inf t^(lam-1) e_V(t) dt, lam >= 0.

    Computed on the log axis with the adaptive panel rule; the value is
    exact-positive, so only the log needs to stay representable.
    """
    if lam < 0:
        raise InvalidParameterError("moment order must be nonnegative")
    log_value, rel_err = integrate_log_bell(k.moment_log_integrand(lam),
                                            tol_rel=tol)
    value = math.exp(log_value) if log_value < 700.0 else math.inf
    return MomentValue(value=value, log_value=log_value, rel_error=rel_err)


@dataclass
class MomentTable:
    """Moment sequence stored in log-space with error estimates."""

    kernel: Kernel
    log_values: np.ndarray
    rel_errors: np.ndarray

    def __len__(self):
        return len(self.log_values)

    def log_value(self, p: int) -> float:
        return float(self.log_values[p])

    def value(self, p: int) -> float:
        lv = self.log_values[p]
        return math.exp(lv) if lv < 700.0 else math.inf

    def rows(self):
        for p in range(len(self.log_values)):
            yield p, self.value(p), float(self.log_values[p]), \
                float(self.rel_errors[p])


def moment_table(k: Kernel, count: int, tol: float = 1e-9) -> MomentTable:
    """Table of m_V(p) for p = 0..count."""
    if count > MAX_TABLE_ORDER:
        raise InvalidParameterError(
            f"moment tables are limited to order {MAX_TABLE_ORDER}")
    logs = np.empty(count + 1)
    errs = np.empty(count + 1)
    for p in range(count + 1):
        mv = moment(k, float(p), tol)
        logs[p] = mv.log_value
        errs[p] = mv.rel_error
    return MomentTable(kernel=k, log_values=logs, rel_errors=errs)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelBoundCertificate:
    C: float
    K: float
    log_C: float
    alpha: float
    r_range: tuple[float, float]
    n_samples: int

    def to_dict(self):
        return {"C": self.C, "K": self.K, "log_C": self.log_C,
                "alpha": self.alpha, "r_range": list(self.r_range),
                "n_samples": self.n_samples}


def kernel_bound_certificate(k: Kernel, profile: GrowthProfile, alpha: float,
                             r_min: float = 0.1, r_max: float = 50.0,
                             n_r: int = 40, n_theta: int = 9,
                             K_grid=None) -> KernelBoundCertificate:
    """Certify |e_V(z)| <= C h_M(K/|z|) on the unbounded subsector S_alpha.

    K is searched ascending over a log grid; a candidate is rejected
    when the per-shell log-ratio keeps climbing toward |z| -> infinity
    (the decay of the kernel is then too weak against h_M at that K) or
    when h_M(K/|z|) is still 1 on the outermost decade (vacuous bound).
    """
    if alpha >= k.sector_gamma:
        raise InvalidParameterError(
            f"alpha={alpha:.4g} must be strictly inside the kernel sector "
            f"({k.sector_gamma:.4g})")
    if K_grid is None:
        K_grid = np.geomspace(1e-3, 1e3, 64)
    radii = np.geomspace(r_min, r_max, n_r)
    thetas = np.linspace(-alpha * math.pi / 2.0, alpha * math.pi / 2.0, n_theta)
    shell_log = np.empty(n_r)
    for i, r in enumerate(radii):
        vals = []
        for t in thetas:
            value = k(PolarPoint(float(r), float(t)))
            vals.append(math.log(abs(value)) if value != 0.0 else -math.inf)
        shell_log[i] = max(vals)
    top = radii >= radii[-1] / 10.0
    for K in K_grid:
        h_terms = np.array([profile.bigM(float(r) / K) for r in radii])
        if not np.all(h_terms[top] > 0.0):
            continue
        shells = shell_log + h_terms
        if escaping_trend(radii, shells, toward="inf"):
            continue
        finite = shells[np.isfinite(shells)]
        log_c = float(np.max(finite))
        return KernelBoundCertificate(
            C=math.exp(log_c) if log_c < 700.0 else math.inf,
            K=float(K), log_C=log_c, alpha=alpha,
            r_range=(r_min, r_max), n_samples=n_r * n_theta)
    raise CertificationFailureError(
        "no K in the grid bounds |e_V(z)| by C h_M(K/|z|): kernel decay "
        "is too weak for this sequence",
        diagnostics={"alpha": alpha, "r_range": [r_min, r_max]},
    )


@dataclass(frozen=True)
class MomentEquivalence:
    L: float
    H: float
    verdict: str
    drift: DriftReport
    p_range: tuple[int, int]

    def to_dict(self):
        return {"L": self.L, "H": self.H, "verdict": self.verdict,
                "drift": self.drift.to_dict(), "p_range": list(self.p_range)}


def equivalence_certificate(table: MomentTable, seq, p_range=None
                            ) -> MomentEquivalence:
    """Equivalence constants between the moment sequence and M.

    L/H are min/max of (m_V(p)/M_p)^(1/p); the verdict is plausible when
    the ratio has no monotone drift over the last half of the range.
    """
    hi_max = len(table) - 1
    lo, hi = p_range if p_range is not None else (1, hi_max)
    if lo < 1 or hi > hi_max:
        raise InvalidParameterError("p_range outside the table")
    p = np.arange(lo, hi + 1)
    log_m = table.log_values[lo: hi + 1]
    log_M = seq.log_values(hi)[lo: hi + 1]
    y = (log_m - log_M) / p
    drift = ratio_drift(p, y, window=((lo + hi) // 2, hi))
    return MomentEquivalence(
        L=float(np.exp(y.min())), H=float(np.exp(y.max())),
        verdict=drift.verdict, drift=drift, p_range=(lo, hi))


def FV_eval(table: MomentTable, z: complex, tol: float = 1e-12) -> complex:
    """Evaluate the entire series F_V(z) = sum z^n / m_V(n).

    Terms are accumulated incrementally in linear space (the log-space
    table keeps the per-term scaling stable); summation stops when the
    geometric tail bound drops below ``tol`` relative to the partial
    sum.  Raises TableExhaustedError when the table is too short for
    the requested argument.
    """
    z = complex(z)
    total = 0.0 + 0.0j
    term = cmath.exp(-table.log_values[0])
    total += term
    azr = abs(z)
    for n in range(1, len(table)):
        quot = math.exp(table.log_values[n] - table.log_values[n - 1])
        term = term * z / quot
        total += term
        if n + 1 < len(table):
            next_quot = math.exp(table.log_values[n + 1] - table.log_values[n])
            ratio = azr / next_quot
            if ratio < 0.9:
                # moment quotients are nondecreasing, so the tail is
                # dominated by the geometric series with this ratio
                tail = abs(term) * ratio / (1.0 - ratio)
                if tail <= tol * max(abs(total), 1e-300):
                    return total
    raise TableExhaustedError(
        f"moment table of length {len(table)} too short to evaluate F_V "
        f"at |z| = {azr:.4g} to tolerance {tol:g}")


@dataclass(frozen=True)
class KomatsuCertificate:
    C_tilde: float
    K_tilde: float
    coeff_c: float
    coeff_k: float
    r_range: tuple[float, float]

    def to_dict(self):
        return {"C_tilde": self.C_tilde, "K_tilde": self.K_tilde,
                "coeff_c": self.coeff_c, "coeff_k": self.coeff_k,
                "r_range": list(self.r_range)}


def komatsu_growth_check(table: MomentTable, profile: GrowthProfile,
                         r_min: float | None = None, r_max: float | None = None,
                         n_r: int = 32, K_grid=None) -> KomatsuCertificate:
    """Certify |F_V(z)| <= C e^{M(K |z|)} and the coefficient-side bound.

    The growth side fits (C, K) on the real-axis grid (F_V has positive
    coefficients, so the axis carries the max on circles); the
    coefficient side fits (c, k) with 1/m_V(n) <= c k^n / M_n.  The
    default radial range is derived from the table length so the series
    tail bound stays certifiable.
    """
    if K_grid is None:
        K_grid = np.geomspace(0.25, 64.0, 48)
    if r_max is None:
        last_quot = math.exp(table.log_values[-1] - table.log_values[-2])
        r_max = 0.25 * last_quot
    if r_min is None:
        r_min = r_max / 40.0
    radii = np.geomspace(r_min, r_max, n_r)
    log_f = np.empty(n_r)
    for i, r in enumerate(radii):
        log_f[i] = math.log(abs(FV_eval(table, complex(r, 0.0), tol=1e-9)))
    for K in K_grid:
        # a K too small to matter cannot hide growth: with a flat M-term
        # the escape test sees log F_V itself rising
        shells = log_f - np.array([profile.bigM(K * float(r)) for r in radii])
        if escaping_trend(radii, shells, toward="inf"):
            continue
        log_c = float(np.max(shells))
        n = np.arange(1, len(table))
        y = (profile.seq.log_values(len(table) - 1)[1:]
             - table.log_values[1:]) / n
        log_k = float(np.max(y))
        coeff_c = float(np.exp(np.max(
            profile.seq.log_values(len(table) - 1)[1:]
            - table.log_values[1:] - n * log_k)))
        return KomatsuCertificate(
            C_tilde=math.exp(log_c) if log_c < 700.0 else math.inf,
            K_tilde=float(K), coeff_c=coeff_c, coeff_k=math.exp(log_k),
            r_range=(r_min, r_max))
    raise CertificationFailureError(
        "F_V grows faster than e^{M(K|z|)} for every K in the grid",
        diagnostics={"r_range": [r_min, r_max]},
    )


# ---------------------------------------------------------------------------
# piecewise-exact h_M integral bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HmIntegralBound:
    C: float
    D: float
    p_range: tuple[int, int]
    K: float
    log_integrals: tuple[float, ...] = field(repr=False, default=())
    drift: DriftReport | None = None

    def to_dict(self):
        out = {"C": self.C, "D": self.D, "p_range": list(self.p_range),
               "K": self.K}
        if self.drift is not None:
            out["drift"] = self.drift.to_dict()
        return out


def _log_hM_integral(profile: GrowthProfile, K: float, p: int) -> float:
    """log of integral_0^inf t^(p-1) h_M(K/t) dt, summed segment by segment.

    h_M(K/t) is piecewise monomial in t, so every segment integrates in
    closed form; the series over segments is truncated once terms fall
    45 log-units below the running total.
    """
    log_K = math.log(K)
    terms = []
    # region t in (0, K m_0]: h = 1
    terms.append(p * (log_K + float(profile.log_quotients(1)[0]))
                 - math.log(p))
    j = 1
    running = logsumexp(terms)
    while True:
        profile.ensure_quotients(j + 1)
        logm = profile.log_quotients(j + 1)
        logM = profile.log_M_values(j)
        gap = float(logm[j] - logm[j - 1])
        if j == p:
            if gap > 0.0:
                terms.append(p * log_K + float(logM[p]) + math.log(gap))
        else:
            width = abs(p - j) * gap
            if gap > 0.0:
                anchor = float(logm[j]) if j < p else float(logm[j - 1])
                log_term = (p * log_K + float(logM[j]) + (p - j) * anchor
                            + math.log(-math.expm1(-width))
                            - math.log(abs(p - j)))
                terms.append(log_term)
        if len(terms) % 16 == 0:
            running = logsumexp(terms)
        if j > p + 8 and terms and terms[-1] < running - 45.0:
            break
        if j > 1000 * (p + 2):
            raise CertificationFailureError(
                "h_M integral did not converge over the quotient segments")
        j += 1
    return float(logsumexp(terms))


def hM_integral_bound(profile: GrowthProfile, K: float, p_range=(1, 30)
                      ) -> HmIntegralBound:
    """Envelope constants (C, D) with the integral <= C D^p M_p.

    The integrals are piecewise exact (no quadrature); the fit reports a
    drift verdict on (integral / M_p)^(1/p), which is bounded exactly
    when the kernel-to-sequence coupling is healthy.
    """
    lo, hi = p_range
    if lo < 1:
        raise InvalidParameterError("the integral bound needs p >= 1")
    p = np.arange(lo, hi + 1)
    log_I = np.array([_log_hM_integral(profile, K, int(q)) for q in p])
    log_M = profile.seq.log_values(hi)[lo: hi + 1]
    y = (log_I - log_M) / p
    log_D = float(np.max(y))
    log_C = float(np.max(log_I - log_M - p * log_D))
    drift = ratio_drift(p, y, window=((lo + hi) // 2, hi))
    return HmIntegralBound(
        C=math.exp(log_C), D=math.exp(log_D), p_range=(lo, hi), K=K,
        log_integrals=tuple(float(v) for v in log_I), drift=drift)
