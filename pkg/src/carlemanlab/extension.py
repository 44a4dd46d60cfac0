"""Truncated-Laplace extension operator and asymptotic certification.

Given coefficients (a_p) in a weighted class, the formal Borel series
g(u) = sum a_p / (p! m_V(p)) u^p converges on a disc whose radius comes
from a geometric envelope fit; the extension

    f(z) = integral_0^{R0} e_V(u/z) g(u) du/u

has (a_p) as its asymptotic coefficient sequence.  This module builds
the operator, certifies asymptotic expansions |f - S_N| <= C A^N M_N
|z|^N over sample grids, and recovers coefficients numerically by
Richardson-extrapolated divided differences along a ray (the
coefficients are radial limits, so no contour integrals are available).
"""

from __future__ import annotations

import cmath
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CertificationFailureError,
    InvalidParameterError,
    NotInClassError,
    OutOfSectorError,
)
from .fits import escaping_trend, geometric_envelope
from .moments import Kernel, MomentTable
from .proximate import PolarPoint
from .quadrature import integrate_left_tail
from .sequences import SequenceModel

__all__ = [
    "CoefficientSequence",
    "BorelSum",
    "AsymptoticCertificate",
    "RecoveredCoefficients",
    "RightInverseConfig",
    "RightInverseReport",
    "ExtensionOperator",
    "lambda_norm",
    "formal_borel",
    "extend",
    "asymptotic_error",
    "certify_expansion",
    "borel_recover",
    "right_inverse_check",
]

MAX_RECOVERY_ORDER = 15  # double-precision limit for sequential extraction


@dataclass(frozen=True)
class CoefficientSequence:
    """A finite (or prefix-materialized) coefficient sequence a_p."""

    values: tuple
    declared: tuple[float, float] | None = None  # (C, A) class bound
    generator_backed: bool = False

    def __len__(self):
        return len(self.values)

    def __getitem__(self, p):
        return self.values[p]

    @classmethod
    def from_values(cls, values, declared=None):
        return cls(values=tuple(complex(v) for v in values), declared=declared)

    @classmethod
    def from_generator(cls, fn, length, declared=None):
        """Materialize a prefix of a generator-backed sequence."""
        vals = tuple(complex(fn(p)) for p in range(length))
        return cls(values=vals, declared=declared, generator_backed=True)

    @classmethod
    def from_json(cls, source):
        """Load {"coeffs_re": [...], "coeffs_im": [...], "A": ...}."""
        if isinstance(source, (str, os.PathLike)):
            with open(source, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        else:
            payload = dict(source)
        re = payload.get("coeffs_re")
        if re is None:
            raise InvalidParameterError("coefficient file needs 'coeffs_re'")
        im = payload.get("coeffs_im") or [0.0] * len(re)
        if len(im) != len(re):
            raise InvalidParameterError(
                "'coeffs_im' must match 'coeffs_re' in length")
        declared = None
        if "A" in payload:
            declared = (float(payload.get("C", 1.0)), float(payload["A"]))
        return cls(values=tuple(complex(r, i) for r, i in zip(re, im)),
                   declared=declared)

    def to_json(self):
        return {
            "coeffs_re": [v.real for v in self.values],
            "coeffs_im": [v.imag for v in self.values],
            **({"A": self.declared[1], "C": self.declared[0]}
               if self.declared else {}),
        }


def lambda_norm(a: CoefficientSequence, seq: SequenceModel, A: float) -> float:
    """sup_p |a_p| / (A^p p! M_p) over the available prefix.

    For generator-backed sequences this is a lower bound on the true
    norm (the sup runs over the materialized prefix only).
    """
    if A <= 0:
        raise InvalidParameterError("class parameter A must be positive")
    log_A = math.log(A)
    best = 0.0
    for p, v in enumerate(a.values):
        if v == 0:
            continue
        log_w = (math.log(abs(v)) - p * log_A - math.lgamma(p + 1.0)
                 - seq.log(p))
        best = max(best, math.exp(log_w))
    return best


# ---------------------------------------------------------------------------
# formal Borel transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BorelSum:
    """The formal Borel series with its fitted geometric envelope."""

    coefficients: tuple
    C2: float | None
    D2: float | None
    radius_lower_bound: float | None
    R0: float
    eps: float
    tail_bound: float = 0.0

    def __call__(self, u) -> complex:
        total = 0.0 + 0.0j
        for b in reversed(self.coefficients):
            total = total * u + b
        return total

    def to_dict(self):
        return {"C2": self.C2, "D2": self.D2,
                "radius_lower_bound": self.radius_lower_bound,
                "R0": self.R0, "eps": self.eps, "tail_bound": self.tail_bound,
                "length": len(self.coefficients)}


def formal_borel(a: CoefficientSequence, table: MomentTable,
                 eps: float = 0.1) -> BorelSum:
    """Borel coefficients b_p = a_p / (p! m_V(p)) and the radius choice.

    The envelope |b_p| <= C2 D2^p is fitted log-linearly (with the
    intercept lifted so the bound holds on the whole prefix) and the
    truncation point is R0 = (1 - eps)/D2; degenerate fits (at most one
    nonzero coefficient) default to R0 = 1.  Coefficients growing
    super-geometrically have no envelope: the sequence lies in no
    weighted class and NotInClassError is raised.
    """
    if not 0 < eps < 1:
        raise InvalidParameterError("eps must be in (0, 1)")
    if len(a) > len(table):
        raise InvalidParameterError(
            f"moment table ({len(table)} entries) shorter than the "
            f"coefficient sequence ({len(a)})")
    coeffs = []
    logs = []
    for p, v in enumerate(a.values):
        scale = math.exp(-math.lgamma(p + 1.0) - table.log_value(p))
        coeffs.append(v * scale)
        logs.append(math.log(abs(v)) - math.lgamma(p + 1.0)
                    - table.log_value(p) if v != 0 else -math.inf)
    fit = geometric_envelope(logs)
    if fit.quad_coefficient > 0.01:
        raise NotInClassError(
            "Borel coefficients grow super-geometrically "
            f"(quadratic log coefficient {fit.quad_coefficient:.3g}); the "
            "sequence lies in no weighted class for this moment table")
    if fit.degenerate:
        return BorelSum(coefficients=tuple(coeffs), C2=None, D2=None,
                        radius_lower_bound=None, R0=1.0, eps=eps)
    r0 = (1.0 - eps) / fit.D
    tail = fit.C * (1.0 - eps) ** len(a) / eps
    return BorelSum(coefficients=tuple(coeffs), C2=fit.C, D2=fit.D,
                    radius_lower_bound=1.0 / fit.D, R0=r0, eps=eps,
                    tail_bound=tail)


# ---------------------------------------------------------------------------
# the extension operator
# ---------------------------------------------------------------------------

class ExtensionOperator:
    """Truncated-Laplace extension of a coefficient sequence.

    Evaluations integrate e_V(u/z) g(u) du/u over (0, R0] on the log
    axis with the shared adaptive panels (real and imaginary parts
    together).
    """

    def __init__(self, a: CoefficientSequence, kernel: Kernel,
                 table: MomentTable, r0: float | None = None,
                 eps: float = 0.1, tol: float = 1e-10):
        self.coefficients = a
        self.kernel = kernel
        self.table = table
        self.borel = formal_borel(a, table, eps)
        self.r0 = float(r0) if r0 is not None else self.borel.R0
        self.tol = tol
        # finite prefixes evaluate as polynomials anywhere; the envelope
        # radius only marks where the fitted geometric bound applies
        self.r0_within_envelope = (
            self.borel.radius_lower_bound is None
            or self.r0 <= self.borel.radius_lower_bound)

    @property
    def sector_gamma(self) -> float:
        return self.kernel.sector_gamma

    def __call__(self, z: PolarPoint) -> complex:
        if abs(z.theta) >= self.sector_gamma * math.pi / 2.0:
            raise OutOfSectorError(
                f"arg(z)={z.theta:.4g} outside the extension sector "
                f"(half-opening {self.sector_gamma * math.pi / 2.0:.4g})")
        kern, g = self.kernel, self.borel
        inv_r, neg_t = 1.0 / z.r, -z.theta

        def integrand(x: float) -> complex:
            u = math.exp(x)
            return kern(PolarPoint(u * inv_r, neg_t)) * g(u)

        value, _ = integrate_left_tail(integrand, math.log(self.r0),
                                       tol_rel=self.tol)
        return value


def extend(a: CoefficientSequence, kernel: Kernel, table: MomentTable,
           r0: float | None, z: PolarPoint, tol: float = 1e-10) -> complex:
    """One-shot evaluation of the extension operator at z."""
    return ExtensionOperator(a, kernel, table, r0=r0, tol=tol)(z)


# ---------------------------------------------------------------------------
# asymptotic certification
# ---------------------------------------------------------------------------

def _partial_sum(a: CoefficientSequence, z: complex, N: int) -> complex:
    """Compensated partial sum sum_{p<N} a_p z^p / p!."""
    terms = []
    zp = 1.0 + 0.0j
    for p in range(min(N, len(a))):
        terms.append(a.values[p] * zp / math.factorial(p))
        zp *= z
    return complex(math.fsum(t.real for t in terms),
                   math.fsum(t.imag for t in terms))


def asymptotic_error(f_value: complex, a: CoefficientSequence,
                     z: PolarPoint, N: int) -> float:
    """E_N(z) = |f(z) - sum_{p<N} a_p z^p / p!| at a precomputed f(z)."""
    return abs(complex(f_value) - _partial_sum(a, z.to_complex(), N))


@dataclass(frozen=True)
class AsymptoticCertificate:
    C: float
    A: float
    N_range: tuple[int, int]
    alpha: float
    r0: float
    n_points: int
    residual_max: float
    per_N_A: tuple[float, ...] = field(repr=False, default=())

    @property
    def passed(self) -> bool:
        return (math.isfinite(self.C) and math.isfinite(self.A)
                and self.residual_max <= 0.0)

    def to_dict(self):
        return {"C": self.C, "A": self.A, "N_range": list(self.N_range),
                "alpha": self.alpha, "r0": self.r0,
                "n_points": self.n_points,
                "residual_max": self.residual_max,
                "per_N_A": list(self.per_N_A), "passed": self.passed}


def subsector_grid(alpha: float, r0: float, n_r: int = 24, n_rays: int = 5,
                   depth: float = 1e-3):
    """Deterministic sample grid on the bounded subsector (alpha, r0)."""
    radii = np.geomspace(r0 * depth, r0, n_r)
    rays = np.linspace(-alpha * math.pi / 2.0, alpha * math.pi / 2.0, n_rays)
    return [PolarPoint(float(r), float(t)) for r in radii for t in rays]


def certify_expansion(f, a: CoefficientSequence, seq: SequenceModel,
                      alpha: float, r0: float, N_range=(1, 15),
                      z_grid=None, n_r: int = 24, n_rays: int = 5,
                      noise_floor: float = 0.0) -> AsymptoticCertificate:
    """Fit constants (C, A) with E_N(z) <= C A^N M_N |z|^N on the grid.

    A is the envelope max of (E_N/(M_N |z|^N))^(1/N); C lifts the
    residuals to zero.  The certificate fails (raises) when for some N
    the per-shell ratio keeps climbing as |z| -> 0: the error then
    floors instead of vanishing at order N and no constants exist.
    Errors at or below ``noise_floor`` are treated as evaluator noise
    and excluded (pass the evaluation tolerance when f is numerical).
    """
    n_lo, n_hi = N_range
    if n_lo < 1:
        raise InvalidParameterError("certification starts at order N = 1")
    if z_grid is None:
        z_grid = subsector_grid(alpha, r0, n_r, n_rays)
    points = list(z_grid)
    f_vals = [complex(f(z)) for z in points]
    orders = range(n_lo, n_hi + 1)

    log_ratio = {}  # (z index, N) -> log E_N - N log|z| - log M_N
    floored = set()  # (z index, N) with error at or below the noise floor
    for i, z in enumerate(points):
        zc = z.to_complex()
        for N in orders:
            err = abs(f_vals[i] - _partial_sum(a, zc, N))
            if err <= noise_floor:
                floored.add((i, N))
                continue
            log_ratio[i, N] = (math.log(err) - N * math.log(z.r)
                               - seq.log(N))

    radii = sorted({z.r for z in points})
    failing = []
    per_N_A = []
    for N in orders:
        shells = []
        for r in radii:
            vals = [log_ratio[i, N] for i, z in enumerate(points)
                    if z.r == r and (i, N) in log_ratio]
            shells.append(max(vals) if vals else -math.inf)
        finite_r = [r for r, s in zip(radii, shells) if math.isfinite(s)]
        # a floored error at radii below every unmasked point means the
        # error demonstrably vanished there: no escape toward zero
        vanished_below = finite_r and any(
            z.r < finite_r[0] and (i, N) in floored
            for i, z in enumerate(points))
        if not vanished_below and escaping_trend(
                np.array(radii), np.array(shells), toward="zero"):
            failing.append(N)
        finite = [s for s in shells if math.isfinite(s)]
        per_N_A.append(math.exp(max(finite) / N) if finite else 0.0)
    if failing:
        raise CertificationFailureError(
            f"errors at orders {failing} do not vanish as z -> 0: the "
            "expansion envelope grows without bound",
            diagnostics={"failing_orders": failing},
        )
    if not log_ratio:
        # every error sat below the floor: expansion exact to tolerance
        return AsymptoticCertificate(C=1.0, A=1.0, N_range=(n_lo, n_hi),
                                     alpha=alpha, r0=r0,
                                     n_points=len(points), residual_max=0.0)
    log_A = max(v / N for (_, N), v in log_ratio.items())
    log_C = max(v - N * log_A for (_, N), v in log_ratio.items())
    residual_max = max(v - N * log_A - log_C
                       for (_, N), v in log_ratio.items())
    return AsymptoticCertificate(
        C=math.exp(log_C), A=math.exp(log_A), N_range=(n_lo, n_hi),
        alpha=alpha, r0=r0, n_points=len(points),
        residual_max=residual_max, per_N_A=tuple(per_N_A))


# ---------------------------------------------------------------------------
# coefficient recovery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecoveredCoefficients:
    values: tuple
    errors: tuple
    failed_at: int | None
    theta: float
    x0: float
    levels: int

    def __len__(self):
        return len(self.values)

    def to_dict(self):
        return {"values_re": [v.real for v in self.values],
                "values_im": [v.imag for v in self.values],
                "errors": list(self.errors), "failed_at": self.failed_at,
                "theta": self.theta, "x0": self.x0, "levels": self.levels}


def _richardson_best(samples, floors=None, ratio=math.sqrt(2.0)):
    """Ridders-style Richardson on a geometrically shrinking grid.

    samples[j] corresponds to x_j = x0 / ratio^j; the tableau eliminates
    successive powers of x.  An entry's error estimate combines its
    disagreement with the parents it was built from, the disagreement
    with the same-column entry one row deeper (vertical corroboration:
    one-sided geometric convergence fools the diagonal differences but
    not the vertical one), and the propagated noise floor of its
    parents.  ``floors[j]`` is the amplified noise floor of sample j;
    exact agreement between noise-floored entries is cancellation, not
    convergence, and cannot claim an error below the floor.
    """
    n = len(samples)
    if floors is None:
        floors = [0.0] * n
    # full tableau: T[j][k] built from samples j-k..j
    table = [[samples[0]]]
    fl = [[floors[0]]]
    for j in range(1, n):
        row = [samples[j]]
        row_floor = [floors[j]]
        for k in range(1, j + 1):
            fac = ratio**k
            extrap = row[k - 1] + (row[k - 1] - table[j - 1][k - 1]) \
                / (fac - 1.0)
            row.append(extrap)
            row_floor.append(max(row_floor[k - 1], fl[j - 1][k - 1]))
        table.append(row)
        fl.append(row_floor)

    best, best_err = samples[0], math.inf
    for j in range(n - 1):
        for k in range(len(table[j])):
            if k >= len(table[j + 1]):
                continue
            value = table[j][k]
            vertical = abs(value - table[j + 1][k])
            diag = abs(value - table[j][k - 1]) if k > 0 else vertical
            errt = max(vertical, min(diag, vertical * 4.0), fl[j][k])
            if errt < best_err:
                best, best_err = value, errt
    if not math.isfinite(best_err):
        best, best_err = table[-1][-1], max(abs(table[-1][-1]), fl[-1][-1])
    return best, best_err


def borel_recover(f, seq: SequenceModel, n_max: int, theta: float = 0.0,
                  x0: float = 0.25, levels: int = 16,
                  f_noise: float = 1e-12, refine_sweeps: int = 2,
                  grid_ratio: float = math.sqrt(2.0),
                  fail_tol: float | None = None) -> RecoveredCoefficients:
    """Recover asymptotic coefficients a_p = f^(p)(0) along a ray.

    Sequential extraction: a_p is the Richardson-extrapolated limit of
    p! (f(x) - sum_{q<p} a_q x^q / q!) / x^p on the geometric grid
    x_j = x0 ratio^{-j}.  The default ratio sqrt(2) keeps several grid
    points inside the window where neither the flat remainder (large x)
    nor the amplified evaluation noise (small x) swamps a coefficient;
    plain halving leaves at most one usable point there for high
    orders.  After the forward pass, Gauss-Seidel refinement sweeps
    re-extract each order with every other estimated order subtracted.
    ``f_noise`` is the relative accuracy of the f evaluations
    (quadrature tolerance for numerical f); it sets the amplified noise
    floor p! noise |f| / x^p below which a level carries no information
    about order p.  Orders beyond 15 are refused in double precision.
    With ``fail_tol`` set, extraction stops at the first order whose
    error estimate exceeds it (earlier coefficients are still
    returned).
    """
    if n_max > MAX_RECOVERY_ORDER:
        raise InvalidParameterError(
            f"coefficient recovery is limited to order {MAX_RECOVERY_ORDER}")
    if levels < 3:
        raise InvalidParameterError("need at least 3 grid levels")
    if grid_ratio <= 1.0:
        raise InvalidParameterError("the grid ratio must exceed 1")
    noise = max(f_noise, 4.0 * np.finfo(float).eps)
    xs = [x0 * grid_ratio**-j for j in range(levels)]
    f_vals = [complex(f(PolarPoint(x, theta))) for x in xs]
    zs = [cmath.rect(x, theta) for x in xs]
    n_pts = len(xs)

    def extract(p, partials, prior_errors):
        fact = float(math.factorial(p))
        samples = [(f_vals[j] - partials[j]) * fact / zs[j]**p
                   for j in range(n_pts)]
        floors = []
        for j in range(n_pts):
            floor = noise * max(abs(f_vals[j]), abs(partials[j])) * fact \
                / xs[j]**p
            # errors committed at lower orders pollute this one with
            # negative powers of x; price that in so deep rows where the
            # pollution dominates are not trusted
            for q, err_q in enumerate(prior_errors[:p]):
                floor += err_q * fact / math.factorial(q) * xs[j]**(q - p)
            floors.append(floor)
        # gate out depths where the floor rivals the signal scale:
        # samples there carry no information about this order
        scale = max(abs(s) for s in samples[:3])
        usable = n_pts
        for j in range(n_pts):
            if floors[j] > 0.25 * scale and j >= 4:
                usable = j
                break
        return _richardson_best(samples[:usable], floors[:usable],
                                ratio=grid_ratio)

    recovered = []
    errors = []
    partials = [0.0 + 0.0j] * n_pts
    for p in range(n_max + 1):
        value, err = extract(p, partials, errors)
        if fail_tol is not None and err > fail_tol:
            return RecoveredCoefficients(
                values=tuple(recovered), errors=tuple(errors), failed_at=p,
                theta=theta, x0=x0, levels=levels)
        recovered.append(value)
        errors.append(err)
        fact = float(math.factorial(p))
        for j in range(n_pts):
            partials[j] += value * zs[j]**p / fact

    for _ in range(refine_sweeps):
        for p in range(n_max + 1):
            fact = float(math.factorial(p))
            without_p = [partials[j] - recovered[p] * zs[j]**p / fact
                         for j in range(n_pts)]
            off_errors = errors[:p] + [0.0] + errors[p + 1:]
            value, err = extract(p, without_p, off_errors)
            recovered[p] = value
            errors[p] = err
            for j in range(n_pts):
                partials[j] = without_p[j] + value * zs[j]**p / fact

    return RecoveredCoefficients(
        values=tuple(recovered), errors=tuple(errors), failed_at=None,
        theta=theta, x0=x0, levels=levels)


# ---------------------------------------------------------------------------
# round trip
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RightInverseConfig:
    A: float = 1.0
    eps: float = 0.1
    r0: float | None = None
    quad_tol: float = 1e-13
    n_max: int = 8
    theta: float = 0.0
    x0: float | None = None  # None: adapt to the Borel envelope rate
    levels: int = 20

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("A", "eps", "r0", "quad_tol", "n_max", "theta", "x0",
                 "levels")}


@dataclass(frozen=True)
class RightInverseReport:
    weighted_errors: tuple
    max_weighted_error: float
    recovered: RecoveredCoefficients
    config: RightInverseConfig

    def to_dict(self):
        return {"weighted_errors": list(self.weighted_errors),
                "max_weighted_error": self.max_weighted_error,
                "recovered": self.recovered.to_dict(),
                "config": self.config.to_dict()}


def right_inverse_check(a: CoefficientSequence, kernel: Kernel,
                        table: MomentTable, seq: SequenceModel,
                        config: RightInverseConfig = RightInverseConfig()
                        ) -> RightInverseReport:
    """Extend the coefficients, recover them back, report the weighted gap.

    The distance is max_p |a_p - recovered_p| / (A^p p! M_p) for
    p <= min(n_max, len(a) - 1): the norm of the recovery defect in the
    weighted sequence space.
    """
    op = ExtensionOperator(a, kernel, table, r0=config.r0, eps=config.eps,
                           tol=config.quad_tol)
    n_top = min(config.n_max, len(a) - 1)
    x0 = config.x0
    if x0 is None:
        # start where the first-order correction of the highest extracted
        # order is contractive (its ratio is ~ D2 m_p x, with m_p the
        # sequence quotient at that order) while keeping the top rows
        # shallow enough that error feedback between orders damps out
        rate = max(op.borel.D2 or 0.5, 0.5)
        m_top = math.exp(seq.log_quotient(n_top))
        x0 = min(0.25, 0.65 / (rate * m_top))
    # the panel-pair error estimate driving quad_tol overstates the true
    # quadrature error by orders of magnitude on smooth integrands; the
    # measured accuracy against closed forms is near machine epsilon
    rec = borel_recover(op, seq, n_top, theta=config.theta, x0=x0,
                        levels=config.levels,
                        f_noise=config.quad_tol / 50.0)
    weighted = []
    log_A = math.log(config.A)
    for p in range(n_top + 1):
        gap = abs(rec.values[p] - complex(a.values[p]))
        scale = math.exp(p * log_A + math.lgamma(p + 1.0) + seq.log(p))
        weighted.append(gap / scale)
    return RightInverseReport(
        weighted_errors=tuple(weighted),
        max_weighted_error=max(weighted),
        recovered=rec, config=config)
