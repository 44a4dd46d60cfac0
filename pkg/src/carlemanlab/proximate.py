"""Proximate-order weights, their validation, and flat functions.

A :class:`Weight` wraps an evaluator V on polar points of the Riemann
surface of the logarithm.  The library never constructs such weights
from a proximate order; it validates supplied ones against the
defining properties numerically (:func:`validate_weight`), fits the
sectorial lower bound Re V(z) >= b V(|z|) (:func:`sector_lower_bound`),
and builds flat functions G(z) = exp(-V(1/z)) whose flatness is
certified against h_M-decay (:func:`flatness_certificate`).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    CertificationFailureError,
    InvalidParameterError,
    LowerBoundFailureError,
    OutOfSectorError,
    WeightEvaluationError,
)
from .fits import escaping_trend
from .growth import GrowthProfile, omega_index

__all__ = [
    "PolarPoint",
    "Weight",
    "WeightValidation",
    "FlatFunction",
    "FlatnessCertificate",
    "gevrey_weight",
    "real_weight_from_M",
    "user_weight",
    "parse_weight_spec",
    "validate_weight",
    "sector_lower_bound",
    "flat_function",
    "lift_flat",
    "flatness_certificate",
]

KIND_SECTORIAL = "sectorial"
KIND_REAL_AXIS = "real-axis"


@dataclass(frozen=True)
class PolarPoint:
    """A point of the Riemann surface of the logarithm: modulus and
    unrestricted argument."""

    r: float
    theta: float = 0.0

    def __post_init__(self):
        if self.r <= 0:
            raise InvalidParameterError("polar modulus must be positive")

    def conjugate(self) -> "PolarPoint":
        return PolarPoint(self.r, -self.theta)

    def inverse(self) -> "PolarPoint":
        return PolarPoint(1.0 / self.r, -self.theta)

    def to_complex(self) -> complex:
        return cmath.rect(self.r, self.theta)


def _safe_pow(r: float, k: float) -> float:
    try:
        return r**k
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class Weight:
    """A proximate-order weight V.

    ``kind`` is "sectorial" (analytic on S_{sector_gamma}) or
    "real-axis" (defined for positive reals only, usable for moment
    quadrature but rejected by kernel and extension operators).
    ``rho_target`` is the intended limit of the proximate order, the
    reciprocal of the order of quasianalyticity of the matching class.
    """

    name: str
    func: Callable[[PolarPoint], complex]
    kind: str
    rho_target: float
    sector_gamma: float | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, z: PolarPoint) -> complex:
        if self.kind == KIND_REAL_AXIS and z.theta != 0.0:
            raise WeightEvaluationError(
                f"weight {self.name!r} is defined on the positive axis only"
            )
        try:
            value = self.func(z)
        except (ArithmeticError, ValueError) as exc:
            raise WeightEvaluationError(
                f"weight {self.name!r} failed at r={z.r:.6g}, "
                f"theta={z.theta:.6g}: {exc}"
            ) from exc
        return complex(value)

    def on_axis(self, r: float) -> float:
        return self(PolarPoint(r, 0.0)).real

    @property
    def is_sectorial(self) -> bool:
        return self.kind == KIND_SECTORIAL

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind,
                "rho_target": self.rho_target,
                "sector_gamma": self.sector_gamma, "params": self.params}


def gevrey_weight(k: float) -> Weight:
    """The monomial weight V(z) = z^k, sectorial on S_{2/k}."""
    if k <= 0:
        raise InvalidParameterError("monomial weight needs k > 0")

    def func(z: PolarPoint) -> complex:
        return cmath.rect(_safe_pow(z.r, k), k * z.theta)

    return Weight(name=f"gevrey:{format(k, 'g')}", func=func,
                  kind=KIND_SECTORIAL, rho_target=k, sector_gamma=2.0 / k,
                  params={"kind": "monomial", "k": k, "coeff": 1.0})


def real_weight_from_M(profile: GrowthProfile, rho_target: float | None = None,
                       omega_prefix: int = 1000) -> Weight:
    """Real-axis oracle weight V(t) = M(t), so e^{-V(t)} = h_M(1/t) exactly.

    Non-analytic by construction: admissible for moment quadrature only.
    """
    if rho_target is None:
        rho_target = 1.0 / omega_index(profile, omega_prefix).value

    def func(z: PolarPoint) -> complex:
        return complex(profile.bigM(z.r))

    return Weight(name=f"fromM:{profile.seq.name}", func=func,
                  kind=KIND_REAL_AXIS, rho_target=rho_target,
                  params={"kind": "fromM", "sequence": profile.seq.name})


def _monomial_builder(defn):
    k = float(defn["k"])
    coeff = float(defn.get("coeff", 1.0))
    if k <= 0:
        raise InvalidParameterError("monomial weight needs k > 0")

    def func(z: PolarPoint) -> complex:
        return coeff * cmath.rect(_safe_pow(z.r, k), k * z.theta)

    return func


WEIGHT_BUILDERS = {"monomial": _monomial_builder}


def user_weight(defn: dict, gamma: float, rho_target: float) -> Weight:
    """Wrap a user-supplied expression record as a sectorial weight.

    The record is a tagged dict, e.g. {"kind": "monomial", "k": 2.0};
    validation is NOT implied, run validate_weight afterwards.
    """
    kind = defn.get("kind")
    builder = WEIGHT_BUILDERS.get(kind)
    if builder is None:
        raise WeightEvaluationError(f"unknown weight expression tag {kind!r}")
    return Weight(name=f"user:{kind}", func=builder(defn),
                  kind=KIND_SECTORIAL, rho_target=rho_target,
                  sector_gamma=gamma, params=dict(defn))


def parse_weight_spec(spec: str, profile: GrowthProfile | None = None) -> Weight:
    """CLI mini-language: gevrey:<k> (alias powz:<k>), fromM (real-axis
    oracle, needs a growth profile), file:<path> with a JSON expression
    record {"kind": ..., "gamma": ..., "rho_target": ...}."""
    head, _, rest = spec.partition(":")
    if head in ("gevrey", "powz"):
        try:
            return gevrey_weight(float(rest))
        except (TypeError, ValueError) as exc:
            raise InvalidParameterError(f"bad weight spec {spec!r}") from exc
    if head == "fromM":
        if profile is None:
            raise InvalidParameterError(
                "weight spec 'fromM' needs a sequence to derive the oracle "
                "weight from")
        return real_weight_from_M(profile)
    if head == "file":
        with open(rest, "r", encoding="utf-8") as fh:
            record = json.load(fh)
        try:
            gamma = float(record.pop("gamma"))
            rho_target = float(record.pop("rho_target"))
        except KeyError as exc:
            raise InvalidParameterError(
                "weight expression records need 'gamma' and 'rho_target'"
            ) from exc
        return user_weight(record, gamma=gamma, rho_target=rho_target)
    raise InvalidParameterError(f"unknown weight spec {spec!r}")


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropertyCheck:
    passed: bool
    skipped: bool = False
    warnings: int = 0
    detail: str = ""

    def to_dict(self):
        out = {"passed": self.passed}
        if self.skipped:
            out["skipped"] = True
        if self.warnings:
            out["warnings"] = self.warnings
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass(frozen=True)
class WeightValidation:
    checks: dict
    b: float | None
    R0: float | None
    equivalence_sup_residual: float
    equivalence_slope: float
    equivalence_band: tuple[float, float]
    trend_to_zero: bool

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values() if not c.skipped)

    def to_dict(self):
        return {
            "checks": {k: v.to_dict() for k, v in self.checks.items()},
            "b": self.b,
            "R0": self.R0,
            "equivalence_sup_residual": self.equivalence_sup_residual,
            "equivalence_slope": self.equivalence_slope,
            "equivalence_band": list(self.equivalence_band),
            "trend_to_zero": self.trend_to_zero,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ValidationGrids:
    r_min: float = 1e-2
    r_max: float = 1e3
    n_r: int = 120
    angle_fractions: tuple[float, ...] = (0.25, 0.75)
    moduli: tuple[float, ...] = (0.5, 2.0)
    bound_alpha: float | None = None  # default: 0.9 / rho_target

    def radial(self):
        return np.geomspace(self.r_min, self.r_max, self.n_r)


def validate_weight(weight: Weight, profile: GrowthProfile,
                    grids: ValidationGrids | None = None) -> WeightValidation:
    """Check the defining weight properties numerically on grids.

    Radial checks: positivity and monotonicity of V(r), strict convexity
    of t -> V(e^t), strict concavity of log V(r) (second differences and
    chord tests with a -1e-9 tolerance; isolated strictness failures are
    warnings).  Angular checks (sectorial weights only): the homogeneity
    limit V(zr)/V(r) -> z^rho and conjugate symmetry, plus the fitted
    sectorial lower bound.  Finally the residual
    (log V(r)/log r - d(r)) * log r = log V(r) - log M(r) is profiled:
    a bounded band suffices for flat-function constructions, an exact
    proximate-order match requires the trend to vanish; both are
    reported.
    """
    grids = grids or ValidationGrids()
    r = grids.radial()
    v = np.array([weight.on_axis(float(x)) for x in r])
    checks: dict[str, PropertyCheck] = {}

    checks["positive_increasing"] = PropertyCheck(
        passed=bool(np.all(v > 0.0) and np.all(np.diff(v) >= -1e-12)),
        detail=f"V({r[0]:.3g})={v[0]:.6g}, V({r[-1]:.3g})={v[-1]:.6g}",
    )

    # strict convexity of V(e^t): uniform grid in t = log r
    d2 = np.diff(v, 2)
    viol = int(np.sum(d2 < -1e-9 * np.maximum(1.0, np.abs(v[1:-1]))))
    flat_pts = int(np.sum(np.abs(d2) <= 1e-9 * np.maximum(1.0, np.abs(v[1:-1]))))
    checks["convex_in_log"] = PropertyCheck(passed=viol == 0, warnings=flat_pts)

    # strict concavity of log V(r) in r: chord test on consecutive triples,
    # restricted to the part of the grid where V is positive
    pos = v > 0.0
    rp, logv = r[pos], np.log(v[pos])
    if len(logv) >= 3:
        r1, r2, r3 = rp[:-2], rp[1:-1], rp[2:]
        chord = (logv[:-2] * (r3 - r2) + logv[2:] * (r2 - r1)) / (r3 - r1)
        conc_viol = int(np.sum(logv[1:-1] < chord - 1e-9))
        conc_flat = int(np.sum(np.abs(logv[1:-1] - chord) <= 1e-9))
        checks["log_concave"] = PropertyCheck(
            passed=conc_viol == 0, warnings=conc_flat,
            detail="" if pos.all() else
            f"restricted to {int(pos.sum())}/{len(r)} points with V > 0")
    else:
        checks["log_concave"] = PropertyCheck(
            passed=False, detail="V not positive on enough of the grid")

    if weight.is_sectorial:
        sector = weight.sector_gamma or (2.0 / weight.rho_target)
        rho = weight.rho_target
        half = sector * math.pi / 2.0
        samples = [PolarPoint(m, sign * f * half)
                   for m in grids.moduli
                   for f in grids.angle_fractions
                   for sign in (1.0, -1.0)]

        # homogeneity: V(z r)/V(r) -> z^rho along the radial grid
        decade = r[r >= r[-1] / 10.0]
        worst_first, worst_last = 0.0, 0.0
        for z in samples:
            target = cmath.rect(z.r**rho, rho * z.theta)
            res = [abs(weight(PolarPoint(z.r * float(x), z.theta))
                       / weight(PolarPoint(float(x), 0.0)) - target)
                   for x in decade]
            worst_first = max(worst_first, res[0])
            worst_last = max(worst_last, res[-1])
        homog_ok = worst_last <= max(1e-9, worst_first * (1.0 + 1e-9))
        checks["homogeneous_limit"] = PropertyCheck(
            passed=bool(homog_ok),
            detail=f"residual {worst_first:.3e} -> {worst_last:.3e} "
                   f"over the last radial decade",
        )

        sym = max(abs(weight(z.conjugate()) - weight(z).conjugate())
                  / max(1.0, abs(weight(z))) for z in samples)
        checks["conjugate_symmetry"] = PropertyCheck(
            passed=sym <= 1e-12, detail=f"max deviation {sym:.3e}")

        alpha = grids.bound_alpha
        if alpha is None:
            alpha = 0.9 / weight.rho_target
        try:
            b, r0 = sector_lower_bound(weight, alpha)
            checks["sector_lower_bound"] = PropertyCheck(
                passed=True, detail=f"alpha={alpha:.4g}, b={b:.6g}")
        except LowerBoundFailureError as exc:
            b, r0 = None, None
            checks["sector_lower_bound"] = PropertyCheck(
                passed=False, detail=str(exc))
    else:
        b, r0 = None, None
        for name in ("homogeneous_limit", "conjugate_symmetry",
                     "sector_lower_bound"):
            checks[name] = PropertyCheck(
                passed=True, skipped=True,
                detail="real-axis weight: angular checks skipped")

    # equivalence with d(r): residual (log V/log r - d(r)) log r, which is
    # log V(r) - log M(r); profiled on the part of the grid with
    # M(r) >= 1, away from the logarithmic singularity where M crosses 0
    resid = []
    for x in r:
        x = float(x)
        vx = weight.on_axis(x)
        if vx <= 0.0 or x <= 1.0:
            continue
        big_m = profile.bigM(x)
        if big_m >= 1.0:
            resid.append((x, math.log(vx) - math.log(big_m)))
    if len(resid) < 8:
        checks["equivalent_to_d"] = PropertyCheck(
            passed=False,
            detail="too few grid points with V > 0 and M(r) >= 1")
        return WeightValidation(checks=checks, b=b, R0=r0,
                                equivalence_sup_residual=math.nan,
                                equivalence_slope=math.nan,
                                equivalence_band=(math.nan, math.nan),
                                trend_to_zero=False)
    rr = np.array([p[0] for p in resid])
    res = np.array([p[1] for p in resid])
    sup_res = float(np.max(np.abs(res)))
    slope = float(np.polyfit(np.log(rr), np.abs(res), 1)[0])
    last = np.abs(res[rr >= rr[-1] / 10.0])
    band = (float(res[rr >= rr[-1] / 10.0].min()),
            float(res[rr >= rr[-1] / 10.0].max()))
    checks["equivalent_to_d"] = PropertyCheck(
        passed=slope <= 0.05,
        detail=f"|residual| slope {slope:.4f} vs log r; sup {sup_res:.4g}")
    trend_to_zero = bool(np.mean(last) <= 0.02)

    return WeightValidation(checks=checks, b=b, R0=r0,
                            equivalence_sup_residual=sup_res,
                            equivalence_slope=slope,
                            equivalence_band=band,
                            trend_to_zero=trend_to_zero)


def sector_lower_bound(weight: Weight, alpha: float,
                       r_min: float = 1e-2, r_max: float = 1e2,
                       n_r: int = 40, n_theta: int = 81
                       ) -> tuple[float, float]:
    """Fit (b, R0) with Re V(z) >= b V(|z|) on S_alpha for |z| >= R0.

    The angular grid includes the closed boundary rays, where the
    infimum of Re V / V(|z|) is approached; R0 is the smallest grid
    radius from which the running bound stays positive.
    """
    if not weight.is_sectorial:
        raise InvalidParameterError("sector bound needs a sectorial weight")
    sector = weight.sector_gamma or (2.0 / weight.rho_target)
    if alpha >= sector:
        raise InvalidParameterError(
            f"alpha={alpha:.4g} is outside the weight sector ({sector:.4g})")
    radii = np.geomspace(r_min, r_max, n_r)
    thetas = np.linspace(-alpha * math.pi / 2.0, alpha * math.pi / 2.0, n_theta)
    per_radius = np.empty(n_r)
    for i, r in enumerate(radii):
        axis = weight.on_axis(float(r))
        per_radius[i] = min(weight(PolarPoint(float(r), float(t))).real
                            for t in thetas) / axis
    suffix_min = np.minimum.accumulate(per_radius[::-1])[::-1]
    positive = np.flatnonzero(suffix_min > 0.0)
    if positive.size == 0:
        raise LowerBoundFailureError(
            f"Re V / V(|z|) is not positive anywhere on S_{alpha:.4g} "
            f"for {weight.name!r}")
    idx = int(positive[0])
    return float(suffix_min[idx]), float(radii[idx])


# ---------------------------------------------------------------------------
# flat functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlatFunction:
    """Evaluator of a flat function on a sector.

    ``sector_gamma`` is the optimal opening on which flatness is
    certified; ``domain_gamma`` is where the evaluator may be called.
    """

    func: Callable[[PolarPoint], complex]
    sector_gamma: float
    domain_gamma: float
    name: str = "flat"
    weight: Weight | None = None

    def __call__(self, z: PolarPoint) -> complex:
        if abs(z.theta) >= self.domain_gamma * math.pi / 2.0:
            raise OutOfSectorError(
                f"arg(z)={z.theta:.4g} outside the domain of {self.name!r} "
                f"(half-opening {self.domain_gamma * math.pi / 2.0:.4g})")
        return self.func(z)

    def log_abs(self, z: PolarPoint) -> float:
        value = self(z)
        return math.log(abs(value)) if value != 0.0 else -math.inf


def flat_function(weight: Weight) -> FlatFunction:
    """The flat function G(z) = exp(-V(1/z)) on the optimal sector."""
    if not weight.is_sectorial:
        raise InvalidParameterError(
            "flat functions require a sectorial weight")
    domain = weight.sector_gamma or (2.0 / weight.rho_target)

    def func(z: PolarPoint) -> complex:
        w = -weight(z.inverse())
        if w.real > 700.0:
            raise WeightEvaluationError(
                "flat-function evaluation overflows (point too far outside "
                "the decay region)")
        return cmath.exp(w)

    return FlatFunction(func=func, sector_gamma=1.0 / weight.rho_target,
                        domain_gamma=domain,
                        name=f"exp(-({weight.name})(1/z))", weight=weight)


def lift_flat(base: FlatFunction, s: float) -> FlatFunction:
    """Lift a flat function through the s-power map: G(z) = G0(z^s).

    Used when the order of quasianalyticity is >= 2: the flat function
    built for the s-power sequence is composed with z^s.  Arguments
    whose s-fold angle leaves the certified sector of the base raise
    OutOfSectorError.
    """
    if s <= 0:
        raise InvalidParameterError("lift exponent must be positive")
    if s == 1.0:
        return base

    def func(z: PolarPoint) -> complex:
        return base(PolarPoint(_safe_pow(z.r, s), s * z.theta))

    gamma = base.sector_gamma / s
    return FlatFunction(func=func, sector_gamma=gamma, domain_gamma=gamma,
                        name=f"{base.name} o z^{format(s, 'g')}",
                        weight=base.weight)


@dataclass(frozen=True)
class FlatnessCertificate:
    c1: float
    c2: float
    residual: float
    alpha: float
    r0: float
    n_samples: int
    log_c1: float = 0.0

    @property
    def passed(self) -> bool:
        return math.isfinite(self.log_c1) and self.residual <= 0.0

    def to_dict(self):
        return {"c1": self.c1, "log_c1": self.log_c1, "c2": self.c2,
                "residual": self.residual, "alpha": self.alpha, "r0": self.r0,
                "n_samples": self.n_samples, "passed": self.passed}


def flatness_certificate(flat, profile: GrowthProfile, alpha: float,
                         r0: float, n_r: int = 48, n_theta: int = 9,
                         c2_grid=None) -> FlatnessCertificate:
    """Certify |G(z)| <= c1 h_M(c2 |z|) on the bounded subsector (alpha, r0).

    c2 is searched over a log grid (64 points in [1e-3, 1e3] by default,
    smallest passing value wins); c1 is the exact maximum of the sample
    ratio.  The certificate fails when, for every c2, the per-shell
    log-ratio keeps climbing as |z| -> 0: the ratio is then unbounded
    and no finite constants exist.
    """
    if c2_grid is None:
        c2_grid = np.geomspace(1e-3, 1e3, 64)
    radii = np.geomspace(r0 * 1e-3, r0, n_r)
    thetas = np.linspace(-alpha * math.pi / 2.0, alpha * math.pi / 2.0, n_theta)
    evaluate = flat.log_abs if isinstance(flat, FlatFunction) else (
        lambda z: _log_abs_of(flat, z))
    shell_logG = np.array([
        max(evaluate(PolarPoint(float(r), float(t))) for t in thetas)
        for r in radii
    ])
    bottom = radii <= radii[0] * 10.0
    for c2 in c2_grid:
        h_terms = np.array([profile.bigM(1.0 / (c2 * float(r)))
                            for r in radii])
        if not np.all(h_terms[bottom] > 0.0):
            # h_M(c2 |z|) = 1 somewhere on the probed decade: the bound is
            # vacuous there and says nothing about flat decay; skip this c2
            continue
        shells = shell_logG + h_terms
        if escaping_trend(radii, shells, toward="zero"):
            continue
        finite = shells[np.isfinite(shells)]
        log_c1 = float(np.max(finite)) if finite.size else 0.0
        residual = float(np.max(finite - log_c1)) if finite.size else 0.0
        c1 = math.exp(log_c1) if log_c1 < 700.0 else math.inf
        return FlatnessCertificate(c1=c1, c2=float(c2), residual=residual,
                                   alpha=alpha, r0=r0, log_c1=log_c1,
                                   n_samples=len(radii) * len(thetas))
    raise CertificationFailureError(
        "no c2 in the grid gives a bounded ratio |G|/h_M(c2 |z|): "
        "the function is not flat for this sequence",
        diagnostics={"alpha": alpha, "r0": r0,
                     "c2_grid": [float(c2_grid[0]), float(c2_grid[-1])]},
    )


def _log_abs_of(func, z: PolarPoint) -> float:
    value = complex(func(z))
    return math.log(abs(value)) if value != 0.0 else -math.inf
