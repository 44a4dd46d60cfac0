"""Shared regression, classification and trend-detection helpers.

These are the statistical workhorses behind the index estimators and the
certificate fits: log-log regressions with an explicit log-log regressor,
the Bertrand-series classifier, bounded-drift tests for equivalence
ratios, and the escaping-trend detector used by every envelope
certificate to distinguish "finite constants exist" from "the ratio
escapes toward the limit".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL_S = 0.02
DEFAULT_TOL_U = 0.1


def decade_window(n: int, floor: int = 10) -> tuple[int, int]:
    """Index window [max(floor, n//10), n] — the 'last decade' of a prefix."""
    return max(floor, n // 10), n


def fit_log_power(x_log, y_log, with_loglog=True):
    """Least-squares fit y_log ~ s*x_log + u*log(x_log) + c.

    Only points with x_log > 0.05 enter when the log-log regressor is
    requested (log of a near-zero log is meaningless).  Returns
    (s, u, c, rms_residual).
    """
    x_log = np.asarray(x_log, dtype=float)
    y_log = np.asarray(y_log, dtype=float)
    if with_loglog:
        mask = x_log > 0.05
        x, y = x_log[mask], y_log[mask]
        design = np.column_stack([x, np.log(x), np.ones_like(x)])
    else:
        x, y = x_log, y_log
        design = np.column_stack([x, np.ones_like(x)])
    if len(x) < design.shape[1] + 1:
        raise ValueError("not enough points for the regression window")
    coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coeffs
    rms = float(np.sqrt(np.mean(resid**2)))
    if with_loglog:
        return float(coeffs[0]), float(coeffs[1]), float(coeffs[2]), rms
    return float(coeffs[0]), 0.0, float(coeffs[1]), rms


@dataclass(frozen=True)
class SeriesVerdict:
    """Convergence classification of a positive series from fitted exponents.

    The model is term_n ~ c * n^(-s) * (log n)^(-u); the verdict applies
    the Bertrand-series rules with tolerance bands around the boundary
    exponents, returning "inconclusive" rather than guessing.
    """

    classification: str  # "diverges" | "converges" | "inconclusive"
    s: float
    u: float
    window: tuple[int, int]
    tol_s: float = DEFAULT_TOL_S
    tol_u: float = DEFAULT_TOL_U
    rms_residual: float = 0.0

    @property
    def diverges(self):
        return self.classification == "diverges"

    @property
    def converges(self):
        return self.classification == "converges"

    def to_dict(self):
        return {
            "classification": self.classification,
            "s": self.s,
            "u": self.u,
            "window": list(self.window),
            "tol_s": self.tol_s,
            "tol_u": self.tol_u,
            "rms_residual": self.rms_residual,
        }


def classify_series(n, log_terms, tol_s=DEFAULT_TOL_S, tol_u=DEFAULT_TOL_U,
                    boundary_tol=0.02, window=None) -> SeriesVerdict:
    """Classify sum(term_n) by fitting log term_n = c - s*log n - u*loglog n.

    At s = 1 the series diverges exactly when u <= 1 (the logarithmic
    boundary lies on the divergent side), so the divergent verdict
    extends to fitted u <= 1 + boundary_tol; the band up to 1 + tol_u
    stays inconclusive rather than guessing convergence.
    """
    n = np.asarray(n, dtype=float)
    log_terms = np.asarray(log_terms, dtype=float)
    if window is None:
        window = decade_window(int(n[-1]))
    lo, hi = window
    mask = (n >= lo) & (n <= hi) & np.isfinite(log_terms)
    neg_s, neg_u, _, rms = fit_log_power(np.log(n[mask]), log_terms[mask])
    s, u = -neg_s, -neg_u
    if s < 1.0 - tol_s or (abs(s - 1.0) <= tol_s and u <= 1.0 + boundary_tol):
        cls = "diverges"
    elif s > 1.0 + tol_s or (abs(s - 1.0) <= tol_s and u >= 1.0 + tol_u):
        cls = "converges"
    else:
        cls = "inconclusive"
    return SeriesVerdict(cls, s, u, (lo, hi), tol_s, tol_u, rms)


@dataclass(frozen=True)
class DriftReport:
    slope: float
    verdict: str  # "plausible" | "refuted-on-prefix"
    window: tuple[int, int]

    def to_dict(self):
        return {"slope": self.slope, "verdict": self.verdict,
                "window": list(self.window)}


def ratio_drift(p, log_ratios, slope_tol=0.05, window=None) -> DriftReport:
    """Bounded-band test for per-index log-ratios.

    A ratio family (M'_p/M_p)^(1/p) is equivalence-compatible when its
    log stays in a bounded band; on a prefix this is judged by the slope
    of |log_ratio| against log p over the test window.  A positive slope
    beyond slope_tol means the band is escaping: refuted-on-prefix.
    A shrinking |log_ratio| is convergence into the band, not drift.
    """
    p = np.asarray(p, dtype=float)
    y = np.abs(np.asarray(log_ratios, dtype=float))
    if window is None:
        window = decade_window(int(p[-1]), floor=max(1, int(p[0])))
    lo, hi = window
    mask = (p >= lo) & (p <= hi)
    x = np.log(p[mask])
    design = np.column_stack([x, np.ones_like(x)])
    coeffs, *_ = np.linalg.lstsq(design, y[mask], rcond=None)
    slope = float(coeffs[0])
    verdict = "plausible" if slope <= slope_tol else "refuted-on-prefix"
    return DriftReport(slope, verdict, (lo, hi))


def escaping_trend(radii, shell_values, toward="zero", min_rise=1.0,
                   monotone_frac=0.9):
    """Detect a log-ratio envelope escaping toward r->0 or r->infinity.

    radii must be sorted ascending; shell_values are per-shell maxima of
    a log-ratio.  The shells within one decade of the relevant end are
    examined: the trend escapes when at least ``monotone_frac`` of the
    steps toward the limit increase and the total rise over the decade
    exceeds ``min_rise`` log-units.  Non-finite shells (e.g. underflowed
    |G| = 0) are ignored.
    """
    radii = np.asarray(radii, dtype=float)
    vals = np.asarray(shell_values, dtype=float)
    finite = np.isfinite(vals)
    radii, vals = radii[finite], vals[finite]
    if len(vals) < 4:
        return False
    if toward == "zero":
        edge = radii[0]
        mask = radii <= edge * 10.0
        seq = vals[mask][::-1]  # walk toward r -> 0
    else:
        edge = radii[-1]
        mask = radii >= edge / 10.0
        seq = vals[mask]  # walk toward r -> inf
    if len(seq) < 4:
        return False
    steps = np.diff(seq)
    rise = seq[-1] - seq[0]
    frac_up = float(np.mean(steps > -1e-12))
    return frac_up >= monotone_frac and rise > min_rise


@dataclass(frozen=True)
class EnvelopeFit:
    """Geometric envelope |v_p| <= C * D^p fitted over a prefix."""

    C: float
    D: float
    degenerate: bool = False
    quad_coefficient: float = 0.0
    support: tuple[int, ...] = field(default_factory=tuple)


def geometric_envelope(log_abs_values) -> EnvelopeFit:
    """Fit C, D with |v_p| <= C * D^p from log|v_p| (``-inf`` for zeros).

    Least-squares slope over the nonzero support, with the intercept
    lifted so all points sit below the line; the tail slope between the
    last nonzero point and the middle of the support guards against an
    optimistic least-squares slope.  A super-geometric sequence shows up
    as a positive quadratic coefficient, reported for the caller to
    reject.
    """
    logs = np.asarray(log_abs_values, dtype=float)
    support = np.flatnonzero(np.isfinite(logs))
    if len(support) <= 1:
        c = float(np.exp(logs[support[0]])) if len(support) else 0.0
        return EnvelopeFit(C=max(c, 1.0), D=1.0, degenerate=True,
                           support=tuple(int(i) for i in support))
    p = support.astype(float)
    y = logs[support]
    design = np.column_stack([p, np.ones_like(p)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    quad = 0.0
    if len(support) >= 4:
        design_q = np.column_stack([p**2, p, np.ones_like(p)])
        coeffs_q, *_ = np.linalg.lstsq(design_q, y, rcond=None)
        quad = float(coeffs_q[0])
    mid = support[len(support) // 2]
    last = support[-1]
    if last > mid:
        tail_slope = (logs[last] - logs[mid]) / (last - mid)
        slope = max(slope, tail_slope)
    intercept = float(np.max(y - slope * p))
    return EnvelopeFit(C=float(np.exp(intercept)), D=float(np.exp(slope)),
                       quad_coefficient=quad,
                       support=tuple(int(i) for i in support))
