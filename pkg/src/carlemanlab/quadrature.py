"""Adaptive quadrature for moment and extension integrals.

All semi-infinite integrals here are first mapped to the log axis
(t = e^x), where admissible integrands become a single bell: the
log-integrand is concave for every weight with convex V(e^t).  The
recipe is always the same:

1. locate the peak of the log-integrand by a coarse deterministic scan,
2. expand left/right until the log-integrand drops ``DROP`` units below
   the peak (a relative contribution below e^-40),
3. integrate the peak-shifted integrand with an adaptive Gauss-Kronrod
   (G7, K15) rule, splitting the worst panel until the error estimate
   meets the tolerance.

Complex integrands share panels between real and imaginary parts: the
panel rule sums complex values directly and the error estimate is the
modulus of the (K15 - G7) difference.
"""

from __future__ import annotations

import math

from .errors import DivergenceDetectedError, NumericalFailureError

# Gauss-Kronrod 15-point nodes with embedded Gauss-7 weights.
# (node, Gauss weight, Kronrod weight); Gauss weight 0 for Kronrod-only nodes.
_GK15 = (
    (+0.949107912342759, 0.129484966168870, 0.063092092629979),
    (-0.949107912342759, 0.129484966168870, 0.063092092629979),
    (+0.741531185599394, 0.279705391489277, 0.140653259715525),
    (-0.741531185599394, 0.279705391489277, 0.140653259715525),
    (+0.405845151377397, 0.381830050505119, 0.190350578064785),
    (-0.405845151377397, 0.381830050505119, 0.190350578064785),
    (0.000000000000000, 0.417959183673469, 0.209482141084728),
    (+0.991455371120813, 0.000000000000000, 0.022935322010529),
    (-0.991455371120813, 0.000000000000000, 0.022935322010529),
    (+0.864864423359769, 0.000000000000000, 0.104790010322250),
    (-0.864864423359769, 0.000000000000000, 0.104790010322250),
    (+0.586087235467691, 0.000000000000000, 0.169004726639267),
    (-0.586087235467691, 0.000000000000000, 0.169004726639267),
    (+0.207784955007898, 0.000000000000000, 0.204432940075298),
    (-0.207784955007898, 0.000000000000000, 0.204432940075298),
)

DROP = 40.0  # log-units below the peak where the integrand is truncated


def _panel(f, a, b):
    """One (G7, K15) panel on [a, b]; returns (K15 value, error estimate)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    g7 = 0.0
    k15 = 0.0
    for node, wg, wk in _GK15:
        v = f(mid + half * node)
        g7 += wg * v
        k15 += wk * v
    return k15 * half, abs(k15 - g7) * half


def adaptive(f, a, b, tol_rel=1e-10, tol_abs=0.0, max_panels=512):
    """Adaptive bisection with a fixed (G7, K15) rule per panel.

    Splits the panel with the largest error estimate until the summed
    estimate meets ``tol_rel * |integral|`` (or ``tol_abs``).  Values may
    be complex.  Deterministic: ties are resolved by panel order.
    """
    panels = [(a, b, *_panel(f, a, b))]
    while True:
        total = sum(p[2] for p in panels)
        err = sum(p[3] for p in panels)
        if err <= max(tol_abs, tol_rel * abs(total)):
            return total, err
        if len(panels) >= max_panels:
            raise NumericalFailureError(
                f"quadrature did not converge in {max_panels} panels "
                f"(error estimate {err:.3e} on integral {abs(total):.3e})"
            )
        worst = max(range(len(panels)), key=lambda i: panels[i][3])
        lo, hi, _, _ = panels[worst]
        mid = 0.5 * (lo + hi)
        panels[worst] = (lo, mid, *_panel(f, lo, mid))
        panels.append((mid, hi, *_panel(f, mid, hi)))


def _coarse_peak(g, lo, hi, n=256):
    """Argmax of g on a uniform n-point grid over [lo, hi]."""
    best_x, best_v = lo, g(lo)
    for i in range(1, n):
        x = lo + (hi - lo) * i / (n - 1)
        v = g(x)
        if v > best_v:
            best_x, best_v = x, v
    return best_x, best_v


def _refine_peak(g, x, h, iters=60):
    # ternary refinement around the coarse argmax
    lo, hi = x - h, x + h
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if g(m1) < g(m2):
            lo = m1
        else:
            hi = m2
    x = 0.5 * (lo + hi)
    return x, g(x)


def bracket_log_bell(g, x_init_lo=-30.0, x_init_hi=30.0, drop=DROP,
                     expand_cap=500.0):
    """Bracket the support of a bell-shaped log-integrand g.

    Returns (x_lo, x_peak, x_hi, g_peak) such that g <= g_peak - drop
    outside [x_lo, x_hi].  Raises DivergenceDetectedError when g keeps
    rising to the right without ever dropping (non-integrable weight).
    """
    lo, hi = x_init_lo, x_init_hi
    x_peak, g_peak = _coarse_peak(g, lo, hi)
    # peak pinned at the right edge: the integrand is still growing
    while x_peak >= hi - (hi - lo) / 128.0:
        if hi > expand_cap:
            raise DivergenceDetectedError(
                "log-integrand keeps increasing; integral diverges"
            )
        lo, hi = hi - 2.0, hi + 60.0
        x_peak, g_peak = _coarse_peak(g, lo, hi)
    x_peak, g_peak = _refine_peak(g, x_peak, 1.0)
    if not math.isfinite(g_peak):
        raise NumericalFailureError("log-integrand has no finite peak")

    cut = g_peak - drop
    x_hi = x_peak + 1.0
    while g(x_hi) > cut:
        x_hi += 1.0
        if x_hi > expand_cap:
            raise DivergenceDetectedError(
                "log-integrand does not drop on the right; integral diverges"
            )
    x_lo = x_peak - 1.0
    while g(x_lo) > cut:
        x_lo -= 1.0
        if x_lo < x_peak - expand_cap:
            # left tail of an admissible moment integrand always decays
            raise DivergenceDetectedError(
                "log-integrand does not drop on the left; integral diverges"
            )
    return x_lo, x_peak, x_hi, g_peak


def integrate_log_bell(g, tol_rel=1e-9, x_init_lo=-30.0, x_init_hi=30.0):
    """Integrate exp(g(x)) dx over the real line for a bell-shaped g.

    Returns (log_integral, relative_error_estimate).  The integrand is
    peak-shifted so the quadrature works on exp(g - g_peak) in [0, 1].
    """
    x_lo, _, x_hi, g_peak = bracket_log_bell(g, x_init_lo, x_init_hi)

    def scaled(x):
        v = g(x) - g_peak
        return math.exp(v) if v > -745.0 else 0.0

    value, err = adaptive(scaled, x_lo, x_hi, tol_rel=tol_rel)
    if value <= 0.0:
        raise NumericalFailureError("peak-shifted integral is non-positive")
    return g_peak + math.log(value), err / value


def integrate_left_tail(f, x_hi, tol_rel=1e-10, scan_width=80.0, drop=DROP):
    """Integrate a complex-valued f(x) dx over (-inf, x_hi].

    Used for truncated-Laplace integrals on the log axis: |f| decays at
    least like e^x to the left, so the support is bracketed by scanning
    [x_hi - scan_width, x_hi] for the modulus peak and expanding left
    until |f| drops ``drop`` log-units below it.
    """
    def logmod(x):
        v = abs(f(x))
        return math.log(v) if v > 0.0 else -math.inf

    x_peak, g_peak = _coarse_peak(logmod, x_hi - scan_width, x_hi, n=400)
    if not math.isfinite(g_peak):
        return 0.0 + 0.0j, 0.0
    x_peak, g_peak = _refine_peak(logmod, x_peak, scan_width / 400.0)
    g_peak = max(g_peak, logmod(x_hi))

    cut = g_peak - drop
    x_lo = min(x_peak, x_hi) - 1.0
    while logmod(x_lo) > cut:
        x_lo -= 1.0
        if x_lo < x_hi - 400.0:
            raise NumericalFailureError("left tail does not decay")

    scale = math.exp(-g_peak)

    def scaled(x):
        return f(x) * scale

    value, err = adaptive(scaled, x_lo, x_hi, tol_rel=tol_rel)
    return value / scale, err / scale
