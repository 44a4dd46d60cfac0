"""Figure rendering for report grids.

The CLI emits plot-ready CSV grids; these helpers render the same data
to PNG files next to the delimited output when --plot is requested.
matplotlib is imported lazily with the Agg backend so headless runs and
library users that never plot pay nothing.
"""

from __future__ import annotations

import math


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_growth_grid(rows, path, title=""):
    """Render a (t, h_M, M, d) grid to ``path``.

    Three stacked panels: h_M(t) on a log-t axis, M(t) on log-log axes,
    and d(r) with its large-r trend.
    """
    plt = _pyplot()
    t = [r[0] for r in rows]
    hm = [r[1] for r in rows]
    big_m = [r[2] for r in rows]
    d = [r[3] for r in rows]
    fig, axes = plt.subplots(3, 1, figsize=(6.0, 7.5), sharex=True)
    axes[0].semilogx(t, hm, lw=1.2)
    axes[0].set_ylabel("h_M(t)")
    axes[1].loglog(t, [max(v, 1e-300) for v in big_m], lw=1.2)
    axes[1].set_ylabel("M(t)")
    axes[2].semilogx(t, d, lw=1.2)
    axes[2].set_ylabel("d(r)")
    axes[2].set_xlabel("t")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_moment_table(rows, path, title=""):
    """Render a (p, m, logm, relerr) moment table to ``path``."""
    plt = _pyplot()
    p = [r[0] for r in rows]
    logm = [r[2] for r in rows]
    relerr = [max(r[3], 1e-18) for r in rows]
    fig, axes = plt.subplots(2, 1, figsize=(6.0, 5.5), sharex=True)
    axes[0].plot(p, logm, "o-", ms=3, lw=1.0)
    axes[0].set_ylabel("log m_V(p)")
    axes[1].semilogy(p, relerr, "o-", ms=3, lw=1.0)
    axes[1].set_ylabel("relative error estimate")
    axes[1].set_xlabel("p")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_flat_profile(flat, alpha, r0, path, n_r=200, title=""):
    """Render |G| along the bisecting ray and the subsector boundary."""
    plt = _pyplot()
    from .proximate import PolarPoint

    radii = [r0 * 10.0 ** (-3.0 * (1.0 - i / (n_r - 1.0))) for i in range(n_r)]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for theta, label in ((0.0, "arg z = 0"),
                         (alpha * math.pi / 2.0, "arg z = alpha pi/2")):
        vals = [abs(flat(PolarPoint(r, theta))) for r in radii]
        ax.loglog(radii, [max(v, 1e-300) for v in vals], lw=1.2, label=label)
    ax.set_xlabel("|z|")
    ax.set_ylabel("|G(z)|")
    ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
