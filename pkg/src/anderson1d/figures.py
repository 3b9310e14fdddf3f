"""Figure rendering for experiment reports (matplotlib, file output only).

Each experiment renders one or two PNGs next to its CSV tables.  Figures
are a convenience layer over the delimited output: every plotted quantity
is read back from the report tables, so a figure can be regenerated from
any previously emitted report with the `plot` subcommand.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _cols(table, *names):
    headers, rows = table
    idx = [headers.index(n) for n in names]
    return [np.array([r[i] for r in rows]) for i in idx]


def _save(fig, outdir, prefix, name, paths):
    path = os.path.join(outdir, f"{prefix}.{name}.png")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)


def _fig_lyapunov(report, outdir, prefix, paths):
    E, g, se = _cols(report.tables["estimates"], "E", "gamma_hat", "std_err")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(E, g, yerr=3 * se, fmt="o-", ms=3, lw=1, capsize=2)
    ax.set_xlabel("E")
    ax.set_ylabel(r"$\hat\gamma(E)$")
    ax.set_title("Lyapunov exponent (3 s.e. bars)")
    ax.grid(alpha=0.3)
    _save(fig, outdir, prefix, "gamma", paths)


def _fig_ids(report, outdir, prefix, paths):
    E, N = _cols(report.tables["ids"], "E", "N")
    Ed, dens = _cols(report.tables["density"], "E", "density")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(E, N, lw=1)
    ax1.set_xlabel("E")
    ax1.set_ylabel("N(E)")
    ax1.set_title("integrated density of states")
    ax2.plot(Ed, dens, lw=1)
    ax2.set_xlabel("E")
    ax2.set_ylabel("N'(E)")
    ax2.set_title("fitted density")
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
    _save(fig, outdir, prefix, "ids", paths)


def _fig_wegner(report, outdir, prefix, paths):
    Ed, dens = _cols(report.tables["density"], "E", "density")
    bound = report.results["bound_A"]
    tol = next(c for c in report.checks if c["name"] == "wegner_density_bound")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(Ed, dens, lw=1, label="fitted density")
    ax.axhline(bound, color="k", ls="--", lw=1, label=f"A = {bound:g}")
    ax.axhline(tol["threshold"], color="r", ls=":", lw=1, label="A(1+tol)")
    ax.set_xlabel("E")
    ax.set_ylabel("N'(E)")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, outdir, prefix, "density", paths)


def _fig_minami(report, outdir, prefix, paths):
    r, emp, se, bound = _cols(
        report.tables["tail"], "r", "empirical", "stderr", "bound"
    )
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.arange(len(r))
    ax.bar(x - 0.17, emp, width=0.33, yerr=3 * se, capsize=3, label="empirical")
    ax.bar(x + 0.17, np.minimum(bound, 1.0), width=0.33, label="bound (capped at 1)")
    ax.set_xticks(x, [f"r={int(v)}" for v in r])
    ax.set_ylabel("P(count >= r)")
    ax.set_yscale("log")
    ax.legend()
    _save(fig, outdir, prefix, "tail", paths)


def _fig_localization(report, outdir, prefix, paths):
    rl, k, center = _cols(report.tables["pairs"], "realization", "k", "center")
    sel = rl == rl[0]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(k[sel], center[sel], ".", ms=3)
    lim = [0, max(center[sel].max(), k[sel].max()) * 1.05]
    ax.plot(lim, lim, "k--", lw=1)
    ax.set_xlabel("rank k")
    ax.set_ylabel("localization center")
    ax.set_title("center vs rank (first realization)")
    _save(fig, outdir, prefix, "centers", paths)


def _fig_blockmatch(report, outdir, prefix, paths):
    center, dist = _cols(report.tables["pairs"], "center", "dist")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(center, np.maximum(dist, 1e-18), ".", ms=3)
    ax.axhline(report.results["half_8m"], color="r", ls="--", lw=1,
               label=r"$\frac{1}{2}\,8^{-m}$")
    ax.set_xlabel("localization center")
    ax.set_ylabel("dist to block spectrum")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, outdir, prefix, "distances", paths)


def _fig_khinchin(report, outdir, prefix, paths):
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, style in (("curves", "-"), ("curves_compare", "--")):
        if name not in report.tables:
            continue
        rl, K, cov = _cols(report.tables[name], "realization", "K", "covered")
        for r in np.unique(rl):
            sel = rl == r
            ax.semilogx(K[sel], cov[sel], style, lw=1, alpha=0.6,
                        color="C0" if name == "curves" else "C1")
    ax.axhline(report.results["mes_I"], color="k", ls=":", lw=1, label="mes I")
    ax.set_xlabel("K")
    ax.set_ylabel("covered measure in I")
    ax.set_title("alpha-neighborhood coverage (dashed: compare_alpha)")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, outdir, prefix, "coverage", paths)


def _fig_jarnik(report, outdir, prefix, paths):
    K, s = _cols(report.tables["partial_sums"], "K", "partial_sum")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(K, s, "o-", ms=3, lw=1, label="partial sums")
    ratio = report.results.get("growth_ratio_vs_logK_over_2gamma")
    if ratio is not None:
        gb2 = s[-1] / ratio / np.log(K[-1])
        ax.semilogx(K, np.log(np.maximum(K, 1.0)) * gb2, "--", lw=1,
                    label=r"$\log K / (2\bar\gamma)$")
    ax.set_xlabel("K")
    ax.set_ylabel(r"$\sum_{k \leq K} \rho(\alpha_k)$")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, outdir, prefix, "series", paths)


def _fig_nonlyap(report, outdir, prefix, paths):
    rl, E, g, mr = _cols(
        report.tables["scans"], "realization", "E", "gamma_hat", "min_rate"
    )
    tau = report.results["tau"]
    fig, ax = plt.subplots(figsize=(6, 4))
    sel = rl == rl[0]
    ax.plot(E[sel], g[sel], "k-", lw=1, label=r"$\hat\gamma(E)$")
    ax.plot(E[sel], tau * g[sel], "k--", lw=1, label=r"$\tau\,\hat\gamma(E)$")
    ax.plot(E, mr, ".", ms=3, alpha=0.6, label="min rate (all realizations)")
    ax.set_xlabel("E")
    ax.set_ylabel("growth rate")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, outdir, prefix, "scan", paths)


def _fig_propa(report, outdir, prefix, paths):
    k, ln, bg = _cols(report.tables["pairs"], "k", "log_norm", "bound_gamma")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(k, ln, ".", ms=3, label=r"$\log\|\Phi_{2k}(E_k)\|$")
    ax.plot(k, bg, ".", ms=3, label=r"$12\,\tau\,\hat\gamma\,k$")
    ax.set_xlabel("center k")
    ax.set_ylabel("log norm")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, outdir, prefix, "dip", paths)


_RENDERERS = {
    "lyapunov": _fig_lyapunov,
    "ids": _fig_ids,
    "wegner": _fig_wegner,
    "minami": _fig_minami,
    "localization": _fig_localization,
    "blockmatch": _fig_blockmatch,
    "khinchin": _fig_khinchin,
    "jarnik": _fig_jarnik,
    "nonlyap": _fig_nonlyap,
    "propa": _fig_propa,
}


def render_figures(report, outdir: str, prefix: str) -> list[str]:
    """Render the experiment's figures; returns the written paths."""
    paths: list[str] = []
    renderer = _RENDERERS.get(report.experiment)
    if renderer is not None:
        renderer(report, outdir, prefix, paths)
    return paths
