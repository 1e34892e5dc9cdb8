"""Diagnostic figures written next to the CSV/JSON outputs."""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "svg.hashsalt": "powercpd",
}
COLORS = {"mbic": "#1b6ca8", "crops": "#d1495b", "algorithm1": "#2e8b57"}


@contextmanager
def _figure(path, nrows=1, ncols=1, size=(7.0, 3.2), **kw):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(nrows, ncols, figsize=size, **kw)
        try:
            yield fig, ax
            fig.tight_layout()
            fig.savefig(path, metadata={"Software": None})
        finally:
            plt.close(fig)


def plot_detection(values, report, path, years=None, title: str | None = None) -> Path:
    """Series on a log axis with confirmed (solid) and flagged (dashed) changepoints."""
    values = np.asarray(values, dtype=float)
    x = np.arange(values.size) if years is None else np.asarray(years)
    d = report if isinstance(report, dict) else report.to_dict()
    with _figure(path) as (fig, ax):
        ax.scatter(x, values, s=6, color="0.3", lw=0)
        if np.all(values > 0):
            ax.set_yscale("log")
        for cps, style, label in ((d["confirmed"], "-", "confirmed"), (d["flagged"], "--", "flagged")):
            for i, c in enumerate(cps):
                pos = x[c] if years is not None else c
                ax.axvline(pos, ls=style, color=COLORS["algorithm1"] if style == "-" else "0.5", lw=1,
                           label=label if i == 0 else None)
                if years is not None:
                    ax.annotate(str(int(pos)), (pos, 1.0), xycoords=("data", "axes fraction"),
                                fontsize=7, ha="center", va="bottom")
        ax.set_xlabel("start year" if years is not None else "index")
        ax.set_ylabel("value")
        ax.set_title(title or f"verdict: {d['verdict']}", loc="left")
        if d["confirmed"] or d["flagged"]:
            ax.legend(frameon=False, loc="upper right")
    return Path(path)


def plot_penalty_path(path_obj, selected_m: int, path) -> Path:
    """Unpenalised cost against number of changepoints along a CROPS path."""
    entries = sorted(path_obj.entries, key=lambda e: e.m)
    m = [e.m for e in entries]
    q = [e.total_cost for e in entries]
    with _figure(path, size=(4.0, 3.0)) as (fig, ax):
        ax.plot(m, q, "o-", color=COLORS["crops"], ms=3)
        if selected_m in m:
            i = m.index(selected_m)
            ax.plot([m[i]], [q[i]], "s", ms=8, mfc="none", mec="k", label=f"elbow m={selected_m}")
            ax.legend(frameon=False)
        ax.set_xlabel("number of changepoints")
        ax.set_ylabel("segment cost")
    return Path(path)


def plot_trials(summary, path, max_m: int = 4) -> Path:
    """Changepoint locations by detected m (top) and the m histogram (bottom), per method."""
    methods = list(summary.methods)
    stats = summary.summary
    truth = summary.spec.true_changepoints
    n = summary.spec.n
    with _figure(path, 2, len(methods), size=(3.2 * len(methods), 4.8), squeeze=False,
                 gridspec_kw={"height_ratios": [2, 1]}) as (fig, axes):
        for col, method in enumerate(methods):
            rows = summary.method_rows(method)
            top, bottom = axes[0, col], axes[1, col]
            groups, labels = [], []
            for m in range(1, max_m + 1):
                locs = [[int(c) for c in r["cpts"].split(";")] for r in rows if int(r["m"]) == m]
                for j in range(m):
                    if locs:
                        groups.append([loc[j] for loc in locs])
                        labels.append(f"{m}:{j + 1}")
            if groups:
                top.boxplot(groups, orientation="horizontal", widths=0.6, flierprops={"markersize": 2})
                top.set_yticks(range(1, len(labels) + 1), labels)
            for t in truth:
                top.axvline(t, ls="--", color="0.4", lw=0.8)
            top.set_xlim(0, n)
            top.set_title(method, loc="left", color=COLORS.get(method, "k"))
            props = stats[method]["proportions"]
            ms = [int(k) for k in props]
            bottom.bar(ms, [props[str(k)] for k in ms], color=COLORS.get(method, "0.5"))
            bottom.set_xlabel("changepoints detected")
            bottom.set_ylim(0, 1)
        axes[0, 0].set_ylabel("m : rank")
        axes[1, 0].set_ylabel("proportion")
    return Path(path)


def plot_meta(meta, path, title: str | None = None) -> Path:
    """Density of pooled changepoint years above the cluster timeline."""
    with _figure(path, 2, 1, size=(7.0, 3.6), sharex=True, gridspec_kw={"height_ratios": [2, 1]}) as (fig, axes):
        top, bottom = axes
        if meta.density is not None:
            top.plot(meta.density.grid, meta.density.density, color=COLORS["mbic"])
            top.fill_between(meta.density.grid, meta.density.density, alpha=0.2, color=COLORS["mbic"])
        top.set_ylabel("density")
        if title:
            top.set_title(title, loc="left")
        labels = sorted(set(meta.sources))
        for y, src in zip(meta.years, meta.sources):
            bottom.plot([y], [labels.index(src)], "|", color="k", ms=8)
        for cl in meta.clusters():
            if cl["kind"] == "span":
                bottom.axvspan(cl["start"], cl["end"], color="0.85", zorder=0)
            else:
                bottom.axvline(cl["start"], ls=":", color="0.4")
            bottom.annotate(f"{cl['fraction']:.2f}", (cl["center"], 0), xycoords=("data", "axes fraction"),
                            xytext=(0, -14), textcoords="offset points", ha="center", fontsize=7)
        bottom.set_yticks(range(len(labels)), labels)
        bottom.set_xlabel("year")
    return Path(path)
