"""Pooling changepoint years across analyses: density estimate and 1-D clusters."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

BANDWIDTH_ADJUST = 0.2

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def nrd0_bandwidth(points) -> float:
    """Silverman's rule of thumb, ``0.9 * min(sd, IQR / 1.34) * n ** (-1/5)``.

    The IQR uses linear-interpolation quantiles; if it vanishes the sample
    standard deviation is used alone.
    """
    x = np.asarray(points, dtype=float)
    if np.unique(x).size < 2:
        raise ValueError("bandwidth needs at least two distinct points")
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    lo = min(sd, (q75 - q25) / 1.34)
    if lo <= 0:
        lo = sd
    return 0.9 * lo * x.size ** (-0.2)


@dataclass(frozen=True)
class DensityCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(_trapezoid(self.density, self.grid))


def kde(points, bandwidth: float, grid=None) -> DensityCurve:
    """Gaussian kernel density, the mean of one kernel per point.

    ``grid`` is an array of evaluation points or ``(lo, hi, num)``; by default
    it spans six bandwidths beyond the data with spacing at most ``bw / 4``.
    """
    x = np.asarray(points, dtype=float)
    if x.size == 0:
        raise ValueError("kde needs at least one point")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if grid is None:
        lo, hi = x.min() - 6 * bandwidth, x.max() + 6 * bandwidth
        num = int(min(200_001, max(512, math.ceil((hi - lo) / (bandwidth / 4)) + 1)))
        grid = np.linspace(lo, hi, num)
    elif isinstance(grid, tuple) and len(grid) == 3:
        grid = np.linspace(grid[0], grid[1], int(grid[2]))
    grid = np.asarray(grid, dtype=float)
    z = (grid[:, None] - x[None, :]) / bandwidth
    dens = np.exp(-0.5 * z**2).mean(axis=1) / (bandwidth * math.sqrt(2 * math.pi))
    return DensityCurve(grid, dens, float(bandwidth))


@dataclass(frozen=True)
class Clustering1D:
    """Clusters of 1-D points; ``assignments`` follow the input order."""

    k: int
    assignments: np.ndarray
    centers: np.ndarray
    sse: float
    bounds: tuple[tuple[float, float], ...]
    sizes: tuple[int, ...]
    bic: dict = field(default_factory=dict)


def _sse_table(xs: np.ndarray):
    s1 = np.concatenate([[0.0], np.cumsum(xs)])
    s2 = np.concatenate([[0.0], np.cumsum(xs**2)])

    def sse(i, j):
        # points xs[i:j]
        cnt = j - i
        tot = s1[j] - s1[i]
        return np.maximum(s2[j] - s2[i] - tot**2 / cnt, 0.0)

    return sse


def kmeans_1d_dp(points, k: int) -> tuple[float, np.ndarray]:
    """Exact minimum within-cluster SSE for ``k`` clusters.

    Returns the SSE and the cluster label of each point in sorted order
    (clusters of the optimum are intervals of the sorted points).
    """
    xs = np.sort(np.asarray(points, dtype=float))
    n = xs.size
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    sse = _sse_table(xs)
    D = np.full((k + 1, n + 1), np.inf)
    B = np.zeros((k + 1, n + 1), dtype=np.int64)
    D[0, 0] = 0.0
    for q in range(1, k + 1):
        for i in range(q, n + 1):
            starts = np.arange(q - 1, i)
            vals = D[q - 1, starts] + sse(starts, i)
            j = int(np.argmin(vals))
            D[q, i] = vals[j]
            B[q, i] = starts[j]
    labels = np.empty(n, dtype=np.int64)
    end = n
    for q in range(k, 0, -1):
        start = B[q, end]
        labels[start:end] = q - 1
        end = start
    return float(D[k, n]), labels


def _bic(xs: np.ndarray, labels: np.ndarray, var_floor: float) -> float:
    n = xs.size
    k = int(labels.max()) + 1
    loglik = 0.0
    for j in range(k):
        pts = xs[labels == j]
        var = max(float(np.mean((pts - pts.mean()) ** 2)), var_floor)
        loglik += np.sum(math.log(pts.size / n) - 0.5 * math.log(2 * math.pi * var)
                         - (pts - pts.mean()) ** 2 / (2 * var))
    return 2 * loglik - (3 * k - 1) * math.log(n)


def cluster_1d(points, k_range=None) -> Clustering1D:
    """Optimal 1-D k-means, with k chosen by BIC under a Gaussian mixture.

    Zero-variance clusters are floored at ``gap**2 / 12`` where ``gap`` is
    the smallest spacing between distinct points.
    """
    x = np.asarray(points, dtype=float)
    if x.size == 0:
        raise ValueError("no points to cluster")
    distinct = np.unique(x)
    if k_range is None:
        k_range = (1, min(9, distinct.size))
    elif isinstance(k_range, int):
        k_range = (k_range, k_range)
    kmin, kmax = int(k_range[0]), int(k_range[-1])
    if not 1 <= kmin <= kmax <= distinct.size:
        raise ValueError(f"k range {k_range} not within [1, {distinct.size}]")
    order = np.argsort(x, kind="stable")
    xs = x[order]
    gap = float(np.min(np.diff(distinct))) if distinct.size > 1 else 1.0
    floor = gap**2 / 12.0

    best = None
    scores = {}
    for k in range(kmin, kmax + 1):
        sse, labels = kmeans_1d_dp(xs, k)
        scores[k] = _bic(xs, labels, floor)
        if best is None or scores[k] > scores[best[0]]:
            best = (k, sse, labels)
    k, sse, labels = best
    assignments = np.empty_like(labels)
    assignments[order] = labels
    centers = np.array([xs[labels == j].mean() for j in range(k)])
    bounds = tuple((float(xs[labels == j].min()), float(xs[labels == j].max())) for j in range(k))
    sizes = tuple(int(np.sum(labels == j)) for j in range(k))
    return Clustering1D(k, assignments, centers, sse, bounds, sizes, scores)


def changepoint_years(changepoints, years, mapping: str = "next") -> list[int]:
    """Year of each changepoint.

    ``"next"`` uses the first event of the new segment, ``"previous"`` the
    last event of the old one.
    """
    years = np.asarray(years)
    if mapping not in ("next", "previous"):
        raise ValueError("mapping must be 'next' or 'previous'")
    shift = 0 if mapping == "next" else -1
    return [int(years[int(c) + shift]) for c in changepoints]


@dataclass
class MetaSummary:
    years: list[int]
    density: DensityCurve | None
    clustering: Clustering1D | None
    n_analyses: int
    sources: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.years

    def clusters(self) -> list[dict]:
        if self.clustering is None:
            return []
        c = self.clustering
        total = sum(c.sizes)
        return [
            {"center": float(c.centers[j]), "start": lo, "end": hi, "count": c.sizes[j],
             "fraction": c.sizes[j] / total, "kind": "point" if lo == hi else "span"}
            for j, (lo, hi) in enumerate(c.bounds)
        ]

    def to_dict(self) -> dict:
        return {
            "empty": self.empty,
            "n_analyses": self.n_analyses,
            "n_changepoints": len(self.years),
            "years": self.years,
            "bandwidth": None if self.density is None else self.density.bandwidth,
            "bandwidth_adjust": BANDWIDTH_ADJUST,
            "k": None if self.clustering is None else self.clustering.k,
            "bic": {} if self.clustering is None else {str(k): v for k, v in self.clustering.bic.items()},
            "clusters": self.clusters(),
            "sources": self.sources,
            "notes": self.notes,
        }

    def write(self, outdir) -> Path:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "meta_summary.json", "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
        with open(outdir / "density.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["year", "density"])
            if self.density is not None:
                for g, d in zip(self.density.grid, self.density.density):
                    w.writerow([repr(float(g)), repr(float(d))])
        return outdir


def meta_report(analyses, mapping: str = "next", include_flagged: bool = False, k_range=None,
                adjust: float = BANDWIDTH_ADJUST) -> MetaSummary:
    """Pool changepoint years from several analyses.

    ``analyses`` yields ``(report, years)`` or ``(report, years, label)``
    where ``report`` is a DetectionReport or its dict form and ``years`` the
    start year of each event in series order.
    """
    pooled, sources, notes = [], [], []
    count = 0
    for item in analyses:
        report, years = item[0], item[1]
        label = item[2] if len(item) > 2 else f"analysis{count}"
        count += 1
        d = report if isinstance(report, dict) else report.to_dict()
        cps = list(d["confirmed"]) + (list(d["flagged"]) if include_flagged else [])
        ys = changepoint_years(sorted(cps), years, mapping)
        pooled.extend(ys)
        sources.extend([label] * len(ys))
    if not pooled:
        return MetaSummary([], None, None, count, [], ["no changepoints pooled"])
    density = None
    if np.unique(pooled).size >= 2:
        bw = adjust * nrd0_bandwidth(pooled)
        density = kde(pooled, bw)
    else:
        notes.append("density unavailable: fewer than two distinct years")
    order = np.argsort(pooled, kind="stable")
    pooled_sorted = [pooled[i] for i in order]
    sources_sorted = [sources[i] for i in order]
    clustering = cluster_1d(pooled_sorted, k_range)
    return MetaSummary(pooled_sorted, density, clustering, count, sources_sorted, notes)
