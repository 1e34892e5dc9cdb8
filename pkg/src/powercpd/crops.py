"""Changepoints for a range of penalties (CROPS) and elbow selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edcost import SegmentCostModel
from .pelt import Segmentation, pelt_segment

DEFAULT_BETA_RANGE = (1.0, 1e6)


@dataclass(frozen=True)
class PathEntry:
    beta_lo: float
    beta_hi: float
    segmentation: Segmentation

    @property
    def m(self) -> int:
        return self.segmentation.m

    @property
    def total_cost(self) -> float:
        return self.segmentation.total_cost

    @property
    def beta_mid(self) -> float:
        return 0.5 * (self.beta_lo + self.beta_hi)


@dataclass(frozen=True)
class PenaltyPath:
    """Every distinct optimal segmentation over ``[beta_lo, beta_hi]``, by decreasing m."""

    entries: tuple[PathEntry, ...]
    beta_lo: float
    beta_hi: float
    pelt_runs: int

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_dict(self) -> dict:
        return {
            "beta_range": [self.beta_lo, self.beta_hi],
            "pelt_runs": self.pelt_runs,
            "entries": [
                {
                    "beta_lo": e.beta_lo,
                    "beta_hi": e.beta_hi,
                    "m": e.m,
                    "total_cost": e.total_cost,
                    "changepoints": list(e.segmentation.changepoints),
                }
                for e in self.entries
            ],
        }


def _crossings(segs):
    """Penalties where consecutive cost lines ``Q + m * beta`` cross."""
    return [(s2.total_cost - s1.total_cost) / (s1.m - s2.m) for s1, s2 in zip(segs[:-1], segs[1:])]


def _lower_envelope(segs, rtol=1e-9):
    """Drop segmentations that are optimal at a single penalty at most.

    Nearly concurrent lines can leave a middle entry whose crossings are out
    of order by rounding noise; it never wins on an open interval.
    """
    segs = list(segs)
    i = 1
    while i < len(segs) - 1:
        cuts = _crossings(segs[i - 1:i + 2])
        if cuts[1] - cuts[0] <= rtol * max(1.0, abs(cuts[0])):
            del segs[i]
            i = max(1, i - 1)
        else:
            i += 1
    return segs


def crops_explore(model: SegmentCostModel, beta_lo: float = DEFAULT_BETA_RANGE[0],
                  beta_hi: float = DEFAULT_BETA_RANGE[1], min_seg_len: int = 2) -> PenaltyPath:
    if not (0 < beta_lo < beta_hi) or not np.isfinite(beta_hi):
        raise ValueError(f"invalid penalty interval [{beta_lo}, {beta_hi}]")
    model = model.with_augmentation(False)
    runs = 0

    def run(beta):
        nonlocal runs
        runs += 1
        return pelt_segment(model, beta, min_seg_len)

    found = {}
    lo, hi = run(beta_lo), run(beta_hi)
    found[lo.m] = lo
    found[hi.m] = hi
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        if a.m <= b.m + 1:
            continue
        beta_int = (b.total_cost - a.total_cost) / (a.m - b.m)
        mid = run(beta_int)
        if b.m < mid.m < a.m:
            found.setdefault(mid.m, mid)
            stack.append((mid, b))
            stack.append((a, mid))

    segs = _lower_envelope(sorted(found.values(), key=lambda s: -s.m))
    cuts = _crossings(segs)
    edges = [beta_lo, *(min(max(c, beta_lo), beta_hi) for c in cuts), beta_hi]
    entries = tuple(PathEntry(edges[i], edges[i + 1], s) for i, s in enumerate(segs))
    return PenaltyPath(entries, beta_lo, beta_hi, runs)


def elbow_curvature(path: PenaltyPath) -> tuple[list[PathEntry], np.ndarray]:
    """Entries by increasing m and the discrete curvature at each interior point.

    Endpoints get ``-inf`` so they are never selected when interior points exist.
    """
    ordered = sorted(path.entries, key=lambda e: e.m)
    kappa = np.full(len(ordered), -np.inf)
    for i in range(1, len(ordered) - 1):
        prev, cur, nxt = ordered[i - 1], ordered[i], ordered[i + 1]
        left = (prev.total_cost - cur.total_cost) / (cur.m - prev.m)
        right = (cur.total_cost - nxt.total_cost) / (nxt.m - cur.m)
        kappa[i] = left - right
    return ordered, kappa


def select_elbow(path: PenaltyPath) -> Segmentation:
    """Segmentation where cost against m bends most sharply; ties go to smaller m."""
    if len(path) == 0:
        raise ValueError("empty penalty path")
    ordered, kappa = elbow_curvature(path)
    if len(ordered) < 3:
        return ordered[0].segmentation
    return ordered[int(np.argmax(kappa))].segmentation
