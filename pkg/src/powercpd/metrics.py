"""Segmentation quality: Hausdorff distance, adjusted Rand index, true detection rate."""

from __future__ import annotations

from math import comb

import numpy as np

DEFAULT_RADII = (0, 3, 5, 8)


def hausdorff(a, b, n: int) -> int:
    """Hausdorff distance between changepoint sets, each augmented with ``{0, n}``."""
    x = np.unique(np.concatenate([[0, n], np.asarray(list(a), dtype=np.int64)]))
    y = np.unique(np.concatenate([[0, n], np.asarray(list(b), dtype=np.int64)]))
    d = np.abs(x[:, None] - y[None, :])
    return int(max(d.min(axis=1).max(), d.min(axis=0).max()))


def segment_labels(changepoints, n: int) -> np.ndarray:
    """Segment id of every index ``0..n-1``."""
    cps = np.asarray(sorted(changepoints), dtype=np.int64)
    return np.searchsorted(cps, np.arange(n), side="right")


def adjusted_rand(a, b, n: int) -> float:
    """Adjusted Rand index between the partitions induced by two changepoint sets."""
    if n <= 0:
        raise ValueError("n must be positive")
    return adjusted_rand_labels(segment_labels(a, n), segment_labels(b, n))


def adjusted_rand_labels(u, v) -> float:
    u = np.unique(np.asarray(u), return_inverse=True)[1]
    v = np.unique(np.asarray(v), return_inverse=True)[1]
    n = u.size
    if n != v.size or n == 0:
        raise ValueError("label vectors must be nonempty and equally long")
    table = np.zeros((u.max() + 1, v.max() + 1), dtype=np.int64)
    np.add.at(table, (u, v), 1)
    index = sum(comb(int(c), 2) for c in table.ravel())
    sum_a = sum(comb(int(c), 2) for c in table.sum(axis=1))
    sum_b = sum(comb(int(c), 2) for c in table.sum(axis=0))
    pairs = comb(n, 2)
    # (index - expected) / (max - expected), cleared of fractions so the
    # final division is the only rounding step
    num = 2 * (index * pairs - sum_a * sum_b)
    den = (sum_a + sum_b) * pairs - 2 * sum_a * sum_b
    if den == 0:
        # both partitions trivial (one block, or all singletons) and identical
        return 1.0
    return num / den


def tdr(detected, truth, radius: int, n: int | None = None) -> float:
    """Fraction of detected changepoints within ``radius`` of a true one.

    Endpoints ``0`` and ``n`` are dropped from both sets. With nothing
    detected the rate is 1 when the truth is also empty, else 0.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")

    def interior(s):
        return [int(c) for c in s if c != 0 and (n is None or c != n)]

    det, tru = interior(detected), np.asarray(interior(truth), dtype=np.int64)
    if not det:
        return 1.0 if tru.size == 0 else 0.0
    if tru.size == 0:
        return 0.0
    hits = sum(1 for d in det if np.min(np.abs(tru - d)) <= radius)
    return hits / len(det)


def score(detected, truth, n: int, radii=DEFAULT_RADII) -> dict:
    out = {
        "m": len(detected),
        "hausdorff": hausdorff(detected, truth, n),
        "ari": adjusted_rand(detected, truth, n),
    }
    for r in radii:
        out[f"tdr{r}"] = tdr(detected, truth, r, n)
    return out
