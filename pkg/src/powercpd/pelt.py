"""Penalised optimal segmentation: PELT and an exhaustive reference solver.

The objective is ``sum(C(segment)) + m * beta`` (the recursion starts from
``F(0) = -beta``), which has the same minimiser as the ``(m + 1) * beta``
form. Ties go to fewer changepoints, then to the earlier last changepoint.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .edcost import SegmentCostModel, ed_cost_kernel


class PenaltyKind(str, enum.Enum):
    AIC = "AIC"
    BIC = "BIC"
    HANNAN_QUINN = "HannanQuinn"
    MBIC = "mBIC"
    EXPLICIT = "ExplicitBeta"

    @classmethod
    def parse(cls, value) -> "PenaltyKind":
        if isinstance(value, cls):
            return value
        aliases = {"sic": cls.BIC, "hq": cls.HANNAN_QUINN, "hannan-quinn": cls.HANNAN_QUINN,
                   "explicit": cls.EXPLICIT, "manual": cls.EXPLICIT}
        key = str(value).strip().lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown penalty kind {value!r}")


@dataclass(frozen=True)
class PenaltySpec:
    kind: PenaltyKind = PenaltyKind.MBIC
    beta: float = 0.0
    p: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", PenaltyKind.parse(self.kind))
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.p < 1:
            raise ValueError("p must be >= 1")

    def value(self, n: int) -> float:
        return penalty_value(self.kind, n, self.p, self.beta)

    @property
    def augmented(self) -> bool:
        """mBIC also charges ``log(length)`` per segment."""
        return self.kind is PenaltyKind.MBIC


def penalty_value(kind, n: int, p: int = 1, beta: float | None = None) -> float:
    """Per-changepoint charge ``beta`` for a penalty kind."""
    if n < 2:
        raise ValueError("penalty needs n >= 2")
    kind = PenaltyKind.parse(kind)
    if kind is PenaltyKind.AIC:
        return 2.0 * p
    if kind is PenaltyKind.BIC:
        return p * math.log(n)
    if kind is PenaltyKind.HANNAN_QUINN:
        return 2.0 * p * math.log(math.log(n))
    if kind is PenaltyKind.MBIC:
        return (p + 2) * math.log(n)
    if beta is None:
        raise ValueError("ExplicitBeta needs a beta value")
    return float(beta)


@dataclass(frozen=True)
class Segmentation:
    """Optimal changepoints (segment end positions) and their costs."""

    changepoints: tuple[int, ...]
    n: int
    segment_costs: tuple[float, ...]
    beta: float
    objective: float
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def m(self) -> int:
        return len(self.changepoints)

    @property
    def total_cost(self) -> float:
        """Unpenalised cost Q."""
        return float(math.fsum(self.segment_costs))

    @property
    def bounds(self) -> list[tuple[int, int]]:
        edges = (0, *self.changepoints, self.n)
        return list(zip(edges[:-1], edges[1:]))

    def to_dict(self) -> dict:
        return {
            "changepoints": list(self.changepoints),
            "m": self.m,
            "n": self.n,
            "beta": self.beta,
            "total_cost": self.total_cost,
            "objective": self.objective,
            "segment_costs": list(self.segment_costs),
        }


def _resolve(model: SegmentCostModel, penalty) -> tuple[SegmentCostModel, float]:
    if isinstance(penalty, PenaltySpec):
        return model.with_augmentation(penalty.augmented), penalty.value(model.n)
    beta = float(penalty)
    if beta < 0:
        raise ValueError("beta must be >= 0")
    return model, beta


def _pruning_constant(model: SegmentCostModel) -> float:
    # C(s,u) + C(u,t) + K <= C(s,t) must hold for every split. The plain ED
    # cost gives K = 0; log-length terms cost at most log(n / 4) on top.
    if model.mbic_augmented:
        return min(0.0, -math.log(model.n / 4.0))
    return 0.0


@njit(cache=True)
def _pelt_core(doubled, table, scale, augmented, n, beta, min_len, prune_const, prune):
    inf = np.inf
    F = np.full(n + 1, inf)
    F[0] = -beta
    M = np.zeros(n + 1, dtype=np.int64)
    last = np.full(n + 1, -1, dtype=np.int64)
    # a candidate pruned at time t stays usable until t + min_len - 1
    kill = np.full(n + 1, n + 2, dtype=np.int64)
    cands = np.empty(n + 1, dtype=np.int64)
    vals = np.empty(n + 1)
    ncand = 0
    for t in range(min_len, n + 1):
        tau_new = t - min_len
        if tau_new == 0 or tau_new >= min_len:
            if F[tau_new] < inf:
                cands[ncand] = tau_new
                ncand += 1
        best = inf
        best_m = 0
        best_tau = -1
        for i in range(ncand):
            tau = cands[i]
            v = F[tau] + ed_cost_kernel(doubled, table, tau, t, scale, augmented)
            vals[i] = v
            total = v + beta
            mm = M[tau] + (1 if tau > 0 else 0)
            if total < best or (total == best and mm < best_m):
                best = total
                best_m = mm
                best_tau = tau
        F[t] = best
        M[t] = best_m
        last[t] = best_tau
        if prune and best < inf:
            tol = 1e-10 * (1.0 + abs(best))
            j = 0
            for i in range(ncand):
                tau = cands[i]
                if vals[i] + prune_const > best + tol:
                    if t + min_len < kill[tau]:
                        kill[tau] = t + min_len
                if kill[tau] > t + 1:
                    cands[j] = tau
                    j += 1
            ncand = j
    return F, M, last


def _backtrack(last: np.ndarray, n: int) -> list[int]:
    cps = []
    t = int(last[n])
    while t > 0:
        cps.append(t)
        t = int(last[t])
    return cps[::-1]


def _build(model: SegmentCostModel, cps, beta: float, objective: float, **extra) -> Segmentation:
    edges = (0, *cps, model.n)
    costs = tuple(model.cost(a, b) for a, b in zip(edges[:-1], edges[1:]))
    return Segmentation(tuple(int(c) for c in cps), model.n, costs, beta, float(objective), extra)


def pelt_segment(model: SegmentCostModel, penalty, min_seg_len: int = 2, prune: bool = True) -> Segmentation:
    """Exact penalised segmentation with PELT pruning.

    ``penalty`` is a :class:`PenaltySpec` or a bare ``beta``. An mBIC spec
    switches the cost to its log-length augmented form.
    """
    if min_seg_len < 1:
        raise ValueError("min_seg_len must be >= 1")
    model, beta = _resolve(model, penalty)
    n = model.n
    if n < 2 * min_seg_len:
        raise ValueError(f"series of length {n} too short for min_seg_len={min_seg_len}")
    g = model.grid
    F, _, last = _pelt_core(g.doubled, g.xlogx_half, g.scale, model.mbic_augmented, n, beta,
                            min_seg_len, _pruning_constant(model), prune)
    return _build(model, _backtrack(last, n), beta, F[n])


def _enumerate(model: SegmentCostModel, beta: float, min_len: int):
    n = model.n
    best = None
    for r in range(0, n // min_len):
        for cps in itertools.combinations(range(min_len, n - min_len + 1), r):
            edges = (0, *cps, n)
            if any(b - a < min_len for a, b in zip(edges[:-1], edges[1:])):
                continue
            total = -beta
            for a, b in zip(edges[:-1], edges[1:]):
                total = (total + model.cost(a, b)) + beta
            key = (total, r, tuple(reversed(cps)))
            if best is None or key < best[0]:
                best = (key, cps)
    return list(best[1]), best[0][0]


def _unpruned_dp(model: SegmentCostModel, beta: float, min_len: int):
    n = model.n
    F = [math.inf] * (n + 1)
    M = [0] * (n + 1)
    last = [-1] * (n + 1)
    F[0] = -beta
    for t in range(min_len, n + 1):
        for tau in [0, *range(min_len, t - min_len + 1)]:
            if F[tau] == math.inf:
                continue
            total = (F[tau] + model.cost(tau, t)) + beta
            mm = M[tau] + (tau > 0)
            if total < F[t] or (total == F[t] and mm < M[t]):
                F[t], M[t], last[t] = total, mm, tau
    return _backtrack(np.asarray(last), n), F[n]


def exhaustive_segment(model: SegmentCostModel, penalty, min_seg_len: int = 2, method: str = "auto") -> Segmentation:
    """Reference global minimiser without pruning.

    ``method="enumerate"`` visits every admissible segmentation (n <= 24);
    ``"dp"`` is the plain O(n^2) recursion (n <= 2000). ``"auto"`` enumerates
    up to n = 16.
    """
    model, beta = _resolve(model, penalty)
    n = model.n
    if n < 2 * min_seg_len:
        raise ValueError(f"series of length {n} too short for min_seg_len={min_seg_len}")
    if method == "auto":
        method = "enumerate" if n <= 16 else "dp"
    if method == "enumerate":
        if n > 24:
            raise ValueError(f"enumeration refused for n={n} > 24")
        cps, obj = _enumerate(model, beta, min_seg_len)
    elif method == "dp":
        if n > 2000:
            raise ValueError(f"exhaustive search refused for n={n} > 2000")
        cps, obj = _unpruned_dp(model, beta, min_seg_len)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _build(model, cps, beta, obj, method=method)
