"""Combined mBIC / CROPS changepoint detection for heavy-tailed series."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .crops import DEFAULT_BETA_RANGE, PenaltyPath, crops_explore, elbow_curvature, select_elbow
from .edcost import build_probe_grid, SegmentCostModel
from .pelt import PenaltyKind, PenaltySpec, pelt_segment

NO_CHANGEPOINTS = "no_changepoints"
CHANGEPOINTS_FOUND = "changepoints_found"


@dataclass(frozen=True)
class DetectorConfig:
    quantiles: int | None = None
    beta_range: tuple[float, float] = DEFAULT_BETA_RANGE
    min_seg_len: int = 2
    radius: int = 0
    mbic_p: int = 1
    mbic_beta: float | None = None  # overrides (p + 2) log n

    def __post_init__(self):
        lo, hi = self.beta_range
        object.__setattr__(self, "beta_range", (float(lo), float(hi)))
        if not 0 < self.beta_range[0] < self.beta_range[1]:
            raise ValueError(f"beta_range must satisfy 0 < lo < hi, got {self.beta_range}")
        if self.min_seg_len < 1:
            raise ValueError("min_seg_len must be >= 1")
        if self.radius < 0:
            raise ValueError("radius must be >= 0")

    def mbic_penalty(self) -> PenaltySpec:
        if self.mbic_beta is None:
            return PenaltySpec(PenaltyKind.MBIC, p=self.mbic_p)
        return PenaltySpec(PenaltyKind.EXPLICIT, beta=self.mbic_beta, p=self.mbic_p)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta_range"] = list(self.beta_range)
        return d


@dataclass
class DetectionReport:
    tau_mbic: list[int]
    tau_crops: list[int]
    confirmed: list[int]
    flagged: list[int]
    verdict: str
    n: int
    path: PenaltyPath | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.confirmed)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "n": self.n,
            "confirmed": list(self.confirmed),
            "flagged": list(self.flagged),
            "tau_mbic": list(self.tau_mbic),
            "tau_crops": list(self.tau_crops),
            "penalty_path": self.path.to_dict() if self.path is not None else None,
            "diagnostics": self.diagnostics,
        }


def match_sets(a, b, radius: int = 0) -> tuple[list[int], list[int], list[int]]:
    """Greedy nearest-pair matching of two changepoint sets.

    Pairs within ``radius`` are accepted closest first, each element used at
    most once. Returns ``(matched a-side indices, a_only, b_only)``.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    a, b = sorted(set(int(x) for x in a)), sorted(set(int(y) for y in b))
    pairs = sorted((abs(x - y), x, y) for x in a for y in b if abs(x - y) <= radius)
    used_a, used_b = set(), set()
    for _, x, y in pairs:
        if x not in used_a and y not in used_b:
            used_a.add(x)
            used_b.add(y)
    return sorted(used_a), [x for x in a if x not in used_a], [y for y in b if y not in used_b]


def combine(tau_mbic, tau_crops, radius: int = 0) -> tuple[str, list[int], list[int]]:
    """Decision rule on the two changepoint sets: ``(verdict, confirmed, flagged)``."""
    tau_mbic, tau_crops = sorted(tau_mbic), sorted(tau_crops)
    if len(tau_mbic) == 0 and len(tau_crops) > 2:
        return NO_CHANGEPOINTS, [], []
    confirmed, a_only, b_only = match_sets(tau_mbic, tau_crops, radius)
    return CHANGEPOINTS_FOUND, confirmed, sorted(a_only + b_only)


def detect_changepoints(series, config: DetectorConfig | None = None) -> DetectionReport:
    config = config or DetectorConfig()
    y = np.asarray(series, dtype=float)
    if y.size < max(4, 2 * config.min_seg_len):
        raise ValueError(f"series of length {y.size} too short to segment")
    t0 = time.perf_counter()
    grid = build_probe_grid(y, config.quantiles)
    model = SegmentCostModel(grid)
    t1 = time.perf_counter()
    mbic = pelt_segment(model, config.mbic_penalty(), config.min_seg_len)
    t2 = time.perf_counter()
    path = crops_explore(model, *config.beta_range, min_seg_len=config.min_seg_len)
    crops_seg = select_elbow(path)
    t3 = time.perf_counter()

    verdict, confirmed, flagged = combine(mbic.changepoints, crops_seg.changepoints, config.radius)
    ordered, kappa = elbow_curvature(path)
    diagnostics = {
        "quantiles": grid.K,
        "mbic_beta": mbic.beta,
        "mbic_objective": mbic.objective,
        "crops_m": crops_seg.m,
        "crops_total_cost": crops_seg.total_cost,
        "crops_path_m": [e.m for e in ordered],
        "crops_curvature": [None if not np.isfinite(k) else float(k) for k in kappa],
        "crops_elbow_fallback": len(path) < 3,
        "radius": config.radius,
        "timing": {"grid": t1 - t0, "mbic": t2 - t1, "crops": t3 - t2},
    }
    return DetectionReport(list(mbic.changepoints), list(crops_seg.changepoints), confirmed, flagged,
                           verdict, int(y.size), path, diagnostics)
