"""Changepoint detection for heavy-tailed sequences with an empirical-distribution cost."""

__version__ = "0.1.0"

from .crops import PenaltyPath, crops_explore, select_elbow
from .detector import DetectionReport, DetectorConfig, detect_changepoints, match_sets
from .edcost import SegmentCostModel, build_probe_grid, ed_cost_model, segment_cost
from .ingest import dual_transform, load_conflicts
from .meta import meta_report
from .metrics import adjusted_rand, hausdorff, tdr
from .pelt import PenaltyKind, PenaltySpec, Segmentation, exhaustive_segment, pelt_segment, penalty_value
from .powerlaw import PowerLawParams, ScenarioSpec, generate_scenario, quantile_powerlaw, sample_powerlaw
from .simlab import run_trials, table2_grid

__all__ = [
    "DetectionReport", "DetectorConfig", "PenaltyKind", "PenaltyPath", "PenaltySpec", "PowerLawParams",
    "ScenarioSpec", "SegmentCostModel", "Segmentation", "adjusted_rand", "build_probe_grid", "crops_explore",
    "detect_changepoints", "dual_transform", "ed_cost_model", "exhaustive_segment", "generate_scenario", "hausdorff",
    "load_conflicts", "match_sets", "meta_report", "pelt_segment", "penalty_value", "quantile_powerlaw",
    "run_trials", "sample_powerlaw", "segment_cost", "select_elbow", "table2_grid", "tdr",
]
