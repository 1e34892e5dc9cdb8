"""Monte-Carlo calibration of the detector on simulated power-law scenarios."""

from __future__ import annotations

import csv
import itertools
import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .detector import DetectorConfig, detect_changepoints
from .metrics import DEFAULT_RADII, score
from .powerlaw import ScenarioSpec, generate_scenario

METHODS = ("mbic", "crops", "algorithm1")
TRIAL_FIELDS = ["trial", "method", "m", "hausdorff", "ari", *(f"tdr{r}" for r in DEFAULT_RADII), "cpts"]
METRIC_KEYS = ["m", "hausdorff", "ari", *(f"tdr{r}" for r in DEFAULT_RADII)]


def load_scenario(source) -> ScenarioSpec:
    """Scenario from a YAML/JSON file path or a bundled scenario name."""
    path = Path(str(source))
    if path.suffix.lower() in (".yaml", ".yml", ".json") and path.exists():
        text = path.read_text()
    else:
        res = resources.files("powercpd") / "scenarios" / f"{source}.yaml"
        if not res.is_file():
            raise FileNotFoundError(f"no scenario file or bundled scenario named {source!r}")
        text = res.read_text()
    data = yaml.safe_load(text) or {}
    return ScenarioSpec.from_dict(data.get("scenario", data))


def bundled_scenarios() -> list[str]:
    root = resources.files("powercpd") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def _run_one(args):
    spec, trial, config, methods = args
    y, truth = generate_scenario(spec, trial)
    report = detect_changepoints(y, config)
    sets = {"mbic": report.tau_mbic, "crops": report.tau_crops, "algorithm1": report.confirmed}
    rows = []
    for method in methods:
        cps = sets[method]
        row = {"trial": trial, "method": method, **score(cps, truth, y.size)}
        row["cpts"] = ";".join(str(c) for c in cps)
        if method == "algorithm1":
            row["verdict"] = report.verdict
        rows.append(row)
    return rows


def summarize(rows: list[dict], methods=None) -> dict:
    """Histograms, medians and changepoint-location quantiles per method."""
    methods = methods or sorted({r["method"] for r in rows}, key=lambda m: (m not in METHODS, m))
    out = {}
    for method in methods:
        mrows = [r for r in rows if r["method"] == method]
        if not mrows:
            continue
        counts = Counter(int(r["m"]) for r in mrows)
        total = len(mrows)
        locations = {}
        for m in sorted(counts):
            if m == 0:
                continue
            cps = np.array([[int(c) for c in str(r["cpts"]).split(";")] for r in mrows if int(r["m"]) == m])
            locations[str(m)] = [
                dict(zip(("min", "q1", "median", "q3", "max"),
                         np.quantile(cps[:, j], [0, 0.25, 0.5, 0.75, 1]).tolist()))
                for j in range(m)
            ]
        entry = {
            "trials": total,
            "histogram": {str(m): counts[m] for m in sorted(counts)},
            "proportions": {str(m): counts[m] / total for m in sorted(counts)},
            "median": {k: float(np.median([float(r[k]) for r in mrows])) for k in METRIC_KEYS},
            "mean": {k: float(np.mean([float(r[k]) for r in mrows])) for k in METRIC_KEYS},
            "locations": locations,
        }
        if method == "algorithm1" and "verdict" in mrows[0]:
            verdicts = Counter(r["verdict"] for r in mrows)
            entry["verdicts"] = dict(sorted(verdicts.items()))
        out[method] = entry
    return out


@dataclass
class TrialSummary:
    spec: ScenarioSpec
    rows: list[dict]
    methods: tuple[str, ...] = METHODS
    config: DetectorConfig = field(default_factory=DetectorConfig)

    @property
    def summary(self) -> dict:
        return summarize(self.rows, list(self.methods))

    def method_rows(self, method: str) -> list[dict]:
        return [r for r in self.rows if r["method"] == method]

    def to_dict(self) -> dict:
        return {
            "scenario": self.spec.to_dict(),
            "n": self.spec.n,
            "true_changepoints": self.spec.true_changepoints,
            "detector": self.config.to_dict(),
            "methods": self.summary,
        }

    def write(self, outdir) -> Path:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        write_trials_csv(self.rows, outdir / "trials.csv")
        with open(outdir / "summary.json", "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        return outdir


def write_trials_csv(rows, path):
    fields = list(TRIAL_FIELDS)
    if any("verdict" in r for r in rows):
        fields.append("verdict")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: r.get(k, "") for k in fields})


def read_trials_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["trial"] = int(r["trial"])
        r["m"] = int(r["m"])
    return rows


def run_trials(spec: ScenarioSpec, methods=METHODS, N: int | None = None, seed: int | None = None,
               config: DetectorConfig | None = None, workers: int = 1) -> TrialSummary:
    """Simulate ``N`` trials of a scenario and score each method against the truth.

    Trial ``i`` draws from a stream keyed on ``(seed, i)``, so results do
    not depend on ``workers``.
    """
    methods = tuple(methods)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods {sorted(unknown)}")
    N = spec.trials if N is None else int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    if seed is not None:
        spec = ScenarioSpec(spec.segments, spec.xmin, N, int(seed), spec.name)
    config = config or DetectorConfig()
    jobs = [(spec, i, config, methods) for i in range(N)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, N // (4 * workers))))
    else:
        results = [_run_one(job) for job in jobs]
    rows = [row for trial_rows in results for row in trial_rows]
    return TrialSummary(spec, rows, methods, config)


TABLE2_EXPONENTS = (1.7, 2.3)
TABLE2_MODIFIERS = (0.0, 0.05, 0.15, 0.25, 0.5)
TABLE2_ORDERS = ("low-high", "high-low")
TABLE2_LENGTHS = (30, 100, 300, 1000)


def table2_cells(seed: int = 0, trials: int = 1000) -> list[ScenarioSpec]:
    """The single-changepoint grid; a zero modifier has no order, leaving 72 cells."""
    cells = []
    seen = set()
    for alpha, mod, order, s in itertools.product(TABLE2_EXPONENTS, TABLE2_MODIFIERS, TABLE2_ORDERS, TABLE2_LENGTHS):
        first, second = (alpha - mod, alpha + mod) if order == "low-high" else (alpha + mod, alpha - mod)
        key = (alpha, s, round(first, 10), round(second, 10))
        if key in seen:
            continue
        seen.add(key)
        name = f"alpha{alpha}_mod{mod}_{order if mod else 'none'}_s{s}"
        cell_seed = int(np.random.SeedSequence([seed, len(cells)]).generate_state(1, np.uint64)[0] >> 1)
        cells.append(ScenarioSpec(((s, first), (s, second)), trials=trials, seed=cell_seed, name=name))
    return cells


def table2_grid(seed: int = 0, trials: int = 1000, methods=METHODS, config: DetectorConfig | None = None,
                workers: int = 1, lengths=TABLE2_LENGTHS) -> list[TrialSummary]:
    cells = [c for c in table2_cells(seed, trials) if c.segments[0][0] in lengths]
    return [run_trials(c, methods, trials, None, config, workers) for c in cells]
