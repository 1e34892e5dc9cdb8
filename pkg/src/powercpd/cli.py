"""Command-line interface: ``powercpd {simulate,detect,analyze,meta}``."""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import sys
import traceback
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .detector import DetectorConfig, detect_changepoints
from .ingest import (EVENT_FIELDS, PopulationTable, SchemaError, TimeSeries, ValidationReport, apply_transform,
                     filter_subsets, load_conflicts, normalize_population, order_events, read_events_csv,
                     write_events_csv)
from .meta import meta_report
from .powerlaw import ScenarioSpec
from .simlab import METHODS, load_scenario, run_trials, table2_cells

logger = logging.getLogger("powercpd")

DEFAULTS = {
    "seed": None,
    "plots": True,
    "detector": {"quantiles": None, "beta_range": [1.0, 1e6], "min_seg_len": 2, "radius": 0,
                 "mbic_p": 1, "mbic_beta": None},
    "simulate": {"scenario": "benchmark", "trials": None, "methods": list(METHODS), "table2": False,
                 "table2_lengths": [30, 100, 300, 1000], "workers": 1},
    "detect": {"input": None, "value_column": "value", "year_column": "year"},
    "data": {"datasets": [], "population": None, "variants": ["raw"], "subsets": None, "lower_bound": None,
             "reference_year": 2018},
    "meta": {"inputs": [], "mapping": "next", "include_flagged": False, "k_range": None},
}
VARIANTS = ("raw", "normalized", "dual2018", "dualAtTime")


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _beta_range(text: str) -> list[float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO:HI, e.g. 1:1e6") from None
    return [lo, hi]


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then command-line flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        loaded = yaml.safe_load(path.read_text()) or {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a key/value mapping")
        loaded.pop("command", None)
        loaded.pop("version", None)
        out_saved = loaded.pop("out", None)
        cfg = _merge(cfg, loaded)
        if out_saved and not args.out:
            args.out = out_saved
    det = cfg["detector"]
    for flag, key in (("quantiles", "quantiles"), ("beta_range", "beta_range"), ("radius", "radius"),
                      ("min_seg_len", "min_seg_len")):
        if getattr(args, flag, None) is not None:
            det[key] = getattr(args, flag)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.no_plots:
        cfg["plots"] = False
    if args.command == "simulate":
        sim = cfg["simulate"]
        if args.scenario:
            sim["scenario"] = args.scenario
        if args.trials is not None:
            sim["trials"] = args.trials
        if args.methods:
            sim["methods"] = args.methods.split(",")
        if args.table2:
            sim["table2"] = True
        if args.workers is not None:
            sim["workers"] = args.workers
    elif args.command in ("detect", "analyze"):
        data = cfg["data"]
        if args.population:
            data["population"] = {"path": args.population}
        if args.normalize or args.transform:
            variant = "raw"
            if args.normalize == "population":
                variant = "normalized"
            if args.transform and args.transform != "none":
                if variant == "normalized":
                    raise ConfigError("--transform applies to raw counts; drop --normalize")
                variant = args.transform
            data["variants"] = [variant]
        if args.command == "detect" and args.input:
            cfg["detect"]["input"] = args.input
        if args.command == "analyze" and args.input:
            data["datasets"] = [{"path": p} for p in args.input]
    elif args.command == "meta":
        if args.input:
            cfg["meta"]["inputs"] = list(args.input)
        if args.include_flagged:
            cfg["meta"]["include_flagged"] = True
    if not args.out:
        raise ConfigError("an output directory is required (--out)")
    cfg["out"] = str(args.out)
    cfg["command"] = args.command
    cfg["version"] = __version__
    return cfg


def detector_config(cfg: dict) -> DetectorConfig:
    d = cfg["detector"]
    try:
        return DetectorConfig(quantiles=d.get("quantiles"), beta_range=tuple(d["beta_range"]),
                              min_seg_len=int(d["min_seg_len"]), radius=int(d["radius"]),
                              mbic_p=int(d.get("mbic_p", 1)), mbic_beta=d.get("mbic_beta"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"detector: {exc}") from exc


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_jsonable)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def write_series_csv(series: TimeSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "year", "value"])
        for i, v in enumerate(series.values):
            year = "" if series.years is None else int(series.years[i])
            w.writerow([i, year, repr(float(v))])


def read_series_csv(path, value_column: str = "value", year_column: str = "year") -> TimeSeries:
    """Series from a CSV with a value column (and optional year), or one bare number per line."""
    text = Path(path).read_text(encoding="utf-8-sig")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigError(f"input {path} is empty")
    try:
        values = np.array([float(ln.split(",")[0]) for ln in lines])
        return TimeSeries(values)
    except ValueError:
        pass
    rows = list(csv.DictReader(lines))
    if value_column not in rows[0]:
        raise SchemaError(f"column {value_column!r} not found in {Path(path).name}")
    values = np.array([float(r[value_column]) for r in rows])
    years = None
    if year_column in rows[0] and all(r[year_column].strip() for r in rows):
        years = np.array([int(float(r[year_column])) for r in rows])
    return TimeSeries(values, years)


def _population(cfg: dict) -> PopulationTable | None:
    pop = cfg["data"].get("population")
    if not pop:
        return None
    if isinstance(pop, str):
        pop = {"path": pop}
    return PopulationTable.from_csv(pop["path"], pop.get("year_col", "year"), pop.get("pop_col", "population"),
                                    float(pop.get("multiplier", 1.0)))


def build_series(records, variant: str, table: PopulationTable | None, cfg: dict,
                 report: ValidationReport | None = None) -> TimeSeries:
    if variant not in VARIANTS:
        raise ConfigError(f"unknown data variant {variant!r}; choose from {VARIANTS}")
    if variant != "raw" and table is None:
        raise ConfigError(f"variant {variant!r} needs a population table (--population)")
    if variant == "normalized":
        records = normalize_population(records, table, report)
    series = order_events(records)
    if variant in ("dual2018", "dualAtTime"):
        series = apply_transform(series, variant, table, cfg["data"].get("lower_bound"),
                                 int(cfg["data"].get("reference_year", 2018)))
    return series


def _detect_into(series: TimeSeries, det: DetectorConfig, outdir: Path, plots: bool, title: str = "") -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    report = detect_changepoints(series.values, det)
    out = report.to_dict()
    out["timing"] = out["diagnostics"].pop("timing")
    if series.years is not None:
        out["confirmed_years"] = [int(series.years[c]) for c in report.confirmed]
        out["flagged_years"] = [int(series.years[c]) for c in report.flagged]
    _write_json(outdir / "report.json", out)
    _write_json(outdir / "penalty_path.json", report.path.to_dict())
    write_series_csv(series, outdir / "series.csv")
    if plots:
        from .plotting import plot_detection, plot_penalty_path

        plot_detection(series.values, out, outdir / "detection.png", series.years, title or None)
        plot_penalty_path(report.path, len(report.tau_crops), outdir / "penalty_path.png")
    return out


def run_detect(cfg: dict) -> int:
    out = Path(cfg["out"])
    src = cfg["detect"].get("input")
    if not src:
        raise ConfigError("detect: no input file given")
    src = Path(src)
    if not src.exists():
        raise ConfigError(f"detect: input {src} not found")
    det = detector_config(cfg)
    out.mkdir(parents=True, exist_ok=True)
    header = src.read_text(encoding="utf-8-sig").splitlines()[:1]
    is_events = bool(header) and all(f in header[0].split(",") for f in EVENT_FIELDS)
    if is_events:
        variants = cfg["data"].get("variants") or ["raw"]
        if len(variants) != 1:
            raise ConfigError("detect runs a single data variant")
        report = ValidationReport(source=src.name)
        series = build_series(read_events_csv(src), variants[0], _population(cfg), cfg, report)
        if report.errors:
            _write_json(out / "validation.json", report.to_dict())
    else:
        series = read_series_csv(src, cfg["detect"]["value_column"], cfg["detect"]["year_column"])
    _write_json(out / "config.json", cfg)
    result = _detect_into(series, det, out, cfg["plots"], src.stem)
    logger.info("%s: %s, confirmed %s", src.name, result["verdict"], result["confirmed"])
    return 0


def run_simulate(cfg: dict) -> int:
    out = Path(cfg["out"])
    sim = cfg["simulate"]
    det = detector_config(cfg)
    methods = tuple(sim["methods"])
    if set(methods) - set(METHODS):
        raise ConfigError(f"simulate.methods: unknown {sorted(set(methods) - set(METHODS))}")
    out.mkdir(parents=True, exist_ok=True)
    workers = int(sim.get("workers") or 1)
    if sim.get("table2"):
        trials = int(sim["trials"] or 1000)
        cells = [c for c in table2_cells(int(cfg["seed"] or 0), trials) if c.segments[0][0] in sim["table2_lengths"]]
        _write_json(out / "config.json", cfg)
        overview = []
        for cell in cells:
            summary = run_trials(cell, methods, trials, None, det, workers)
            summary.write(out / cell.name)
            for method, st in summary.summary.items():
                overview.append({"cell": cell.name, "alpha_first": cell.segments[0][1],
                                 "alpha_second": cell.segments[1][1], "s": cell.segments[0][0],
                                 "method": method, **{f"median_{k}": v for k, v in st["median"].items()},
                                 "p_m0": st["proportions"].get("0", 0.0), "p_m1": st["proportions"].get("1", 0.0)})
        with open(out / "table2.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(overview[0]))
            w.writeheader()
            w.writerows(overview)
        return 0

    scen = sim["scenario"]
    try:
        spec = ScenarioSpec.from_dict(scen) if isinstance(scen, dict) else load_scenario(scen)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"scenario: {exc}") from exc
    trials = int(sim["trials"] or spec.trials)
    seed = int(cfg["seed"]) if cfg.get("seed") is not None else spec.seed
    resolved = copy.deepcopy(cfg)
    resolved["simulate"]["scenario"] = spec.to_dict()
    resolved["simulate"]["trials"] = trials
    _write_json(out / "config.json", resolved)
    summary = run_trials(spec, methods, trials, seed, det, workers)
    summary.write(out)
    if cfg["plots"]:
        from .plotting import plot_trials

        plot_trials(summary, out / "trials.png")
    for method, st in summary.summary.items():
        med = st["median"]
        logger.info("%-10s median hausdorff %.1f  ari %.3f", method, med["hausdorff"], med["ari"])
    return 0


def run_analyze(cfg: dict) -> int:
    out = Path(cfg["out"])
    data = cfg["data"]
    datasets = data.get("datasets") or []
    if not datasets:
        raise ConfigError("analyze: no datasets configured")
    det = detector_config(cfg)
    table = _population(cfg)
    variants = data.get("variants") or ["raw"]
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", cfg)
    index = []
    for i, ds in enumerate(datasets):
        path = Path(ds["path"])
        if not path.exists():
            raise ConfigError(f"dataset {path} not found")
        name = ds.get("name") or path.stem
        if ds.get("schema"):
            records, report = load_conflicts(path, {"source": name, **ds["schema"]})
        else:
            records, report = read_events_csv(path), ValidationReport(source=name)
            report.events = len(records)
        dsdir = out / name
        dsdir.mkdir(parents=True, exist_ok=True)
        write_events_csv(records, dsdir / "events.csv")
        groups = {"combined": records}
        subsets = data.get("subsets") or sorted({r.subset for r in records})
        for s in subsets:
            groups[s] = filter_subsets(records, [s])
        for variant in variants:
            for group, recs in groups.items():
                series = build_series(recs, variant, table, cfg, report)
                entry = {"dataset": name, "variant": variant, "subset": group, "n": len(series),
                         "dir": str(Path(name) / variant / group)}
                if len(series) < max(4, 2 * det.min_seg_len):
                    entry["skipped"] = "too few events"
                    index.append(entry)
                    continue
                res = _detect_into(series, det, dsdir / variant / group, cfg["plots"], f"{name} {variant} {group}")
                entry.update({k: res.get(k) for k in ("verdict", "confirmed_years", "flagged_years")})
                index.append(entry)
                logger.info("%s/%s/%s: %s %s", name, variant, group, res["verdict"], res.get("confirmed_years"))
        _write_json(dsdir / "validation.json", report.to_dict())
    _write_json(out / "analyses.json", index)
    return 0


def _read_years(series_csv: Path) -> np.ndarray:
    with open(series_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not rows[0]["year"]:
        return np.array([int(r["index"]) for r in rows])
    return np.array([int(r["year"]) for r in rows])


def run_meta(cfg: dict) -> int:
    out = Path(cfg["out"])
    mcfg = cfg["meta"]
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", cfg)
    inputs = [Path(p) for p in mcfg.get("inputs") or []]
    for p in inputs:
        if not p.exists():
            raise ConfigError(f"meta input {p} not found")
    pools = [(p.name or "pool", sorted(p.rglob("report.json")) if p.is_dir() else [p]) for p in inputs]
    if not pools:
        pools = [("pool", [])]
    seen = set()
    for name, reports in pools:
        label = name
        while label in seen:
            label += "_"
        seen.add(label)
        analyses = []
        for rp in reports:
            rep = json.loads(rp.read_text())
            years = _read_years(rp.parent / "series.csv")
            analyses.append((rep, years, str(rp.parent)))
        summary = meta_report(analyses, mcfg.get("mapping", "next"), bool(mcfg.get("include_flagged")),
                              mcfg.get("k_range"))
        dest = out / label if len(pools) > 1 else out
        summary.write(dest)
        if cfg["plots"] and not summary.empty:
            from .plotting import plot_meta

            plot_meta(summary, dest / "meta.png", label)
        logger.info("%s: %d changepoints from %d analyses", label, len(summary.years), summary.n_analyses)
    return 0


COMMANDS = {"simulate": run_simulate, "detect": run_detect, "analyze": run_analyze, "meta": run_meta}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--quantiles", type=int, metavar="K", help="number of ED quantile probes")
    common.add_argument("--beta-range", type=_beta_range, metavar="LO:HI", help="CROPS penalty interval")
    common.add_argument("--radius", type=int, metavar="R", help="matching radius between mBIC and CROPS")
    common.add_argument("--min-seg-len", type=int, metavar="L")
    common.add_argument("--normalize", choices=["none", "population"])
    common.add_argument("--transform", choices=["none", "dual2018", "dualAtTime"])
    common.add_argument("--population", help="CSV with year,population columns")
    common.add_argument("--trials", type=int, metavar="N")
    common.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="powercpd", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo calibration runs")
    p.add_argument("--scenario", help="bundled scenario name or scenario file")
    p.add_argument("--methods", help="comma list of mbic,crops,algorithm1")
    p.add_argument("--table2", action="store_true", help="run the single-changepoint parameter grid")
    p.add_argument("--workers", type=int)
    p = sub.add_parser("detect", parents=[common], help="detect changepoints in one series")
    p.add_argument("input", nargs="?", help="series CSV or canonical events CSV")
    p = sub.add_parser("analyze", parents=[common], help="per-subset analyses of conflict catalogues")
    p.add_argument("input", nargs="*", help="canonical events CSVs (schemas go in --config)")
    p = sub.add_parser("meta", parents=[common], help="pool changepoints across analyses")
    p.add_argument("input", nargs="*", help="analysis directories or report.json files")
    p.add_argument("--include-flagged", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, SchemaError) as exc:
        return _fail(args, "config_error", exc, 2)
    except Exception as exc:  # noqa: BLE001
        logger.debug(traceback.format_exc())
        return _fail(args, type(exc).__name__, exc, 1)


def _fail(args, kind: str, exc: Exception, code: int) -> int:
    err = {"error": kind, "message": str(exc), "command": args.command}
    sys.stderr.write(json.dumps(err) + "\n")
    if getattr(args, "out", None):
        try:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            _write_json(Path(args.out) / "error.json", err)
        except OSError:
            pass
    return code


if __name__ == "__main__":
    sys.exit(main())
