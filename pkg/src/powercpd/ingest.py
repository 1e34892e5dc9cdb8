"""Conflict catalogues: loading, event ordering, population scaling, bounded transforms."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

SUBSETS = ("inter_state", "intra_state", "extra_state", "non_state", "civil", "other")
DEFAULT_SENTINELS = ("-9", "-8", "-7", "", "NA", "NaN", "na", "nan", ".")
EVENT_FIELDS = ["event_id", "name", "subset", "start_year", "deaths", "source"]


class SchemaError(ValueError):
    """A mapped column is absent from the input file."""


@dataclass(frozen=True)
class ConflictRecord:
    event_id: str
    name: str
    subset: str
    start_year: int
    deaths: float | None
    source: str = ""
    order: int = 0


@dataclass
class ValidationReport:
    source: str = ""
    rows_loaded: int = 0
    rows_analyzed: int = 0
    rows_missing_deaths: int = 0
    rows_skipped: int = 0
    events: int = 0
    events_with_deaths: int = 0
    events_missing_deaths: int = 0
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def canonical_subset(raw: str, mapping: dict | None = None) -> str:
    if mapping and raw in mapping:
        return mapping[raw]
    key = str(raw).strip().lower().replace("-", "_").replace(" ", "_")
    key = {"interstate": "inter_state", "intrastate": "intra_state", "extrastate": "extra_state",
           "nonstate": "non_state", "inter": "inter_state", "intra": "intra_state",
           "extra": "extra_state", "non": "non_state"}.get(key, key)
    return key if key in SUBSETS else "other"


@dataclass(frozen=True)
class SchemaMap:
    """Column names of one catalogue layout.

    ``deaths`` may list several columns (e.g. one per side); they are summed
    per row. ``subset`` may instead be given as a fixed ``subset_value``.
    """

    event_id: str
    start_year: str
    deaths: tuple[str, ...]
    name: str | None = None
    subset: str | None = None
    subset_value: str | None = None
    subset_map: dict = field(default_factory=dict)
    sentinels: tuple[str, ...] = DEFAULT_SENTINELS
    source: str = ""
    delimiter: str | None = None
    quotechar: str = '"'

    @classmethod
    def from_dict(cls, d: dict) -> "SchemaMap":
        d = dict(d)
        missing = [k for k in ("event_id", "start_year", "deaths") if k not in d]
        if missing:
            raise SchemaError(f"schema map lacks {', '.join(missing)}")
        deaths = d.pop("deaths")
        deaths = (deaths,) if isinstance(deaths, str) else tuple(deaths)
        sentinels = tuple(str(s) for s in d.pop("sentinels", DEFAULT_SENTINELS))
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise SchemaError(f"unknown schema keys: {sorted(extra)}")
        return cls(deaths=deaths, sentinels=sentinels, **d)


def _delimiter(path: Path, schema: SchemaMap, sample: str) -> str:
    if schema.delimiter:
        return "\t" if schema.delimiter in ("\\t", "tab") else schema.delimiter
    if path.suffix.lower() in (".tsv", ".tab"):
        return "\t"
    try:
        return csv.Sniffer().sniff(sample, delimiters=",\t;").delimiter
    except csv.Error:
        return ","


def load_conflicts(path, schema: SchemaMap | dict) -> tuple[list[ConflictRecord], ValidationReport]:
    """Read a delimited catalogue into one record per event.

    Participant rows sharing an event id are merged: deaths are summed over
    rows that have a value, and the event is missing only if every row is.
    """
    path = Path(path)
    if isinstance(schema, dict):
        schema = SchemaMap.from_dict(schema)
    report = ValidationReport(source=schema.source or path.name)
    text = path.read_text(encoding="utf-8-sig")
    if not text.strip():
        report.warnings.append("empty file")
        return [], report

    reader = csv.DictReader(text.splitlines(), delimiter=_delimiter(path, schema, text[:4096]),
                            quotechar=schema.quotechar)
    header = [h.strip() for h in (reader.fieldnames or [])]
    reader.fieldnames = header
    wanted = [schema.event_id, schema.start_year, *schema.deaths]
    wanted += [c for c in (schema.name, schema.subset) if c]
    for col in wanted:
        if col not in header:
            raise SchemaError(f"column {col!r} not found in {path.name}")

    sentinels = set(schema.sentinels)
    events: dict[str, dict] = {}
    for lineno, row in enumerate(reader, start=2):
        report.rows_loaded += 1
        try:
            year = int(math.floor(float(row[schema.start_year])))
        except (TypeError, ValueError):
            report.rows_skipped += 1
            report.errors.append({"line": lineno, "column": schema.start_year,
                                  "value": row.get(schema.start_year), "message": "unparseable year"})
            continue
        values, bad = [], None
        for col in schema.deaths:
            raw = (row.get(col) or "").strip()
            if raw in sentinels:
                continue
            try:
                v = float(raw.replace(",", ""))
            except ValueError:
                bad = (col, raw, "unparseable deaths")
                break
            if not math.isfinite(v) or v < 0:
                bad = (col, raw, "negative or non-finite deaths")
                break
            values.append(v)
        if bad:
            report.rows_skipped += 1
            report.errors.append({"line": lineno, "column": bad[0], "value": bad[1], "message": bad[2]})
            continue
        if values:
            report.rows_analyzed += 1
        else:
            report.rows_missing_deaths += 1

        eid = str(row[schema.event_id]).strip()
        ev = events.get(eid)
        if ev is None:
            if schema.subset:
                subset = canonical_subset(row[schema.subset], schema.subset_map)
            else:
                subset = canonical_subset(schema.subset_value or "other", schema.subset_map)
            ev = events[eid] = {
                "event_id": eid,
                "name": str(row[schema.name]).strip() if schema.name else eid,
                "subset": subset,
                "start_year": year,
                "deaths": None,
                "order": len(events),
            }
        ev["start_year"] = min(ev["start_year"], year)
        if values:
            ev["deaths"] = (ev["deaths"] or 0.0) + sum(values)

    records = [ConflictRecord(source=report.source, **ev) for ev in events.values()]
    report.events = len(records)
    report.events_with_deaths = sum(r.deaths is not None for r in records)
    report.events_missing_deaths = report.events - report.events_with_deaths
    if not records:
        report.warnings.append("no events loaded")
    return records, report


def write_events_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_FIELDS)
        for r in records:
            w.writerow([r.event_id, r.name, r.subset, r.start_year, "" if r.deaths is None else repr(r.deaths),
                        r.source])


def read_events_csv(path) -> list[ConflictRecord]:
    """Read the canonical events file written by :func:`write_events_csv`."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in EVENT_FIELDS if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"events file {Path(path).name} lacks columns {missing}")
        return [
            ConflictRecord(row["event_id"], row["name"], canonical_subset(row["subset"]), int(row["start_year"]),
                           float(row["deaths"]) if row["deaths"].strip() else None, row["source"], i)
            for i, row in enumerate(reader)
        ]


@dataclass(frozen=True)
class TimeSeries:
    """Analysis series: values in event order with their start years."""

    values: np.ndarray
    years: np.ndarray | None = None
    labels: tuple[str, ...] = ()

    def __len__(self):
        return int(self.values.size)


def order_events(records) -> TimeSeries:
    """Events with a death count, stably sorted by start year."""
    kept = [r for r in records if r.deaths is not None]
    kept = sorted(kept, key=lambda r: r.start_year)
    return TimeSeries(np.array([r.deaths for r in kept], dtype=float),
                      np.array([r.start_year for r in kept], dtype=np.int64),
                      tuple(r.event_id for r in kept))


def filter_subsets(records, subsets) -> list[ConflictRecord]:
    wanted = {canonical_subset(s) for s in subsets}
    return [r for r in records if r.subset in wanted]


@dataclass(frozen=True)
class PopulationTable:
    years: np.ndarray
    population: np.ndarray

    def __post_init__(self):
        years = np.asarray(self.years, dtype=float)
        pop = np.asarray(self.population, dtype=float)
        if years.ndim != 1 or years.size == 0 or years.shape != pop.shape:
            raise ValueError("population table needs matching nonempty year/population columns")
        if np.any(np.diff(years) <= 0):
            raise ValueError("population years must be strictly increasing")
        if np.any(~(pop > 0)):
            raise ValueError("populations must be positive")
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "population", pop)

    @classmethod
    def from_csv(cls, path, year_col: str = "year", pop_col: str = "population",
                 multiplier: float = 1.0) -> "PopulationTable":
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = list(csv.DictReader(fh))
        if rows and (year_col not in rows[0] or pop_col not in rows[0]):
            raise SchemaError(f"population file needs columns {year_col!r} and {pop_col!r}")
        pairs = sorted((float(r[year_col]), float(r[pop_col]) * multiplier) for r in rows)
        return cls(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))


def interpolate_population(table: PopulationTable, year):
    """Linear interpolation in persons between snapshot years."""
    y = np.asarray(year, dtype=float)
    lo, hi = table.years[0], table.years[-1]
    if np.any((y < lo) | (y > hi)):
        raise ValueError(f"year outside population table range [{lo:g}, {hi:g}]")
    out = np.interp(y, table.years, table.population)
    return float(out) if out.ndim == 0 else out


def normalize_population(records, table: PopulationTable,
                         report: ValidationReport | None = None) -> list[ConflictRecord]:
    """Deaths as a fraction of world population at the event's start year.

    Records outside the table range are dropped and noted in ``report``.
    """
    out = []
    for r in records:
        if r.deaths is None:
            out.append(r)
            continue
        try:
            pop = interpolate_population(table, r.start_year)
        except ValueError as exc:
            if report is not None:
                report.errors.append({"event_id": r.event_id, "message": str(exc)})
            continue
        out.append(replace(r, deaths=r.deaths / pop))
    return out


@dataclass(frozen=True)
class DualBounds:
    L: float
    H: float

    def __post_init__(self):
        if not 0 < self.L < self.H:
            raise ValueError(f"bounds need 0 < L < H, got L={self.L}, H={self.H}")


def dual_transform(x, bounds: DualBounds | None = None, *, L=None, H=None):
    """Map ``[L, H)`` onto ``[L, inf)`` via ``L - H log((H - x) / (H - L))``.

    ``H`` may be an array aligned with ``x`` (one bound per event).
    """
    if bounds is not None:
        L, H = bounds.L, bounds.H
    xa = np.asarray(x, dtype=float)
    Ha = np.asarray(H, dtype=float)
    if not (0 < L and np.all(Ha > L)):
        raise ValueError("bounds need 0 < L < H")
    if np.any(xa < L) or np.any(xa >= Ha):
        raise ValueError("dual transform defined only for L <= x < H")
    out = L - Ha * np.log((Ha - xa) / (Ha - L))
    return float(out) if out.ndim == 0 else out


TRANSFORMS = ("none", "dual2018", "dualAtTime")


def apply_transform(series: TimeSeries, mode: str, table: PopulationTable | None = None,
                    lower: float | None = None, reference_year: int = 2018) -> TimeSeries:
    """Bounded-support rescaling of raw death counts.

    ``dual2018`` bounds every event by the population in ``reference_year``;
    ``dualAtTime`` by the population at the event's start year. ``lower``
    defaults to the smallest value in the series.
    """
    mode = {"dual_2018": "dual2018", "dual_at_time": "dualAtTime"}.get(mode, mode)
    if mode == "none":
        return series
    if mode not in TRANSFORMS:
        raise ValueError(f"unknown transform {mode!r}")
    if table is None:
        raise ValueError(f"transform {mode} needs a population table")
    if len(series) == 0:
        return series
    L = float(np.min(series.values)) if lower is None else float(lower)
    if mode == "dual2018":
        H = interpolate_population(table, reference_year)
    else:
        if series.years is None:
            raise ValueError("dualAtTime needs event years")
        H = interpolate_population(table, series.years)
    return replace(series, values=np.atleast_1d(dual_transform(series.values, L=L, H=H)))
