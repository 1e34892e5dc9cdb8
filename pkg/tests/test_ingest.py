import numpy as np
import pytest

from powercpd.ingest import (ConflictRecord, DualBounds, PopulationTable, SchemaError, SchemaMap, apply_transform,
                             canonical_subset, dual_transform, filter_subsets, interpolate_population,
                             load_conflicts, normalize_population, order_events, read_events_csv,
                             write_events_csv)

SCHEMA = {"event_id": "WarNum", "start_year": "StartYear1", "deaths": "BatDeath", "name": "WarName",
          "subset": "WarType"}


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_merges_participants(tmp_path):
    p = write(tmp_path, "wars.csv",
              "WarNum,WarName,WarType,StartYear1,BatDeath\n"
              "1,A,inter,1900,100\n"
              "1,A,inter,1899,50\n"
              "2,B,intra,1905,-9\n"
              "3,C,intrastate,1910,1000\n"
              "4,D,inter,abc,10\n"
              "5,E,inter,1920,lots\n")
    records, rep = load_conflicts(p, SCHEMA)
    assert [r.event_id for r in records] == ["1", "2", "3"]
    assert records[0].deaths == 150.0 and records[0].start_year == 1899
    assert records[1].deaths is None
    assert records[2].subset == "intra_state"
    assert rep.rows_loaded == 6
    assert rep.rows_loaded == rep.rows_analyzed + rep.rows_missing_deaths + rep.rows_skipped
    assert rep.rows_skipped == 2 and len(rep.errors) == 2
    assert rep.events_missing_deaths == 1


def test_missing_column_is_schema_error(tmp_path):
    p = write(tmp_path, "w.csv", "WarNum,StartYear1\n1,1900\n")
    with pytest.raises(SchemaError, match="BatDeath"):
        load_conflicts(p, SCHEMA)
    with pytest.raises(SchemaError):
        SchemaMap.from_dict({"event_id": "x"})
    with pytest.raises(SchemaError):
        SchemaMap.from_dict({**SCHEMA, "unexpected": 1})


def test_tab_delimited_and_multiple_death_columns(tmp_path):
    p = write(tmp_path, "g.tsv", "id\tyear\td1\td2\n7\t1950\t10\t5\n8\t1951\t-9\t-9\n")
    records, rep = load_conflicts(p, {"event_id": "id", "start_year": "year", "deaths": ["d1", "d2"],
                                      "subset_value": "civil"})
    assert records[0].deaths == 15.0 and records[0].subset == "civil"
    assert records[1].deaths is None


def test_empty_file(tmp_path):
    records, rep = load_conflicts(write(tmp_path, "e.csv", ""), SCHEMA)
    assert records == [] and rep.warnings


def test_canonical_subset():
    assert canonical_subset("Inter-State") == "inter_state"
    assert canonical_subset("weird") == "other"
    assert canonical_subset("1", {"1": "inter_state"}) == "inter_state"


def test_events_roundtrip(tmp_path):
    recs = [ConflictRecord("1", "A", "inter_state", 1900, 12.5, "cow"),
            ConflictRecord("2", "B", "civil", 1890, None, "cow")]
    write_events_csv(recs, tmp_path / "ev.csv")
    back = read_events_csv(tmp_path / "ev.csv")
    assert [(r.event_id, r.deaths, r.start_year, r.subset) for r in back] == \
        [("1", 12.5, 1900, "inter_state"), ("2", None, 1890, "civil")]
    assert len(filter_subsets(back, ["civil"])) == 1


def test_order_events_is_stable():
    recs = [ConflictRecord(str(i), "", "other", y, d) for i, (y, d) in
            enumerate([(1900, 5.0), (1890, 7.0), (1900, 3.0), (1880, None)])]
    ts = order_events(recs)
    assert ts.values.tolist() == [7.0, 5.0, 3.0]
    assert ts.years.tolist() == [1890, 1900, 1900]
    assert ts.labels == ("1", "0", "2")


def test_population_interpolation():
    table = PopulationTable(np.array([1800, 1900]), np.array([1e9, 2e9]))
    assert interpolate_population(table, 1850) == pytest.approx(1.5e9)
    with pytest.raises(ValueError):
        interpolate_population(table, 1950)
    with pytest.raises(ValueError):
        PopulationTable(np.array([1900, 1800]), np.array([1.0, 2.0]))


def test_normalize_drops_out_of_range():
    table = PopulationTable(np.array([1800, 1900]), np.array([1e9, 2e9]))
    from powercpd.ingest import ValidationReport
    rep = ValidationReport()
    recs = [ConflictRecord("a", "", "other", 1850, 1.5e6), ConflictRecord("b", "", "other", 1990, 10.0)]
    out = normalize_population(recs, table, rep)
    assert len(out) == 1 and out[0].deaths == pytest.approx(1e-3)
    assert rep.errors and rep.errors[0]["event_id"] == "b"


def test_dual_transform_values():
    assert dual_transform(1.5, L=1.0, H=2.0) == pytest.approx(2.386294361119891, rel=1e-14)
    assert dual_transform(1.0, DualBounds(1.0, 2.0)) == 1.0
    x = np.linspace(1, 1.99, 50)
    y = dual_transform(x, L=1.0, H=2.0)
    assert np.all(np.diff(y) > 0)
    with pytest.raises(ValueError):
        dual_transform(2.0, L=1.0, H=2.0)
    with pytest.raises(ValueError):
        DualBounds(2.0, 1.0)


def test_apply_transform_modes():
    from powercpd.ingest import TimeSeries
    table = PopulationTable(np.array([1800, 2020]), np.array([1e9, 8e9]))
    ts = TimeSeries(np.array([10.0, 100.0, 1e6]), np.array([1850, 1900, 1950]))
    assert apply_transform(ts, "none") is ts
    d18 = apply_transform(ts, "dual2018", table)
    dat = apply_transform(ts, "dualAtTime", table)
    assert d18.values[0] == 10.0 and dat.values[0] == 10.0
    assert np.all(dat.values >= d18.values)
    with pytest.raises(ValueError):
        apply_transform(ts, "dual2018")
    with pytest.raises(ValueError):
        apply_transform(ts, "nope", table)
