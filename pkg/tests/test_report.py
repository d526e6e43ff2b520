import csv
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from riemap.errors import RiemapError
from riemap.report import CSV_HEADER, PointRecord, Report, csv_text, dumps, emit_report, run_points


def small_report():
    rep = Report("check", map_name="f", scene_name="s", tolerances={"residual": 1e-8, "order4": 1e-7})
    rep.records = [
        PointRecord(1, [0.5, 0.25], {"isometry": 2e-8, "tau": 0.5}),
        PointRecord(0, [0.1, 0.2], {"isometry": 0.0, "tau": 0.25}),
    ]
    rep.check("isometry", "residual")
    return rep


def test_summary_and_verdicts():
    rep = small_report()
    s = rep.summary()
    assert s["isometry"] == {"max": 2e-8, "mean": 1e-8, "count": 2, "tolerance": 1e-8, "verdict": "fail"}
    assert "verdict" not in s["tau"]
    assert rep.failed_checks() == ["isometry"] and not rep.ok


def test_report_passes_without_failures():
    rep = small_report()
    rep.records[0].residuals["isometry"] = 1e-9
    assert rep.ok
    rep.failures.append("something")
    assert not rep.ok


def test_json_is_sorted_and_parseable():
    text = dumps(small_report().to_dict())
    data = json.loads(text)
    assert [r["index"] for r in data["records"]] == [0, 1]
    assert data["tolerances"] == {"residual": 1e-8}
    assert data["status"] == "fail"
    keys = [line.split(":")[0].strip() for line in text.splitlines() if line.startswith('  "')]
    assert keys == sorted(keys)


def test_csv_rows():
    rows = list(csv.reader(io.StringIO(csv_text(small_report()))))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + 2 * 2
    assert rows[1][3:] == ["0", "0.10000000000000001 0.20000000000000001", "isometry", "0", "1e-08", "pass"]
    assert rows[2][-2:] == ["", "info"]


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_formatting_round_trips(x):
    assert json.loads(dumps([x]))[0] == x


def test_non_finite_floats_are_strings():
    assert json.loads(dumps({"a": float("nan"), "b": float("inf")})) == {"a": "NaN", "b": "Infinity"}


def test_emit_writes_both_formats(tmp_path):
    paths = emit_report(small_report(), ("json", "csv"), tmp_path / "out", "x")
    assert [p.name for p in paths] == ["x.json", "x.csv"]
    again = emit_report(small_report(), ("json", "csv"), tmp_path / "again", "x")
    for a, b in zip(paths, again):
        assert a.read_bytes() == b.read_bytes()


def test_emit_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(RiemapError):
        emit_report(small_report(), ("json",), blocker / "sub")


def test_run_points_orders_by_index():
    recs = run_points(lambda i, p: PointRecord(i, [p]), [3.0, 1.0, 2.0, 0.5], workers=4)
    assert [r.index for r in recs] == [0, 1, 2, 3]
    assert [r.point for r in recs] == [[3.0], [1.0], [2.0], [0.5]]
