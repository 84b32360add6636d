import csv
import io
import json
import math

import numpy as np
import pytest

from besovlab.errors import NonPositiveValue, TooFewPoints
from besovlab.report import CSV_COLUMNS, RatePlot, Report, Row, close_row, emit, failed_row, fit_rate


def test_fit_rate_exact_power():
    t = np.geomspace(1e-4, 1e-1, 7)
    slope, intercept, r2 = fit_rate(zip(t, 3.0 * t**-0.75))
    assert slope == pytest.approx(-0.75, abs=1e-12)
    assert intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert r2 == pytest.approx(1.0)


def test_fit_rate_errors():
    with pytest.raises(TooFewPoints):
        fit_rate([(1, 1), (2, 2)])
    with pytest.raises(NonPositiveValue):
        fit_rate([(1, 1), (2, 0), (3, 3)])


def test_close_row_and_failed_row():
    assert close_row("x", {}, 1.05, 1.0, 0.1).passed
    assert not close_row("x", {}, 1.2, 1.0, 0.1).passed
    assert not close_row("x", {}, float("nan"), 1.0, 0.1).passed
    r = failed_row("x", {"a": 1}, ValueError("boom"))
    assert not r.passed and math.isnan(r.value) and "ValueError: boom" in r.note


def _report():
    rep = Report()
    rep.extend([Row("a.b", {"p": np.inf, "s": np.float64(0.5)}, 1.25, 2.0, None, True, "<="),
                Row("a.c", {"j": np.int64(3)}, 7.0, passed=False)])
    rep.meta = {"config_hash": "abc", "seed": 0}
    rep.plots = [RatePlot("rate one", [1e-3, 1e-2, 1e-1], [10.0, 3.0, 1.0], -0.5, 0.0, -0.5)]
    rep.wall_clock = {"total_s": 1.0}
    return rep


def test_csv_layout():
    rows = list(csv.reader(io.StringIO(_report().to_csv())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1] == ["a.b", '{"p":"inf","s":0.5}', "1.25", "2", "", "true"]
    assert rows[2][-1] == "false"


def test_json_rows_carry_key_and_hash():
    doc = json.loads(_report().to_json())
    assert [r["key"] for r in doc["rows"]] == [0, 1]
    assert all(r["config_hash"] == "abc" for r in doc["rows"])
    assert doc["meta"]["seed"] == 0


def test_report_helpers():
    rep = _report()
    assert not rep.passed and len(rep.failures()) == 1
    assert [r.suite for r in rep.by_suite("a")] == ["a.b", "a.c"]
    assert rep.by_suite("a.b")[0].value == 1.25


def test_emit_writes_files(tmp_path):
    written = emit(_report(), tmp_path / "out")
    names = sorted(p.name for p in written)
    assert names == ["rate_one.svg", "report.csv", "report.json", "timing.json"]
    svg = (tmp_path / "out" / "rate_one.svg").read_text()
    assert svg.startswith("<svg") and "target slope" in svg
    # timing lives only in its own file
    assert "total_s" not in (tmp_path / "out" / "report.json").read_text()
