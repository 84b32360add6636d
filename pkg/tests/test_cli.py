import json
import subprocess
import sys

import numpy as np
import pytest

from besovlab import suites
from besovlab.cli import main
from besovlab.grid import GridSpec, write_mask_file
from besovlab.suites import ExperimentConfig, SuiteResult, run_suite


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("partition", "smoothing", "max_regularity", "interpolation"):
        assert name in out


def test_minimal_run(tmp_path, capsys):
    cfg = _write(tmp_path, {"n": 63, "suites": ["partition"]})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "1/1 rows passed" in out
    lines = (tmp_path / "o" / "report.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("partition.exactness")


@pytest.mark.parametrize(
    "doc",
    ['{"n": 63, "suites": ["nope"]}', "{not json", '{"n": 63, "bogus": 1}', '{"domain": {"kind": "blob"}}',
     '{"domain": {"mask_file": "missing.txt"}}'],
)
def test_config_errors_exit_2(tmp_path, doc, capsys):
    cfg = _write(tmp_path, doc)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_and_out(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2
    cfg = _write(tmp_path, {"n": 63, "suites": ["partition"]})
    assert main(["run", "--config", str(cfg)]) == 2
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path), "--jobs", "0"]) == 2


def test_check_unknown_suite():
    assert main(["check", "--suite", "nope"]) == 2


def test_check_runs(capsys):
    assert main(["check", "--suite", "spectral", "--n", "63"]) == 0
    assert "rows passed" in capsys.readouterr().out


def test_failure_exit_code(tmp_path, monkeypatch):
    def bad(ctx, opts):
        raise RuntimeError("broken")

    monkeypatch.setitem(suites.REGISTRY, "partition", suites.SuiteInfo("partition", bad, "x"))
    cfg = _write(tmp_path, {"n": 63, "suites": ["partition"]})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_row_isolation(monkeypatch):
    def bad(ctx, opts):
        raise RuntimeError("broken")

    monkeypatch.setitem(suites.REGISTRY, "partition", suites.SuiteInfo("partition", bad, "x"))
    rep = run_suite(ExperimentConfig.from_dict({"n": 63, "suites": ["partition", "spectral"]}))
    assert not rep.rows[0].passed and "RuntimeError" in rep.rows[0].note
    assert all(r.passed for r in rep.rows[1:]) and len(rep.rows) > 1


def test_guarded():
    rows = suites.guarded("x", {"a": 1}, lambda: 1 / 0)
    assert len(rows) == 1 and not rows[0].passed


def test_env_seed(tmp_path, monkeypatch):
    cfg = _write(tmp_path, {"n": 63, "suites": ["partition"], "seed": 3})
    monkeypatch.setenv("BESOVLAB_SEED", "17")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    meta = json.loads((tmp_path / "o" / "report.json").read_text())["meta"]
    assert meta["seed"] == 17
    monkeypatch.setenv("BESOVLAB_SEED", "x")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o2")]) == 2


def test_deterministic_and_jobs_invariant(tmp_path):
    doc = {"n": 63, "suites": ["partition", "spectral", "besov", "boundedness"], "ensemble_size": 8}
    cfg = _write(tmp_path, doc)
    outs = []
    for i, jobs in enumerate(["1", "1", "3"]):
        out = tmp_path / f"o{i}"
        assert main(["run", "--config", str(cfg), "--out", str(out), "--jobs", jobs]) in (0, 1)
        outs.append(((out / "report.csv").read_bytes(), (out / "report.json").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_mask_file_domain(tmp_path):
    mask = np.zeros((10, 10), dtype=bool)
    mask[1:9, 2:8] = True
    h = 1 / 11
    write_mask_file(GridSpec(2, h, ((0, 1), (0, 1)), mask), tmp_path / "m.txt")
    cfg = _write(tmp_path, {"domain": {"mask_file": "m.txt"}, "suites": ["spectral"]})
    loaded = ExperimentConfig.load(cfg)
    rep = run_suite(loaded)
    assert rep.meta["grids"] and rep.rows


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "besovlab", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "partition" in proc.stdout
