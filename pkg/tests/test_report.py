import json

import numpy as np
import pandas as pd
import pytest

from conserva.bench.report import CANDIDATES_FILE, LAWS_FILE, REPORT_FILE, TIMINGS_FILE, RunReport


def _report(**overrides):
    fields = dict(
        system="mass_spring",
        seed=3,
        restarts=2,
        selected_restart=1,
        restart_constancies=[np.float64(0.2), float("nan")],
        candidates=[{"id": "c0", "source": "poly_lasso", "complexity": 9, "accepted": True,
                     "reason": "accepted", "verdict": "true_discovery", "expression": "x1"}],
        accepted_laws=["((0.5 * x1^2) + x2^2)"],
        metrics={"dr": 1.0, "fdr": 0.0, "f1": 1.0, "accepted": np.int64(1)},
        timings={"data": 0.5, "extract": 1.25},
    )
    fields.update(overrides)
    return RunReport(**fields)


def test_write_creates_every_file(tmp_path):
    """Should write the report, timings, candidates and laws"""
    paths = _report().write(tmp_path / "run")
    assert sorted(p.name for p in paths.values()) == sorted([REPORT_FILE, TIMINGS_FILE, CANDIDATES_FILE, LAWS_FILE])
    assert (tmp_path / "run" / LAWS_FILE).read_text() == "((0.5 * x1^2) + x2^2)\n"
    timings = pd.read_csv(tmp_path / "run" / TIMINGS_FILE)
    assert list(timings["stage"]) == ["data", "extract"]
    assert len(pd.read_csv(tmp_path / "run" / CANDIDATES_FILE)) == 1


def test_json_is_clean_and_stable():
    """Should unwrap numpy values, null non-finite floats and leave timings out"""
    text = _report().to_json()
    record = json.loads(text)
    assert record["restart_constancies"] == [0.2, None]
    assert record["metrics"]["accepted"] == 1
    assert "timings" not in record
    assert _report(timings={"data": 99.0}).to_json() == text


def test_read_roundtrip(tmp_path):
    """Should read back what it wrote"""
    _report().write(tmp_path)
    again = RunReport.read(tmp_path / REPORT_FILE)
    assert again.system == "mass_spring"
    assert again.metrics["dr"] == 1.0
    assert again.accepted_laws == ["((0.5 * x1^2) + x2^2)"]


def test_schema_version_checked():
    """Should refuse records of another schema version"""
    record = _report().to_record()
    record["schema_version"] = 99
    with pytest.raises(ValueError):
        RunReport.from_record(record)
