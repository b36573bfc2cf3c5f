import os
import json
import logging

import pytest

from utils.config import RunConfig
from utils.errors import ResultsIOError
from utils.results_io import emit_results, read_results
from utils.stats import CSV_COLUMNS
from utils.trial_runner import run_trials

logger = logging.getLogger(__name__)


@pytest.fixture(scope="module")
def summary():
    config = RunConfig(model=1, s1=255.0, s2=255.0, n=4, k1=2, k2=2, trials=200, seed=3).validate()
    return run_trials(config)


def test_csv_header_and_single_row(summary, tmp_path):
    path = emit_results(summary, "csv", str(tmp_path / "run.csv"))
    with open(path) as f:
        lines = f.read().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2


def test_csv_round_trip(summary, tmp_path):
    rows = read_results(emit_results(summary, "csv", str(tmp_path / "out" / "run.csv")))
    assert len(rows) == 1
    expected = summary.to_row()
    for key in CSV_COLUMNS:
        assert rows[0][key] == pytest.approx(expected[key])


def test_json_mirrors_fields(summary, tmp_path):
    path = emit_results([summary, summary], "json", str(tmp_path / "run.json"))
    with open(path) as f:
        data = json.load(f)
    assert len(data["runs"]) == 2
    run = data["runs"][0]
    assert set(CSV_COLUMNS) <= set(run)
    assert run["config"]["model"] == 1
    assert "wall_clock" not in run
    assert read_results(path)[0]["errors"] == summary.errors


def test_repeated_runs_write_identical_bytes(tmp_path):
    paths = []
    for i, workers in enumerate((1, 4)):
        config = RunConfig(model=2, s1=63.0, s2=63.0, n=8, k1=2, k2=2, trials=200, seed=9,
                           workers=workers).validate()
        paths.append(emit_results(run_trials(config), "json", str(tmp_path / f"run{i}.json")))
    with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
        assert a.read() == b.read()


def test_unwritable_path_reports_path(summary, tmp_path):
    with pytest.raises(ResultsIOError) as info:
        emit_results(summary, "csv", str(tmp_path))
    assert info.value.path == str(tmp_path)
    with pytest.raises(ResultsIOError):
        read_results(os.path.join(str(tmp_path), "missing.csv"))
