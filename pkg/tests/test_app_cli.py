import json
import os
import logging

import pandas as pd

from app import EXIT_CONFIG, EXIT_OK, main
from utils.stats import CSV_COLUMNS

logger = logging.getLogger(__name__)

SAMPLE_CONFIG = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "sample_run.yaml")


def test_rates_single_point(capsys):
    assert main(["rates", "--s1", "3", "--s2", "3"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "S1,S2,R_thm,R_clean,gap"
    assert [float(v) for v in lines[1].split(",")] == [3.0, 3.0, 0.5, 1.0, 0.5]


def test_rates_grid_to_file(tmp_path):
    path = tmp_path / "grid.csv"
    assert main(["rates", "--grid", "--output", str(path)]) == EXIT_OK
    frame = pd.read_csv(path)
    assert len(frame) == 36
    assert (frame["gap"] <= 0.5 + 1e-12).all()


def test_plan_reports_infeasible(capsys):
    assert main(["plan", "--model", "1", "--s1", "3", "--s2", "3"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == {"feasible": False}


def test_simulate_writes_csv(tmp_path):
    path = tmp_path / "m2.csv"
    code = main(["simulate", "--config", SAMPLE_CONFIG, "--trials", "50", "--workers", "1",
                 "--output", str(path)])
    assert code == EXIT_OK
    frame = pd.read_csv(path)
    assert list(frame.columns) == CSV_COLUMNS
    assert frame.loc[0, "trials"] == 50


def test_simulate_rejects_bad_config():
    assert main(["simulate", "--model", "1", "--s1", "255", "--s2", "255", "--trials", "0"]) == EXIT_CONFIG
    assert main(["simulate", "--s1", "3", "--s2", "3", "--k1", "auto", "--margin", "0"]) == EXIT_CONFIG


def test_independence_subcommand(tmp_path):
    path = tmp_path / "independence.json"
    code = main(["independence", "--model", "1", "--s1", "255", "--s2", "255", "--n", "4", "--k1", "2",
                 "--k2", "2", "--trials", "100", "--output", str(path), "--format", "json"])
    assert code == EXIT_OK
    with open(path) as f:
        assert len(json.load(f)["runs"]) == 3


def test_verify_subset(capsys):
    assert main(["verify", "--only", "gap_grid,tie_break"]) == EXIT_OK
    assert "2/2 checks passed" in capsys.readouterr().out
