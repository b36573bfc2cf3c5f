import logging

import numpy as np
import pytest

from utils.config import RunConfig
from utils.errors import CapacityError, ConfigurationError
from utils.stats import RunCounters, TrialRecord, intervals_overlap, wilson_interval
from utils.trial_runner import (compare_interference, intervals_agree, make_blocks, prepare_run, run_trials,
                                trial_rng)

logger = logging.getLogger(__name__)


def _config(**kwargs) -> RunConfig:
    values = dict(model=2, s1=255.0, s2=255.0, n=8, k1=2, k2=2, trials=400, seed=42)
    values.update(kwargs)
    return RunConfig(**values).validate()


def test_trial_streams_depend_only_on_seed_and_index():
    first = trial_rng(7, 3).normal(size=5)
    assert np.array_equal(first, trial_rng(7, 3).normal(size=5))
    assert not np.array_equal(first, trial_rng(7, 4).normal(size=5))
    assert not np.array_equal(first, trial_rng(8, 3).normal(size=5))


def test_counters_merge_is_commutative():
    a, b = RunCounters(), RunCounters()
    a.add(TrialRecord(0, True, {"relay": True}))
    b.add(TrialRecord(1, False, {}))
    b.add(TrialRecord(2, True, {"hop2": True, "relay": True}))
    assert a.merge(b) == b.merge(a)
    merged = a.merge(b)
    assert (merged.trials, merged.errors, merged.stage_errors["relay"]) == (3, 2, 2)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-12) and 0.0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert intervals_overlap((0.0, 0.1), (0.05, 0.2))
    assert not intervals_overlap((0.0, 0.1), (0.2, 0.3))


@pytest.mark.parametrize("model", [1, 2])
def test_noiseless_runs_are_exact(model):
    summary = run_trials(_config(model=model, noiseless=True, interference="constant",
                                 interference_param=1e9, trials=100))
    assert summary.errors == 0
    assert summary.trials == 100


def test_same_config_same_summary():
    config = _config(interference="gaussian", interference_param=1e12)
    first, second = run_trials(config), run_trials(config)
    assert first.to_dict() == second.to_dict()


def test_worker_count_does_not_change_results():
    single = run_trials(_config(model=1, s1=63.0, s2=63.0, trials=300, workers=1))
    pooled = run_trials(_config(model=1, s1=63.0, s2=63.0, trials=300, workers=2))
    assert single.to_dict() == pooled.to_dict()


def test_blocks_cover_all_trials():
    prepared = prepare_run(_config(interference_reseed=False, interference="gaussian", interference_param=4.0))
    blocks = make_blocks(prepared, 101, 5, 4)
    assert blocks[0].start == 0 and blocks[-1].stop == 101
    assert all(a.stop == b.start for a, b in zip(blocks, blocks[1:]))
    assert len({blk.fixed_s for blk in blocks}) == 1 and blocks[0].fixed_s is not None


def test_auto_planning():
    prepared = prepare_run(_config(model=1, k1="auto", k2="auto", margin=0.5))
    assert (prepared.chain.k1, prepared.chain.k2) == (5, 2)
    assert prepared.planned["k1"] == 5


def test_infeasible_auto_is_configuration_error():
    with pytest.raises(ConfigurationError):
        run_trials(_config(s1=3.0, s2=3.0, k1="auto", k2="auto", margin=0.0))


def test_ideal_hop2_gate():
    with pytest.raises(ConfigurationError):
        prepare_run(_config(model=1, s2=3.0, ideal_hop2=True))
    summary = run_trials(_config(model=1, ideal_hop2=True, trials=100))
    assert summary.stage_errors["hop2"] == 0


def test_list_size_above_cap(monkeypatch):
    monkeypatch.setenv("LATTICE_RELAY_ENUM_CAP", "100")
    with pytest.raises(CapacityError):
        prepare_run(_config(model=1))


@pytest.mark.parametrize("model", [1, 2])
def test_interference_independence(model):
    # 31 (15 dB) is low enough for the fixed (2, 2) chain to make errors
    config = _config(model=model, s1=31.0, s2=31.0, trials=10000, workers=4)
    summaries = compare_interference(config, ["constant:0", "constant:1e6", "gaussian:1e12"])
    assert [s.interference for s in summaries] == ["constant:0", "constant:1e+06", "gaussian:1e+12"]
    assert all(s.errors > 0 for s in summaries)
    assert intervals_agree(summaries)
