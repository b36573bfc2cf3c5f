import os
import logging

import pytest

from utils.config import RunConfig, build_config, load_config_file
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

SAMPLE_CONFIG = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "sample_run.yaml")


def test_sample_file_loads():
    config = build_config(SAMPLE_CONFIG)
    assert config.model == 2
    assert (config.k1, config.k2) == (2, 2)
    assert config.interference_spec.label == "gaussian:1e+12"


def test_flags_override_file_and_environment(tmp_path, monkeypatch):
    path = tmp_path / "run.yaml"
    path.write_text("model: 1\nworkers: 3\ntrials: 50\nk1: auto\n")
    monkeypatch.setenv("LATTICE_RELAY_WORKERS", "2")
    config = build_config(str(path), {"trials": 10, "seed": None})
    assert (config.model, config.workers, config.trials, config.seed) == (1, 3, 10, 0)
    assert config.k1 == "auto"
    assert build_config(None, {}).workers == 2


def test_cli_strings_are_coerced():
    config = build_config(None, {"k1": "4", "k2": "2", "noiseless": "true", "s1": "15"})
    assert (config.k1, config.k2, config.noiseless, config.s1) == (4, 2, True, 15.0)


@pytest.mark.parametrize("overrides", [
    {"trials": 0},
    {"model": 3},
    {"s1": -1.0},
    {"k1": 1},
    {"seed": -5},
    {"format": "xml"},
    {"alpha1": 1.5},
    {"interference": "laplace"},
    {"ideal_hop2": True, "model": 2},
    {"list_anchor": "corner"},
])
def test_invalid_values_rejected(overrides):
    with pytest.raises(ConfigurationError):
        build_config(None, overrides)


def test_bad_files_rejected(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config_file(str(tmp_path / "missing.yaml"))
    nested = tmp_path / "nested.yaml"
    nested.write_text("model:\n  inner: 1\n")
    with pytest.raises(ConfigurationError):
        load_config_file(str(nested))
    unknown = tmp_path / "unknown.yaml"
    unknown.write_text("colour: blue\n")
    with pytest.raises(ConfigurationError):
        load_config_file(str(unknown))


def test_defaults_validate():
    assert RunConfig().validate().auto_chain
