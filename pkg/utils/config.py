"""
Run configuration: built-in defaults, environment (.env), a flat YAML file
and command-line overrides, in increasing order of precedence.
"""

import os
import logging
from dataclasses import dataclass, asdict, fields
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import load_dotenv

from models.channels import LIST_ANCHORS, InterferenceSpec
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

load_dotenv()

OUTPUT_FORMATS = ("csv", "json")
MAX_SEED = 2 ** 64


@dataclass
class RunConfig:
    model: int = 1
    s1: float = 255.0
    s2: float = 255.0
    n: int = 8
    k1: Union[int, str] = "auto"
    k2: Union[int, str] = "auto"
    margin: float = 0.5
    interference: str = "constant"
    interference_param: float = 0.0
    interference_reseed: bool = True
    trials: int = 1000
    seed: int = 0
    workers: int = 1
    ideal_hop2: bool = False
    noiseless: bool = False
    alpha1: Optional[float] = None
    alpha2: Optional[float] = None
    list_anchor: str = "region"
    cancel_interference: bool = True
    output: Optional[str] = None
    format: str = "csv"

    @property
    def auto_chain(self) -> bool:
        return self.k1 == "auto" or self.k2 == "auto"

    @property
    def interference_spec(self) -> InterferenceSpec:
        return InterferenceSpec(self.interference, float(self.interference_param), bool(self.interference_reseed))

    def validate(self) -> "RunConfig":
        """Checks every field; raises ConfigurationError on the first violation."""
        if self.model not in (1, 2):
            raise ConfigurationError(f"model must be 1 or 2, got {self.model}")
        for name in ("s1", "s2"):
            value = getattr(self, name)
            if not value > 0 or value == float("inf"):
                raise ConfigurationError(f"{name} must be a positive finite SNR, got {value}")
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if self.k1 != "auto" and self.k1 < 2:
            raise ConfigurationError(f"k1 must be >= 2 or 'auto', got {self.k1}")
        if self.k2 != "auto" and self.k2 < 1:
            raise ConfigurationError(f"k2 must be >= 1 or 'auto', got {self.k2}")
        if self.margin < 0:
            raise ConfigurationError(f"margin must be >= 0, got {self.margin}")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < MAX_SEED:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        for name in ("alpha1", "alpha2"):
            value = getattr(self, name)
            if value is not None and not 0 < value <= 1:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value}")
        if self.list_anchor not in LIST_ANCHORS:
            raise ConfigurationError(f"list_anchor must be one of {LIST_ANCHORS}, got {self.list_anchor!r}")
        if self.format not in OUTPUT_FORMATS:
            raise ConfigurationError(f"format must be one of {OUTPUT_FORMATS}, got {self.format!r}")
        if self.ideal_hop2 and self.model != 1:
            raise ConfigurationError("ideal_hop2 only applies to model 1")
        _ = self.interference_spec  # rejects unknown kinds and bad parameters
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_BOOL_FIELDS = {"interference_reseed", "ideal_hop2", "noiseless", "cancel_interference"}
_INT_FIELDS = {"model", "n", "trials", "seed", "workers"}
_FLOAT_FIELDS = {"s1", "s2", "margin", "interference_param"}


def _coerce(key: str, value: Any) -> Any:
    if key not in _FIELD_TYPES:
        raise ConfigurationError(f"Unknown configuration key {key!r}")
    if value is None:
        return None
    try:
        if key in _BOOL_FIELDS:
            if isinstance(value, str):
                lowered = value.strip().lower()
                if lowered not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                return lowered in ("true", "1", "yes")
            return bool(value)
        if key in _INT_FIELDS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if key in _FLOAT_FIELDS:
            return float(value)
        if key in ("k1", "k2"):
            if isinstance(value, str) and value.strip().lower() == "auto":
                return "auto"
            if isinstance(value, bool):
                raise ValueError(value)
            return int(value)
        if key in ("alpha1", "alpha2"):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"Invalid value for {key}: {value!r}")


def env_defaults() -> Dict[str, Any]:
    """Values taken from LATTICE_RELAY_* environment variables."""
    values = {}
    workers = os.environ.get("LATTICE_RELAY_WORKERS")
    if workers:
        values["workers"] = _coerce("workers", workers)
    return values


def output_dir() -> Optional[str]:
    return os.environ.get("LATTICE_RELAY_OUTPUT_DIR") or None


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Reads a flat YAML mapping of RunConfig keys.

    Raises:
        ConfigurationError: if the file is missing, unparsable, nested or has unknown keys.
    """
    if not os.path.exists(path):
        raise ConfigurationError(f"Config file not found: {path}")
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Could not parse {path}: {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must contain a mapping")
    values = {}
    for key, value in data.items():
        if isinstance(value, (dict, list)):
            raise ConfigurationError(f"Config key {key!r} must be a scalar")
        values[str(key)] = _coerce(str(key), value)
    logger.info(f"Loaded {len(values)} settings from {path}")
    return values


def build_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Merges defaults < environment < file < overrides and validates the result."""
    values: Dict[str, Any] = {}
    values.update(env_defaults())
    if path:
        values.update(load_config_file(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _coerce(key, value)
    config = RunConfig(**values).validate()
    logger.debug(f"Run configuration: {config.to_dict()}")
    return config
