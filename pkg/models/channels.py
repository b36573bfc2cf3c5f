import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from utils.errors import ConfigurationError, LatticeInputError, PowerConstraintError
from utils.rates import mmse_coefficient

logger = logging.getLogger(__name__)

INTERFERENCE_KINDS = ("constant", "gaussian", "sinusoid", "uniform")

# Normalized frequency of the sinusoid interference (cycles per channel use)
SINUSOID_FREQUENCY = 0.1

LIST_ANCHORS = ("region", "nearest")

POWER_TOLERANCE = 1e-9


@dataclass(frozen=True)
class InterferenceSpec:
    """
    Descriptor of the arbitrary interference sequence S.

    param is the amplitude for constant/sinusoid/uniform (uniform draws from
    [-param, param)) and the variance for gaussian. With reseed=False the same
    S is used for every trial of a run.
    """
    kind: str
    param: float = 0.0
    reseed: bool = True

    def __post_init__(self):
        if self.kind not in INTERFERENCE_KINDS:
            raise ConfigurationError(f"Unknown interference kind {self.kind!r}; expected one of {INTERFERENCE_KINDS}")
        if not np.isfinite(self.param):
            raise ConfigurationError(f"Interference parameter must be finite, got {self.param}")
        if self.kind == "gaussian" and self.param < 0:
            raise ConfigurationError(f"Gaussian interference variance must be >= 0, got {self.param}")

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.param:g}"

    @classmethod
    def parse(cls, text: str, reseed: bool = True) -> "InterferenceSpec":
        """Parses 'kind' or 'kind:param', e.g. 'gaussian:1e12'."""
        kind, _, raw = text.strip().partition(":")
        try:
            param = float(raw) if raw else 0.0
        except ValueError:
            raise ConfigurationError(f"Bad interference parameter in {text!r}")
        return cls(kind.strip(), param, reseed)


def gen_interference(spec: InterferenceSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Generates a length-n interference vector according to spec."""
    if n < 1:
        raise LatticeInputError(f"Interference length must be >= 1, got {n}")
    if spec.kind == "constant":
        return np.full(n, float(spec.param))
    if spec.kind == "gaussian":
        return rng.normal(0.0, np.sqrt(spec.param), size=n)
    if spec.kind == "sinusoid":
        k = np.arange(n)
        return spec.param * np.sin(2.0 * np.pi * SINUSOID_FREQUENCY * k)
    if spec.kind == "uniform":
        return rng.uniform(-spec.param, spec.param, size=n)
    raise ConfigurationError(f"Unknown interference kind {spec.kind!r}")


@dataclass(frozen=True)
class ChannelParams:
    """
    Link SNRs of the two hops. Transmit powers are fixed to `power` (1 by
    default) so the noise variances are power/s1 and power/s2.
    """
    s1: float
    s2: float
    noiseless: bool = False
    power: float = 1.0

    def __post_init__(self):
        for name, value in (("s1", self.s1), ("s2", self.s2)):
            if not np.isfinite(value) or value <= 0:
                raise ConfigurationError(f"{name} must be a positive SNR, got {value}")

    @property
    def noise_var1(self) -> float:
        return self.power / self.s1

    @property
    def noise_var2(self) -> float:
        return self.power / self.s2

    @property
    def peak_power(self) -> float:
        # per-block power of a point in the cube [-a/2, a/2)^n with a^2 = 12·power
        return 3.0 * self.power


@dataclass(frozen=True)
class SchemeParams:
    """Channel plus receiver-side choices shared by both schemes."""
    channel: ChannelParams
    alpha1: float
    alpha2: float
    ideal_hop2: bool = False
    list_anchor: str = "region"
    cancel_interference: bool = True

    def __post_init__(self):
        for name, value in (("alpha1", self.alpha1), ("alpha2", self.alpha2)):
            if not 0 < value <= 1:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value}")
        if self.list_anchor not in LIST_ANCHORS:
            raise ConfigurationError(f"list_anchor must be one of {LIST_ANCHORS}, got {self.list_anchor!r}")

    @classmethod
    def from_snrs(cls, s1: float, s2: float, alpha1: Optional[float] = None,
                  alpha2: Optional[float] = None, noiseless: bool = False, **kwargs) -> "SchemeParams":
        """MMSE coefficients s/(s+1) unless overridden; noiseless runs default to alpha = 1."""
        channel = ChannelParams(s1, s2, noiseless=noiseless)
        if alpha1 is None:
            alpha1 = 1.0 if noiseless else mmse_coefficient(s1)
        if alpha2 is None:
            alpha2 = 1.0 if noiseless else mmse_coefficient(s2)
        return cls(channel, float(alpha1), float(alpha2), **kwargs)


def _check_model(model: int):
    if model not in (1, 2):
        raise ConfigurationError(f"Model must be 1 or 2, got {model}")


def _check_power(x: np.ndarray, params: ChannelParams, label: str):
    block_power = np.mean(np.square(x), axis=-1)
    if np.any(block_power > params.peak_power + POWER_TOLERANCE):
        raise PowerConstraintError(f"{label} block power {np.max(block_power):.6f} exceeds "
                                   f"peak bound {params.peak_power:.6f}")


def _noise(shape, variance: float, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    if params.noiseless:
        return np.zeros(shape)
    return rng.normal(0.0, np.sqrt(variance), size=shape)


def hop1(model: int, x1, s, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """
    Source -> relay link.

    Model 1: y2 = x1 + s + z2. Model 2: y2 = x1 + z2. z2 ~ N(0, 1/S1) iid.
    """
    _check_model(model)
    x1 = np.asarray(x1, dtype=float)
    s = np.asarray(s, dtype=float)
    if s.shape[-1:] != x1.shape[-1:]:
        raise LatticeInputError(f"Interference shape {s.shape} does not match input shape {x1.shape}")
    _check_power(x1, params, "Source")
    z2 = _noise(x1.shape, params.noise_var1, params, rng)
    if model == 1:
        return x1 + s + z2
    return x1 + z2


def hop2(model: int, x2, s, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """
    Relay -> destination link.

    Model 1: y3 = x2 + z3. Model 2: y3 = x2 + s + z3. z3 ~ N(0, 1/S2) iid.
    """
    _check_model(model)
    x2 = np.asarray(x2, dtype=float)
    s = np.asarray(s, dtype=float)
    if s.shape[-1:] != x2.shape[-1:]:
        raise LatticeInputError(f"Interference shape {s.shape} does not match input shape {x2.shape}")
    _check_power(x2, params, "Relay")
    z3 = _noise(x2.shape, params.noise_var2, params, rng)
    if model == 2:
        return x2 + s + z3
    return x2 + z3
