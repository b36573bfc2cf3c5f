"""
Model 2: interference experienced at the destination, known at the source.

The source pre-cancels the quantized interference before a standard lattice
encoder; the relay decodes the shifted codeword on the quantization lattice
and re-encodes it; the destination MMSE-scales, adds Uq and decodes on the
message lattice without knowing S.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from models.channels import InterferenceSpec, SchemeParams, gen_interference, hop1, hop2
from models.lattice import (CodewordIndex, NestedChain, centered_residue, index_to_point,
                            lattice_coordinates, mod_lattice, point_to_index, sample_dither)
from utils.errors import ConfigurationError
from utils.stats import TrialRecord

logger = logging.getLogger(__name__)


@dataclass
class Model2State:
    chain: NestedChain
    alpha1: float
    alpha2: float
    u1: np.ndarray
    uq: np.ndarray
    u2: np.ndarray
    message: CodewordIndex
    codeword: np.ndarray
    shifted: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        for name, value in (("alpha1", self.alpha1), ("alpha2", self.alpha2)):
            if not 0 < value <= 1:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value}")

    @classmethod
    def draw(cls, chain: NestedChain, alpha1: float, alpha2: float, rng: np.random.Generator) -> "Model2State":
        digits = rng.integers(0, chain.k1, size=chain.n)
        message = CodewordIndex.from_array(digits, chain.k1)
        u1 = sample_dither(chain.coarse, rng)
        uq = sample_dither(chain.quant, rng)
        u2 = sample_dither(chain.coarse, rng)
        return cls(chain, float(alpha1), float(alpha2), u1, uq, u2, message,
                   index_to_point(chain, message, "message"))


def shifted_codeword(state: Model2State, s, cancel: bool = True) -> np.ndarray:
    """T = (t - Q_quant(alpha2·S + Uq)) mod coarse; T = t when cancellation is disabled."""
    chain = state.chain
    t_coords = lattice_coordinates(chain.quant, state.codeword)
    if cancel:
        t_coords = t_coords - lattice_coordinates(chain.quant, state.alpha2 * np.asarray(s, dtype=float) + state.uq)
    return centered_residue(t_coords, chain.quant_radix).astype(float) * chain.quant.a


def m2_encode_source(state: Model2State, s, cancel: bool = True) -> np.ndarray:
    """X1 = (T + U1) mod coarse; stores T on the state."""
    state.shifted = shifted_codeword(state, s, cancel)
    return mod_lattice(state.chain.coarse, state.shifted + state.u1)


def m2_relay_scale(state: Model2State, y2) -> np.ndarray:
    return mod_lattice(state.chain.coarse, state.alpha1 * np.asarray(y2, dtype=float) - state.u1)


def m2_relay_decode(state: Model2State, y2) -> np.ndarray:
    """T_hat = Q_quant((alpha1·Y2 - U1) mod coarse) mod coarse."""
    chain = state.chain
    coords = lattice_coordinates(chain.quant, m2_relay_scale(state, y2))
    return centered_residue(coords, chain.quant_radix).astype(float) * chain.quant.a


def m2_relay_reencode(chain: NestedChain, t_hat, u2) -> np.ndarray:
    """X2 = (T_hat + U2) mod coarse."""
    return mod_lattice(chain.coarse, np.asarray(t_hat, dtype=float) + np.asarray(u2, dtype=float))


def m2_destination_scale(state: Model2State, y3) -> np.ndarray:
    """
    Y3' = (alpha2·Y3 + Uq - U2) mod coarse
        = (t + (alpha2·S + Uq) mod quant - (1-alpha2)·X2 + alpha2·Z3) mod coarse
    when the relay decoded correctly.
    """
    return mod_lattice(state.chain.coarse, state.alpha2 * np.asarray(y3, dtype=float) + state.uq - state.u2)


def m2_destination_decode(state: Model2State, y3) -> np.ndarray:
    """t_hat = Q_fine(Y3') mod coarse; S is never used here."""
    chain = state.chain
    coords = lattice_coordinates(chain.fine, m2_destination_scale(state, y3))
    return centered_residue(coords, chain.k1).astype(float) * chain.fine.a


def run_model2_trial(chain: NestedChain, params: SchemeParams, interference: InterferenceSpec,
                     rng: np.random.Generator, trial: int = 0,
                     fixed_s: Optional[np.ndarray] = None) -> TrialRecord:
    """One end-to-end Model 2 transmission."""
    state = Model2State.draw(chain, params.alpha1, params.alpha2, rng)
    s = fixed_s if fixed_s is not None else gen_interference(interference, chain.n, rng)

    x1 = m2_encode_source(state, s, params.cancel_interference)
    y2 = hop1(2, x1, s, params.channel, rng)
    t_hat_shifted = m2_relay_decode(state, y2)
    relay_error = point_to_index(chain, t_hat_shifted, "quant") != point_to_index(chain, state.shifted, "quant")

    x2 = m2_relay_reencode(chain, t_hat_shifted, state.u2)
    y3 = hop2(2, x2, s, params.channel, rng)
    t_hat = m2_destination_decode(state, y3)
    error = point_to_index(chain, t_hat, "message") != state.message

    if error:
        logger.debug(f"Trial {trial}: message error (relay_error={relay_error})")
    return TrialRecord(trial, bool(error), {"relay": bool(relay_error), "hop2": False,
                                            "ambiguity": False, "destination": bool(error)})
