"""
Model 1: interference experienced at the relay, known at the destination.

Source sends a dithered lattice codeword; the relay MMSE-scales, list decodes
and forwards the list index over hop 2; the destination removes the
quantized interference from the list and keeps the unique message-lattice
point.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from models.channels import InterferenceSpec, SchemeParams, gen_interference, hop1, hop2
from models.lattice import (CodewordIndex, NestedChain, centered_residue, enumerate_fine_in_region,
                            index_to_point, lattice_coordinates, mod_lattice, point_to_index,
                            sample_dither)
from utils.errors import AmbiguousListError, ConfigurationError
from utils.stats import TrialRecord

logger = logging.getLogger(__name__)


@dataclass
class Model1State:
    chain: NestedChain
    alpha1: float
    u1: np.ndarray
    uq: np.ndarray
    u2: np.ndarray
    message: CodewordIndex
    codeword: np.ndarray

    def __post_init__(self):
        if not 0 < self.alpha1 <= 1:
            raise ConfigurationError(f"alpha1 must lie in (0, 1], got {self.alpha1}")

    @classmethod
    def draw(cls, chain: NestedChain, alpha1: float, rng: np.random.Generator) -> "Model1State":
        """Random message and the three dithers, drawn in a fixed order."""
        digits = rng.integers(0, chain.k1, size=chain.n)
        message = CodewordIndex.from_array(digits, chain.k1)
        u1 = sample_dither(chain.coarse, rng)
        uq = sample_dither(chain.quant, rng)
        u2 = sample_dither(chain.coarse, rng)
        return cls(chain, float(alpha1), u1, uq, u2, message, index_to_point(chain, message, "message"))


def m1_encode_source(state: Model1State) -> np.ndarray:
    """X1 = (t + U1) mod coarse."""
    return mod_lattice(state.chain.coarse, state.codeword + state.u1)


def m1_relay_scale(state: Model1State, y2) -> np.ndarray:
    """Y2' = (alpha1·Y2 + Uq - U1) mod coarse."""
    return mod_lattice(state.chain.coarse, state.alpha1 * np.asarray(y2, dtype=float) + state.uq - state.u1)


def interference_shift(state: Model1State, s, cancel: bool = True) -> np.ndarray:
    """Quant-lattice coordinates of Q_quant(alpha1·S + Uq); zero shift when cancellation is disabled."""
    quant = state.chain.quant
    if not cancel:
        return lattice_coordinates(quant, state.uq)
    return lattice_coordinates(quant, state.alpha1 * np.asarray(s, dtype=float) + state.uq)


def list_anchor(chain: NestedChain, y2p, anchor: str = "region") -> np.ndarray:
    """
    Quant-lattice point (reduced mod coarse) whose fine cell holds the list.

    'region' reproduces the set of quant points in Y2' + V(fine);
    'nearest' centres the cell on Q_quant(Y2').
    """
    quant = chain.quant
    if anchor == "nearest":
        coords = lattice_coordinates(quant, y2p)
    else:
        y = np.asarray(y2p, dtype=float)
        coords = np.ceil(y / quant.a - chain.k2 / 2.0).astype(np.int64) + chain.k2 // 2
    return centered_residue(coords, chain.quant_radix).astype(float) * quant.a


def m1_relay_list(state: Model1State, y2p, anchor: str = "region") -> Tuple[CodewordIndex, np.ndarray]:
    """
    List decoding at the relay.

    Returns:
        The quant-codebook index u of the list anchor and the k2^n list points.
    """
    chain = state.chain
    center = list_anchor(chain, y2p, anchor)
    u = point_to_index(chain, center, "quant")
    return u, enumerate_fine_in_region(chain, center)


def m1_list_from_index(chain: NestedChain, u: CodewordIndex) -> np.ndarray:
    """Rebuilds the list from its forwarded index."""
    return enumerate_fine_in_region(chain, index_to_point(chain, u, "quant"))


def m1_hop2_encode(state: Model1State, u: CodewordIndex) -> np.ndarray:
    """X2 = (quant_codebook[u] + U2) mod coarse, a nested (coarse, quant) code at rate Rq."""
    chain = state.chain
    return mod_lattice(chain.coarse, index_to_point(chain, u, "quant") + state.u2)


def m1_hop2_decode(chain: NestedChain, params: SchemeParams, y3, u2) -> CodewordIndex:
    """u_hat = index of Q_quant((alpha2·Y3 - U2) mod coarse) mod coarse."""
    scaled = mod_lattice(chain.coarse, params.alpha2 * np.asarray(y3, dtype=float) - np.asarray(u2))
    return point_to_index(chain, scaled, "quant")


def m1_resolve(state: Model1State, candidates: Union[CodewordIndex, np.ndarray], s,
               cancel_interference: bool = True) -> np.ndarray:
    """
    Destination resolution: subtract Q_quant(alpha1·S + Uq) from every list
    point (mod coarse) and keep the survivors that lie on the fine lattice.

    Raises:
        AmbiguousListError: unless exactly one survivor remains.
    """
    chain = state.chain
    if isinstance(candidates, CodewordIndex):
        candidates = m1_list_from_index(chain, candidates)
    quant = chain.quant
    coords = lattice_coordinates(quant, np.atleast_2d(candidates))
    shift = interference_shift(state, s, cancel_interference)
    reduced = centered_residue(coords - shift[np.newaxis, :], chain.quant_radix)
    survivors = np.all(np.mod(reduced, chain.k2) == 0, axis=1)
    count = int(np.count_nonzero(survivors))
    if count != 1:
        raise AmbiguousListError(count)
    return reduced[survivors][0].astype(float) * quant.a


def true_list_point(state: Model1State, s) -> np.ndarray:
    """Quant coordinates of v = (t + Q_quant(alpha1·S + Uq)) mod coarse, the point the list should hold."""
    chain = state.chain
    t_coords = lattice_coordinates(chain.quant, state.codeword)
    return centered_residue(t_coords + interference_shift(state, s), chain.quant_radix)


def run_model1_trial(chain: NestedChain, params: SchemeParams, interference: InterferenceSpec,
                     rng: np.random.Generator, trial: int = 0,
                     fixed_s: Optional[np.ndarray] = None) -> TrialRecord:
    """One end-to-end Model 1 transmission with per-stage checkpoints."""
    state = Model1State.draw(chain, params.alpha1, rng)
    s = fixed_s if fixed_s is not None else gen_interference(interference, chain.n, rng)

    x1 = m1_encode_source(state)
    y2 = hop1(1, x1, s, params.channel, rng)
    y2p = m1_relay_scale(state, y2)
    u, candidates = m1_relay_list(state, y2p, params.list_anchor)

    v = true_list_point(state, s)
    listed = centered_residue(lattice_coordinates(chain.quant, candidates), chain.quant_radix)
    relay_miss = not bool(np.any(np.all(listed == v[np.newaxis, :], axis=1)))

    if params.ideal_hop2:
        u_hat = u
    else:
        x2 = m1_hop2_encode(state, u)
        y3 = hop2(1, x2, s, params.channel, rng)
        u_hat = m1_hop2_decode(chain, params, y3, state.u2)
    hop2_error = u_hat != u

    ambiguous = False
    error = True
    try:
        t_hat = m1_resolve(state, u_hat, s, params.cancel_interference)
        error = point_to_index(chain, t_hat, "message") != state.message
    except AmbiguousListError as e:
        ambiguous = True
        logger.debug(f"Trial {trial}: {e}")

    if error:
        logger.debug(f"Trial {trial}: message error (relay_miss={relay_miss}, hop2={hop2_error}, ambiguous={ambiguous})")
    return TrialRecord(trial, bool(error), {"relay": relay_miss, "hop2": bool(hop2_error),
                                            "ambiguity": ambiguous, "destination": False})
