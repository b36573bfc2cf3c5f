import math
import logging
from dataclasses import dataclass, field, asdict
from typing import Dict, Optional

import numpy as np
from scipy.stats import norm

from utils.errors import LatticeInputError

logger = logging.getLogger(__name__)

# SNR grid used by `rates --grid` and the gap checks
DEFAULT_SNR_GRID = (0.1, 1.0, 3.0, 15.0, 255.0, 1e4)


def _check_snr(*snrs: float, allow_zero: bool = False):
    for snr in snrs:
        if not np.isfinite(snr) or snr < 0 or (snr == 0 and not allow_zero):
            raise LatticeInputError(f"SNR must be positive and finite, got {snr}")


def hop_capacity(snr: float) -> float:
    """AWGN capacity 1/2·log2(1 + snr) in bits per real dimension."""
    _check_snr(snr, allow_zero=True)
    return 0.5 * math.log2(1.0 + snr)


def achievable_rate(s1: float, s2: float) -> float:
    """
    Rate achieved by both lattice DF schemes:
    [1/2·log2((S1·S2 + S1 + S2 + 1) / (S1 + S2 + 2))]^+ bits/dim.
    """
    _check_snr(s1, s2)
    # exactly symmetric in S1 and S2 under float arithmetic
    return max(0.0, 0.5 * math.log2((1.0 + s1) * (1.0 + s2) / (s1 + s2 + 2.0)))


def achievable_rate_harmonic(s1: float, s2: float) -> float:
    """Same rate written as [1/2·log2(1 / (1/(1+S1) + 1/(1+S2)))]^+."""
    _check_snr(s1, s2)
    return max(0.0, 0.5 * math.log2(1.0 / (1.0 / (1.0 + s1) + 1.0 / (1.0 + s2))))


def clean_capacity(s1: float, s2: float) -> float:
    """Interference-free two-hop outer bound 1/2·log2(1 + min(S1, S2))."""
    _check_snr(s1, s2, allow_zero=True)
    return hop_capacity(min(s1, s2))


def gap(s1: float, s2: float) -> float:
    """Distance from the clean-channel capacity; at most 1/2 bit."""
    return clean_capacity(s1, s2) - achievable_rate(s1, s2)


def mmse_coefficient(snr: float) -> float:
    _check_snr(snr)
    return snr / (snr + 1.0)


def effective_noise_variance(alpha: float, snr: float, sigma2_quant: float = 0.0, power: float = 1.0) -> float:
    """
    Per-dimension variance of the three independent terms seen after MMSE
    scaling: self noise (1-alpha)^2·P, scaled channel noise alpha^2·P/snr and
    the quantization residual sigma2_quant.
    """
    _check_snr(snr)
    return (1.0 - alpha) ** 2 * power + alpha ** 2 * power / snr + sigma2_quant


def list_decoding_bound(snr: float, sigma2_quant: float) -> float:
    """1/2·log2(1 / (1/(1+snr) + sigma2_quant)), the rate bound with the residual treated as noise."""
    _check_snr(snr)
    return 0.5 * math.log2(1.0 / (1.0 / (1.0 + snr) + sigma2_quant))


def union_bound(n: int, half_cell: float, sigma_eff: float) -> float:
    """Per-dimension union bound 2n·Q(half_cell / sigma_eff), clipped to 1."""
    if sigma_eff <= 0:
        return 0.0
    return float(min(1.0, 2.0 * n * norm.sf(half_cell / sigma_eff)))


@dataclass
class RateReport:
    s1: float
    s2: float
    r_thm: float
    r_clean: float
    gap: float
    constraints: Dict[str, float] = field(default_factory=dict)


def constraint_report(model: int, s1: float, s2: float, k1: int, k2: int, margin: float = 0.0) -> Dict[str, float]:
    """
    Signed slack of every rate constraint of a scheme for the cubic chain
    (k1, k2) at unit power; a constraint holds iff its slack is > 0.

    Model 1: list decoding at the relay, sigma^2(quant) > 1/(1+S2), and the
    list index fitting hop 2. Model 2: relay decoding of R and Rq over hop 1,
    sigma^2(quant) > 1/(1+S1), and MMSE decoding at the destination.

    Two derived checks ride along: 'quant_above_message' (Rq - R) for both
    models and, for Model 2, 'relay_looser_than_destination' (relay message
    slack minus destination slack). Both follow from the constraints above,
    so they never change feasibility.
    """
    _check_snr(s1, s2)
    if model not in (1, 2):
        raise LatticeInputError(f"Model must be 1 or 2, got {model}")
    rate = math.log2(k1)
    quant_rate = math.log2(k1 * k2)
    sigma2_quant = 1.0 / (k1 * k2) ** 2
    if model == 1:
        return {
            "list_decoding": list_decoding_bound(s1, sigma2_quant) - margin - rate,
            "sigma2_quant": sigma2_quant - 1.0 / (1.0 + s2),
            "hop2_index": hop_capacity(s2) - margin - quant_rate,
            "quant_above_message": quant_rate - rate,
        }
    relay_message = hop_capacity(s1) - margin - rate
    destination = list_decoding_bound(s2, sigma2_quant) - margin - rate
    return {
        "relay_message": relay_message,
        "relay_quant": hop_capacity(s1) - margin - quant_rate,
        "sigma2_quant": sigma2_quant - 1.0 / (1.0 + s1),
        "destination": destination,
        "quant_above_message": quant_rate - rate,
        "relay_looser_than_destination": relay_message - destination,
    }


def rate_report(s1: float, s2: float, model: Optional[int] = None, k1: Optional[int] = None,
                k2: Optional[int] = None, margin: float = 0.0) -> RateReport:
    """Theorem rate, clean capacity and gap, plus scheme constraints when a chain is given."""
    report = RateReport(s1, s2, achievable_rate(s1, s2), clean_capacity(s1, s2), gap(s1, s2))
    if model is not None and k1 is not None and k2 is not None:
        report.constraints = constraint_report(model, s1, s2, k1, k2, margin)
    return report


@dataclass
class PlannedConfig:
    model: int
    n: int
    k1: int
    k2: int
    rate: float
    quant_rate: float
    sigma2_quant: float
    margin: float
    margins: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return asdict(self)


def _feasible(model, s1, s2, k1, k2, margin) -> bool:
    return all(v > 0 for v in constraint_report(model, s1, s2, k1, k2, margin).values())


def plan_parameters(model: int, s1: float, s2: float, margin: float = 0.0, n: int = 8) -> Optional[PlannedConfig]:
    """
    Picks the integer chain (k1 >= 2, k2 >= 1) with the largest message rate
    log2(k1) satisfying every constraint of the scheme with the given back-off
    margin (bits/dim). Among the feasible k2 for that k1 the smallest is
    returned.

    Returns:
        The PlannedConfig, or None when no k1 >= 2 is feasible.
    """
    _check_snr(s1, s2)
    if margin < 0:
        raise LatticeInputError(f"Margin must be >= 0, got {margin}")
    if model not in (1, 2):
        raise LatticeInputError(f"Model must be 1 or 2, got {model}")

    # R < Rq < hop limit and R < link limit, so k1 < sqrt(1 + min(S1, S2))·2^-margin
    k1_upper = int(math.floor(math.sqrt(1.0 + min(s1, s2)) * 2.0 ** (-margin)))
    # the link carrying the quantization index bounds k1·k2
    index_snr = s2 if model == 1 else s1
    product_limit = math.sqrt(1.0 + index_snr) * 2.0 ** (-margin)

    for k1 in range(k1_upper, 1, -1):
        k2_max = int(math.ceil(product_limit / k1)) - 1
        while k2_max >= 1 and not _feasible_index(model, s1, s2, k1, k2_max, margin):
            k2_max -= 1
        if k2_max < 1 or not _feasible(model, s1, s2, k1, k2_max, margin):
            continue
        # the rate bound only improves with k2, so bisect for the smallest feasible k2
        lo, hi = 1, k2_max
        while lo < hi:
            mid = (lo + hi) // 2
            if _feasible(model, s1, s2, k1, mid, margin):
                hi = mid
            else:
                lo = mid + 1
        k2 = lo
        margins = constraint_report(model, s1, s2, k1, k2, margin)
        planned = PlannedConfig(model, int(n), k1, k2, math.log2(k1), math.log2(k1 * k2),
                                1.0 / (k1 * k2) ** 2, margin, margins)
        logger.info(f"Planned model {model} at S1={s1:g}, S2={s2:g}, margin={margin}: "
                    f"k1={k1}, k2={k2} (R={planned.rate:.3f}, Rq={planned.quant_rate:.3f})")
        return planned

    logger.info(f"No feasible chain for model {model} at S1={s1:g}, S2={s2:g}, margin={margin}")
    return None


def _feasible_index(model, s1, s2, k1, k2, margin) -> bool:
    report = constraint_report(model, s1, s2, k1, k2, margin)
    keys = ("hop2_index", "sigma2_quant") if model == 1 else ("relay_quant", "sigma2_quant")
    return all(report[k] > 0 for k in keys)


def scheme_error_bound(model: int, k1: int, k2: int, n: int, s1: float, s2: float, power: float = 1.0) -> float:
    """
    Union-bound estimate of the message error probability of a scheme with
    MMSE scaling, treating every effective noise as Gaussian: the sum over
    decoding stages of 2n·Q(half_cell / sigma_eff).

    The Model 1 relay stage assumes the list region is anchored on Y2' itself
    (symmetric fine cell).
    """
    _check_snr(s1, s2)
    a = math.sqrt(12.0 * power)
    fine_half = a / (2.0 * k1)
    quant_half = a / (2.0 * k1 * k2)
    sigma2_quant = (a / (k1 * k2)) ** 2 / 12.0
    if model == 1:
        stages = [
            union_bound(n, fine_half, math.sqrt(power / (1.0 + s1) + sigma2_quant)),
            union_bound(n, quant_half, math.sqrt(power / (1.0 + s2))),
        ]
    else:
        stages = [
            union_bound(n, quant_half, math.sqrt(power / (1.0 + s1))),
            union_bound(n, fine_half, math.sqrt(power / (1.0 + s2) + sigma2_quant)),
        ]
    return float(min(1.0, sum(stages)))
