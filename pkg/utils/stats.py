import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.stats import binomtest, kstest

logger = logging.getLogger(__name__)

# Decoding checkpoints recorded per trial
STAGES = ("relay", "hop2", "ambiguity", "destination")

CSV_COLUMNS = ["model", "S1", "S2", "n", "k1", "k2", "R", "Rq", "sigma2q",
               "trials", "errors", "rate", "ci_lo", "ci_hi", "seed"]


@dataclass
class TrialRecord:
    """Outcome of one end-to-end trial."""
    trial: int
    error: bool
    stages: Dict[str, bool] = field(default_factory=dict)


@dataclass
class RunCounters:
    """Error counters of a block of trials; merge is commutative and associative."""
    trials: int = 0
    errors: int = 0
    stage_errors: Dict[str, int] = field(default_factory=lambda: {s: 0 for s in STAGES})

    def add(self, record: TrialRecord):
        self.trials += 1
        self.errors += int(record.error)
        for stage, failed in record.stages.items():
            if failed:
                self.stage_errors[stage] = self.stage_errors.get(stage, 0) + 1

    def merge(self, other: "RunCounters") -> "RunCounters":
        stages = dict(self.stage_errors)
        for stage, count in other.stage_errors.items():
            stages[stage] = stages.get(stage, 0) + count
        return RunCounters(self.trials + other.trials, self.errors + other.errors, stages)


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for an error rate."""
    if trials <= 0:
        return 0.0, 1.0
    ci = binomtest(int(errors), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def intervals_overlap(first: Tuple[float, float], second: Tuple[float, float]) -> bool:
    return first[0] <= second[1] and second[0] <= first[1]


def uniformity_pvalues(samples: np.ndarray, a: float) -> np.ndarray:
    """
    Per-component Kolmogorov-Smirnov p-values of samples (rows) against
    U[-a/2, a/2).
    """
    samples = np.atleast_2d(samples)
    return np.array([kstest(samples[:, i], "uniform", args=(-a / 2.0, a)).pvalue
                     for i in range(samples.shape[1])])


@dataclass
class RunSummary:
    """Aggregated statistics of a simulation run."""
    model: int
    s1: float
    s2: float
    n: int
    k1: int
    k2: int
    rate: float
    quant_rate: float
    sigma2q: float
    trials: int
    errors: int
    error_rate: float
    ci_lo: float
    ci_hi: float
    seed: int
    interference: str = ""
    stage_errors: Dict[str, int] = field(default_factory=dict)
    config: Dict = field(default_factory=dict)
    planned: Optional[Dict] = None
    wall_clock: float = 0.0

    @classmethod
    def from_counters(cls, counters: RunCounters, *, model: int, s1: float, s2: float, n: int, k1: int, k2: int,
                      seed: int, interference: str = "", config: Optional[Dict] = None,
                      planned: Optional[Dict] = None, wall_clock: float = 0.0) -> "RunSummary":
        lo, hi = wilson_interval(counters.errors, counters.trials)
        rate = counters.errors / counters.trials if counters.trials else 0.0
        return cls(model=int(model), s1=float(s1), s2=float(s2), n=int(n), k1=int(k1), k2=int(k2),
                   rate=float(np.log2(k1)), quant_rate=float(np.log2(k1 * k2)),
                   sigma2q=1.0 / float(k1 * k2) ** 2, trials=int(counters.trials),
                   errors=int(counters.errors), error_rate=float(rate), ci_lo=lo, ci_hi=hi,
                   seed=int(seed), interference=interference,
                   stage_errors={k: int(v) for k, v in sorted(counters.stage_errors.items())},
                   config=dict(config or {}), planned=planned, wall_clock=float(wall_clock))

    @property
    def interval(self) -> Tuple[float, float]:
        return self.ci_lo, self.ci_hi

    def to_row(self) -> Dict:
        """One CSV row with exactly the CSV_COLUMNS keys."""
        return {
            "model": self.model, "S1": self.s1, "S2": self.s2, "n": self.n,
            "k1": self.k1, "k2": self.k2, "R": self.rate, "Rq": self.quant_rate,
            "sigma2q": self.sigma2q, "trials": self.trials, "errors": self.errors,
            "rate": self.error_rate, "ci_lo": self.ci_lo, "ci_hi": self.ci_hi, "seed": self.seed,
        }

    def to_dict(self) -> Dict:
        """JSON form: the CSV row plus stage counts, interference and config echo (no wall-clock)."""
        data = self.to_row()
        data["interference"] = self.interference
        data["stage_errors"] = dict(self.stage_errors)
        data["config"] = dict(self.config)
        data["planned"] = self.planned
        return data
