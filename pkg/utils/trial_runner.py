"""
Monte-Carlo driver: splits a run into blocks of trial indices, runs them on
a process pool and merges the counters.

Trial i always draws from the stream SeedSequence(seed, spawn_key=(1, i)),
so the merged counts do not depend on the number of workers or on the
block layout.
"""

import time
import logging
import dataclasses
from dataclasses import dataclass
from functools import reduce
from multiprocessing import Pool
from typing import Dict, List, Optional

import numpy as np

from models.channels import InterferenceSpec, SchemeParams, gen_interference
from models.lattice import NestedChain, build_chain, enumeration_cap
from models.model1_scheme import run_model1_trial
from models.model2_scheme import run_model2_trial
from utils.config import RunConfig
from utils.errors import CapacityError, ConfigurationError
from utils.rates import constraint_report, hop_capacity, plan_parameters
from utils.stats import RunCounters, RunSummary, intervals_overlap

logger = logging.getLogger(__name__)

TRIAL_FUNCTIONS = {1: run_model1_trial, 2: run_model2_trial}

# blocks handed out per worker; more blocks smooth out uneven trial costs
BLOCKS_PER_WORKER = 4


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator of trial `trial`."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, trial)))


def shared_rng(seed: int) -> np.random.Generator:
    """Generator of the interference held fixed across trials (reseed disabled)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))


@dataclass(frozen=True)
class PreparedRun:
    model: int
    chain: NestedChain
    scheme: SchemeParams
    interference: InterferenceSpec
    planned: Optional[Dict] = None


@dataclass(frozen=True)
class TrialBlock:
    model: int
    chain: NestedChain
    scheme: SchemeParams
    interference: InterferenceSpec
    seed: int
    start: int
    stop: int
    fixed_s: Optional[tuple] = None


def prepare_run(config: RunConfig) -> PreparedRun:
    """
    Resolves the nested chain (planning it when k1/k2 are 'auto') and the
    receiver parameters of a run.

    Raises:
        ConfigurationError: if no chain is feasible or ideal_hop2 is requested
            above the hop-2 capacity.
        CapacityError: if the Model 1 list would exceed the enumeration cap.
    """
    planned = None
    if config.auto_chain:
        plan = plan_parameters(config.model, config.s1, config.s2, config.margin, config.n)
        if plan is None:
            raise ConfigurationError(f"No feasible (k1, k2) for model {config.model} at S1={config.s1:g}, "
                                     f"S2={config.s2:g}, margin={config.margin}")
        k1, k2 = plan.k1, plan.k2
        planned = plan.to_dict()
    else:
        k1, k2 = int(config.k1), int(config.k2)
        violated = [name for name, slack in constraint_report(config.model, config.s1, config.s2, k1, k2).items()
                    if slack <= 0]
        if violated:
            logger.warning(f"Fixed chain k1={k1}, k2={k2} violates {', '.join(violated)}; expect errors")

    chain = build_chain(config.n, k1, k2)
    if config.model == 1 and chain.list_size > enumeration_cap():
        raise CapacityError(chain.list_size, enumeration_cap())
    if config.ideal_hop2 and not chain.quant_rate < hop_capacity(config.s2):
        raise ConfigurationError(f"ideal_hop2 needs Rq={chain.quant_rate:.3f} < hop-2 capacity "
                                 f"{hop_capacity(config.s2):.3f}")
    if config.ideal_hop2:
        logger.warning("Hop 2 replaced by an error-free index pipe; only hop-1 errors are simulated")

    scheme = SchemeParams.from_snrs(config.s1, config.s2, config.alpha1, config.alpha2,
                                    noiseless=config.noiseless, ideal_hop2=config.ideal_hop2,
                                    list_anchor=config.list_anchor,
                                    cancel_interference=config.cancel_interference)
    return PreparedRun(config.model, chain, scheme, config.interference_spec, planned)


def run_block(block: TrialBlock) -> RunCounters:
    """Runs trials [start, stop) of a block; top-level so the pool can pickle it."""
    trial_fn = TRIAL_FUNCTIONS[block.model]
    fixed_s = None if block.fixed_s is None else np.array(block.fixed_s)
    counters = RunCounters()
    for trial in range(block.start, block.stop):
        record = trial_fn(block.chain, block.scheme, block.interference, trial_rng(block.seed, trial),
                          trial=trial, fixed_s=fixed_s)
        counters.add(record)
    return counters


def make_blocks(prepared: PreparedRun, trials: int, seed: int, workers: int) -> List[TrialBlock]:
    fixed_s = None
    if not prepared.interference.reseed:
        s = gen_interference(prepared.interference, prepared.chain.n, shared_rng(seed))
        fixed_s = tuple(float(v) for v in s)
    n_blocks = max(1, min(trials, workers * BLOCKS_PER_WORKER))
    edges = np.linspace(0, trials, n_blocks + 1).astype(int)
    return [TrialBlock(prepared.model, prepared.chain, prepared.scheme, prepared.interference,
                       seed, int(lo), int(hi), fixed_s)
            for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]


def run_trials(config: RunConfig) -> RunSummary:
    """Runs config.trials independent trials and returns the aggregated summary."""
    prepared = prepare_run(config)
    chain = prepared.chain
    logger.info(f"Running model {config.model}: S1={config.s1:g}, S2={config.s2:g}, n={chain.n}, "
                f"k1={chain.k1}, k2={chain.k2}, interference={prepared.interference.label}, "
                f"trials={config.trials}, workers={config.workers}")

    start = time.perf_counter()
    blocks = make_blocks(prepared, config.trials, config.seed, config.workers)
    if config.workers == 1:
        results = [run_block(b) for b in blocks]
    else:
        with Pool(processes=config.workers) as pool:
            results = pool.map(run_block, blocks)
    counters = reduce(lambda x, y: x.merge(y), results, RunCounters())
    elapsed = time.perf_counter() - start

    # execution-only settings stay out of the echo so outputs match across worker counts
    echo = {k: v for k, v in config.to_dict().items() if k not in ("workers", "output")}
    summary = RunSummary.from_counters(
        counters, model=config.model, s1=config.s1, s2=config.s2, n=chain.n, k1=chain.k1, k2=chain.k2,
        seed=config.seed, interference=prepared.interference.label, config=echo,
        planned=prepared.planned, wall_clock=elapsed)
    logger.info(f"Model {config.model} done in {elapsed:.2f}s: {summary.errors}/{summary.trials} errors "
                f"(rate {summary.error_rate:.4g}, 95% CI [{summary.ci_lo:.4g}, {summary.ci_hi:.4g}]) "
                f"stages={summary.stage_errors}")
    return summary


def compare_interference(config: RunConfig, kinds: List[str]) -> List[RunSummary]:
    """Runs the same configuration under each interference descriptor ('kind:param')."""
    summaries = []
    for text in kinds:
        spec = InterferenceSpec.parse(text, config.interference_reseed)
        variant = dataclasses.replace(config, interference=spec.kind, interference_param=spec.param)
        summaries.append(run_trials(variant.validate()))
    return summaries


def intervals_agree(summaries: List[RunSummary]) -> bool:
    """True when every pair of 95% intervals overlaps."""
    return all(intervals_overlap(a.interval, b.interval)
               for i, a in enumerate(summaries) for b in summaries[i + 1:])
