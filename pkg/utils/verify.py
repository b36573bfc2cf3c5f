"""
Invariant battery behind `app.py verify`.

Every check returns a CheckResult; an exception inside a check is reported
as a failed entry instead of aborting the suite.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from models.channels import InterferenceSpec, gen_interference
from models.lattice import (ScaledLattice, build_chain, centered_residue, enumerate_fine_in_region,
                            lattice_coordinates, mod_lattice, nearest_point, sample_dither)
from utils.config import RunConfig
from utils.rates import (DEFAULT_SNR_GRID, achievable_rate, achievable_rate_harmonic, constraint_report,
                         effective_noise_variance, gap, mmse_coefficient, plan_parameters)
from utils.stats import uniformity_pvalues

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240611
NOISELESS_KINDS = ("constant:1e9", "gaussian:1e12", "sinusoid:1e6", "uniform:1e3")
# per-component significance of the dither uniformity KS tests
KS_SIGNIFICANCE = 0.01


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerifyContext:
    seed: int
    alpha1_override: Optional[float]
    trials: int

    def rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(stream,)))


def _random_codewords(chain, rng, count):
    coords = rng.integers(0, chain.k1, size=(count, chain.n))
    return centered_residue(coords, chain.k1).astype(float) * chain.fine.a


def check_mod_reconstruction(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng(1)
    lat = ScaledLattice(4, float(np.sqrt(12.0)))
    x = rng.normal(0.0, 1e3, size=(10 ** 4, lat.n))
    residual = mod_lattice(lat, x)
    error = np.linalg.norm(x - (nearest_point(lat, x) + residual), axis=1)
    inside = np.all((residual >= -lat.a / 2) & (residual < lat.a / 2))
    worst = float(np.max(error / np.maximum(np.linalg.norm(x, axis=1), 1.0)))
    return CheckResult("mod_reconstruction", bool(worst <= 1e-9 and inside),
                       f"max relative error {worst:.2e}, all residuals in cube: {inside}")


def check_tie_break(ctx: VerifyContext) -> CheckResult:
    lat = ScaledLattice(1, 2.0)
    q = float(nearest_point(lat, [1.0])[0])
    folded = mod_lattice(ScaledLattice(2, 2.0), [5.0, -3.0])
    passed = q == 2.0 and np.array_equal(folded, [-1.0, -1.0])
    return CheckResult("tie_break", bool(passed), f"Q(1.0)={q}, (5,-3) mod 2Z^2={folded.tolist()}")


def check_crypto_lemma(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng(2)
    lat = ScaledLattice(2, float(np.sqrt(12.0)))
    points = [np.zeros(2), np.array([1.0, -2.5]), np.array([1e3 * lat.a + 0.3, -7e2 * lat.a])]
    dithers = sample_dither(lat, rng, size=10 ** 5)
    pvalues = np.concatenate([uniformity_pvalues(mod_lattice(lat, x + dithers), lat.a) for x in points])
    # each component of each point is tested on its own
    return CheckResult("crypto_lemma_ks", bool(np.min(pvalues) > KS_SIGNIFICANCE),
                       f"min KS p-value {np.min(pvalues):.4f} (threshold {KS_SIGNIFICANCE:.4f})")


def check_list_cardinality(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng(3)
    details = []
    passed = True
    for n, k2 in ((2, 2), (3, 2), (4, 3)):
        chain = build_chain(n, 2, k2)
        for center in rng.uniform(-chain.coarse.a / 2, chain.coarse.a / 2, size=(100, n)):
            points = enumerate_fine_in_region(chain, center)
            distinct = len(np.unique(np.round(points / chain.quant.a).astype(np.int64), axis=0))
            if len(points) != k2 ** n or distinct != k2 ** n:
                passed = False
        details.append(f"(n={n}, k2={k2}): {k2 ** n}")
    return CheckResult("list_cardinality", passed, ", ".join(details))


def _wrapped_error(lat, diff, scale):
    return float(np.max(np.abs(mod_lattice(lat, diff)) / scale))


def check_model1_identity(ctx: VerifyContext) -> CheckResult:
    """y2' = t + Q_quant(a1·S+Uq) + ((a1·S+Uq) mod quant) - (1-a1)·x1 + a1·z2 (mod coarse)."""
    rng = ctx.rng(4)
    chain = build_chain(4, 2, 2)
    coarse, quant, count = chain.coarse, chain.quant, 10 ** 3
    t = _random_codewords(chain, rng, count)
    u1 = sample_dither(coarse, rng, count)
    uq = sample_dither(quant, rng, count)
    s = rng.uniform(-1e9, 1e9, size=(count, chain.n))
    z2 = rng.normal(0.0, np.sqrt(1.0 / 15.0), size=(count, chain.n))
    alpha1 = rng.uniform(0.05, 1.0, size=(count, 1))

    x1 = mod_lattice(coarse, t + u1)
    y2p = mod_lattice(coarse, alpha1 * (x1 + s + z2) + uq - u1)
    shifted = alpha1 * s + uq
    residual = shifted - nearest_point(quant, shifted)
    expected = t + nearest_point(quant, shifted) + residual - (1 - alpha1) * x1 + alpha1 * z2
    worst = _wrapped_error(coarse, y2p - expected, 1.0 + np.max(np.abs(s)))
    return CheckResult("model1_identity", worst <= 1e-9, f"max scaled error {worst:.2e}")


def check_model2_identities(ctx: VerifyContext) -> CheckResult:
    """Relay: (a1·y2 - U1) mod coarse = T - (1-a1)·x1 + a1·z2; destination: y3' = t + ((a2·S+Uq) mod quant) - (1-a2)·x2 + a2·z3."""
    rng = ctx.rng(5)
    chain = build_chain(4, 2, 2)
    coarse, quant, count = chain.coarse, chain.quant, 10 ** 3
    t = _random_codewords(chain, rng, count)
    u1 = sample_dither(coarse, rng, count)
    u2 = sample_dither(coarse, rng, count)
    uq = sample_dither(quant, rng, count)
    s = rng.uniform(-1e9, 1e9, size=(count, chain.n))
    z2 = rng.normal(0.0, np.sqrt(1.0 / 15.0), size=(count, chain.n))
    z3 = rng.normal(0.0, np.sqrt(1.0 / 15.0), size=(count, chain.n))
    alpha1 = rng.uniform(0.05, 1.0, size=(count, 1))
    alpha2 = rng.uniform(0.05, 1.0, size=(count, 1))

    shifted = alpha2 * s + uq
    big_t = mod_lattice(coarse, t - nearest_point(quant, shifted))
    x1 = mod_lattice(coarse, big_t + u1)
    relay = mod_lattice(coarse, alpha1 * (x1 + z2) - u1)
    relay_worst = _wrapped_error(coarse, relay - (big_t - (1 - alpha1) * x1 + alpha1 * z2), 1.0)

    x2 = mod_lattice(coarse, big_t + u2)
    y3p = mod_lattice(coarse, alpha2 * (x2 + s + z3) + uq - u2)
    expected = t + (shifted - nearest_point(quant, shifted)) - (1 - alpha2) * x2 + alpha2 * z3
    dest_worst = _wrapped_error(coarse, y3p - expected, 1.0 + np.max(np.abs(s)))
    passed = relay_worst <= 1e-9 and dest_worst <= 1e-9
    return CheckResult("model2_identities", passed,
                       f"relay {relay_worst:.2e}, destination {dest_worst:.2e}")


def check_effective_noise(ctx: VerifyContext) -> CheckResult:
    """Measured variance of (y2' - v) mod coarse against 1/(1+S1) + sigma^2(quant)."""
    rng = ctx.rng(6)
    s1 = 255.0
    chain = build_chain(8, 2, 2)
    coarse, quant = chain.coarse, chain.quant
    count = 125_000
    alpha1 = mmse_coefficient(s1) if ctx.alpha1_override is None else ctx.alpha1_override

    t = _random_codewords(chain, rng, count)
    u1 = sample_dither(coarse, rng, count)
    uq = sample_dither(quant, rng, count)
    s = rng.normal(0.0, 1e3, size=(count, chain.n))
    z2 = rng.normal(0.0, np.sqrt(1.0 / s1), size=(count, chain.n))
    x1 = mod_lattice(coarse, t + u1)
    y2p = mod_lattice(coarse, alpha1 * (x1 + s + z2) + uq - u1)
    v_coords = lattice_coordinates(quant, t) + lattice_coordinates(quant, alpha1 * s + uq)
    v = centered_residue(v_coords, chain.quant_radix).astype(float) * quant.a
    measured = float(np.mean(np.square(mod_lattice(coarse, y2p - v))))
    expected = effective_noise_variance(mmse_coefficient(s1), s1, chain.sigma2_quant)
    ratio = measured / expected
    return CheckResult("effective_noise", bool(abs(ratio - 1.0) <= 0.10),
                       f"alpha1={alpha1:.4f}: measured {measured:.5f} vs {expected:.5f} (ratio {ratio:.3f})")


def check_residual_variance(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng(7)
    chain = build_chain(4, 2, 2)
    alpha2 = mmse_coefficient(255.0)
    s = gen_interference(InterferenceSpec("gaussian", 1e12), 10 ** 5 * chain.n, rng).reshape(-1, chain.n)
    uq = sample_dither(chain.quant, rng, s.shape[0])
    measured = float(np.mean(np.square(mod_lattice(chain.quant, alpha2 * s + uq))))
    ratio = measured / chain.sigma2_quant
    return CheckResult("residual_variance", bool(abs(ratio - 1.0) <= 0.05),
                       f"measured {measured:.5f} vs {chain.sigma2_quant:.5f}")


def check_mmse_optimality(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng(8)
    lat = ScaledLattice(1, float(np.sqrt(12.0)))
    alphas = np.linspace(0.0, 1.0, 101)
    step = alphas[1] - alphas[0]
    details = []
    passed = True
    for snr in (3.0, 15.0, 255.0):
        x = sample_dither(lat, rng, 10 ** 5)[:, 0]
        z = rng.normal(0.0, np.sqrt(1.0 / snr), size=x.shape)
        variances = [np.mean(np.square(alpha * (x + z) - x)) for alpha in alphas]
        best = float(alphas[int(np.argmin(variances))])
        optimum = mmse_coefficient(snr)
        passed &= abs(best - optimum) <= step + 1e-12
        details.append(f"S={snr:g}: argmin {best:.2f} vs {optimum:.4f}")
    return CheckResult("mmse_optimality", bool(passed), "; ".join(details))


def check_noiseless_exactness(ctx: VerifyContext) -> CheckResult:
    from utils.trial_runner import run_trials

    errors = {}
    for model in (1, 2):
        for kind in NOISELESS_KINDS:
            spec = InterferenceSpec.parse(kind)
            config = RunConfig(model=model, s1=255.0, s2=255.0, n=8, k1=2, k2=2,
                               interference=spec.kind, interference_param=spec.param,
                               trials=ctx.trials, seed=ctx.seed, noiseless=True).validate()
            errors[f"m{model}/{kind}"] = run_trials(config).errors
    total = sum(errors.values())
    return CheckResult("noiseless_exactness", total == 0, f"errors per run: {errors}")


def check_rate_closed_forms(ctx: VerifyContext) -> CheckResult:
    grid = np.logspace(-1, 4, 50)
    worst = max(abs(achievable_rate(a, b) - achievable_rate_harmonic(a, b)) for a in grid for b in grid)
    diagonal = max(abs(achievable_rate(s, s) - max(0.0, 0.5 * np.log2(0.5 + s / 2))) for s in grid)
    symmetric = all(achievable_rate(a, b) == achievable_rate(b, a) for a in grid for b in grid)
    passed = worst <= 1e-12 and diagonal <= 1e-12 and symmetric
    return CheckResult("rate_closed_forms", bool(passed),
                       f"form mismatch {worst:.1e}, diagonal mismatch {diagonal:.1e}, symmetric {symmetric}")


def check_gap_grid(ctx: VerifyContext) -> CheckResult:
    gaps = {(a, b): gap(a, b) for a in DEFAULT_SNR_GRID for b in DEFAULT_SNR_GRID}
    worst = max(gaps.values())
    diagonal_ok = all(abs(gaps[(s, s)] - 0.5) <= 1e-9 for s in DEFAULT_SNR_GRID if s > 1)
    return CheckResult("gap_grid", bool(worst <= 0.5 + 1e-12 and diagonal_ok),
                       f"max gap {worst:.6f}, diagonal equals 1/2: {diagonal_ok}")


def check_planner_soundness(ctx: VerifyContext) -> CheckResult:
    problems = []
    accepted = 0
    snrs = (3.0, 15.0, 63.0, 255.0, 1e3, 1e4)
    for model in (1, 2):
        for s1 in snrs:
            for s2 in snrs:
                for margin in (0.0, 0.25, 0.5):
                    plan = plan_parameters(model, s1, s2, margin)
                    if plan is None:
                        continue
                    accepted += 1
                    report = constraint_report(model, s1, s2, plan.k1, plan.k2, margin)
                    if not all(v > 0 for v in report.values()):
                        problems.append(f"m{model} ({s1:g},{s2:g},{margin}) not strictly feasible")
                    if plan.quant_rate <= plan.rate:
                        problems.append(f"m{model} ({s1:g},{s2:g},{margin}) Rq <= R")
                    bigger = [constraint_report(model, s1, s2, plan.k1 + 1, k2, margin)
                              for k2 in range(1, 4 * plan.k2 + 64)]
                    if any(all(v > 0 for v in r.values()) for r in bigger):
                        problems.append(f"m{model} ({s1:g},{s2:g},{margin}) k1 not maximal")
                    if model == 2 and not report["relay_message"] >= report["destination"]:
                        problems.append(f"m2 ({s1:g},{s2:g},{margin}) relay message bound tighter than destination")
    detail = f"{accepted} plans checked" + (f"; {problems[:3]}" if problems else "")
    return CheckResult("planner_soundness", not problems and accepted > 0, detail)


CHECKS: Dict[str, Callable[[VerifyContext], CheckResult]] = {
    "mod_reconstruction": check_mod_reconstruction,
    "tie_break": check_tie_break,
    "crypto_lemma_ks": check_crypto_lemma,
    "list_cardinality": check_list_cardinality,
    "model1_identity": check_model1_identity,
    "model2_identities": check_model2_identities,
    "effective_noise": check_effective_noise,
    "residual_variance": check_residual_variance,
    "mmse_optimality": check_mmse_optimality,
    "noiseless_exactness": check_noiseless_exactness,
    "rate_closed_forms": check_rate_closed_forms,
    "gap_grid": check_gap_grid,
    "planner_soundness": check_planner_soundness,
}


def verify_suite(seed: int = DEFAULT_SEED, alpha1_override: Optional[float] = None, trials: int = 1000,
                 only: Optional[List[str]] = None) -> List[CheckResult]:
    """
    Runs the invariant battery.

    Args:
        seed: Base seed of every check's random stream.
        alpha1_override: Relay scaling used by the effective-noise check
            instead of S1/(S1+1).
        trials: Trials per run in the noiseless exactness check.
        only: Optional subset of check names.

    Returns:
        One CheckResult per check, in registry order.
    """
    ctx = VerifyContext(seed, alpha1_override, trials)
    results = []
    for name, check in CHECKS.items():
        if only and name not in only:
            continue
        try:
            result = check(ctx)
        except Exception as e:
            logger.error(f"Check {name} raised: {e}")
            result = CheckResult(name, False, f"raised {type(e).__name__}: {e}")
        logger.info(f"[{'PASS' if result.passed else 'FAIL'}] {result.name}: {result.detail}")
        results.append(result)
    return results
