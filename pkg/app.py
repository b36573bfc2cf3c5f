import os
import sys
import json
import logging
import argparse
from datetime import datetime
from typing import Dict, List, Optional

import pandas as pd
from dotenv import load_dotenv

# Load environment variables from .env file (if it exists)
load_dotenv(dotenv_path=os.path.join(os.path.dirname(os.path.abspath(__file__)), '.env'))

# Configure logging
logging.basicConfig(level=os.environ.get("LATTICE_RELAY_LOG_LEVEL", "INFO").upper(),
                    format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

from models.channels import InterferenceSpec
from utils.config import build_config, output_dir
from utils.errors import CapacityError, ConfigurationError, LatticeInputError, ResultsIOError
from utils.rates import DEFAULT_SNR_GRID, plan_parameters, rate_report
from utils.results_io import emit_results
from utils.trial_runner import compare_interference, intervals_agree, run_trials
from utils.verify import DEFAULT_SEED, verify_suite

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

DEFAULT_INDEPENDENCE_KINDS = "constant:0,constant:1e6,gaussian:1e12"


def setup_logging(verbose: bool = False):
    """Raises verbosity on request and mirrors the log to LATTICE_RELAY_LOG_DIR when set."""
    root = logging.getLogger()
    if verbose:
        root.setLevel(logging.DEBUG)
    log_dir = os.environ.get("LATTICE_RELAY_LOG_DIR")
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        handler = logging.FileHandler(os.path.join(log_dir, f"lattice_relay_{timestamp}.log"))
        handler.setFormatter(logging.Formatter('%(asctime)s - %(levelname)s - %(message)s'))
        root.addHandler(handler)


def _default_output(prefix: str, fmt: str) -> Optional[str]:
    directory = output_dir()
    if not directory:
        return None
    return os.path.join(directory, f"{prefix}.{fmt}")


def _overrides(args) -> Dict:
    overrides = {
        "model": args.model, "s1": args.s1, "s2": args.s2, "n": args.n, "k1": args.k1, "k2": args.k2,
        "margin": args.margin, "trials": args.trials, "seed": args.seed, "workers": args.workers,
        "ideal_hop2": args.ideal_hop2, "noiseless": args.noiseless, "alpha1": args.alpha1,
        "alpha2": args.alpha2, "list_anchor": args.list_anchor,
        "cancel_interference": args.cancel_interference, "interference_reseed": args.reseed,
        "output": args.output, "format": args.format,
    }
    if args.interference:
        spec = InterferenceSpec.parse(args.interference)
        overrides["interference"] = spec.kind
        overrides["interference_param"] = spec.param
    return overrides


def cmd_rates(args) -> int:
    if args.grid:
        pairs = [(a, b) for a in DEFAULT_SNR_GRID for b in DEFAULT_SNR_GRID]
    else:
        if args.s1 is None or args.s2 is None:
            raise ConfigurationError("rates needs --s1 and --s2 (or --grid)")
        pairs = [(args.s1, args.s2)]
    rows = []
    for s1, s2 in pairs:
        report = rate_report(s1, s2, args.model, args.k1, args.k2, args.margin or 0.0)
        row = {"S1": s1, "S2": s2, "R_thm": report.r_thm, "R_clean": report.r_clean, "gap": report.gap}
        row.update(report.constraints)
        rows.append(row)
    frame = pd.DataFrame(rows)
    if args.output:
        try:
            frame.to_csv(args.output, index=False)
        except OSError as e:
            raise ResultsIOError(args.output, str(e))
        logger.info(f"Wrote {len(rows)} rate rows to {args.output}")
    else:
        print(frame.to_csv(index=False), end="")
    return EXIT_OK


def cmd_plan(args) -> int:
    if args.s1 is None or args.s2 is None:
        raise ConfigurationError("plan needs --s1 and --s2")
    plan = plan_parameters(args.model or 1, args.s1, args.s2, args.margin or 0.0, args.n or 8)
    if plan is None:
        print(json.dumps({"feasible": False}))
    else:
        print(json.dumps({"feasible": True, **plan.to_dict()}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = build_config(args.config, _overrides(args))
    summary = run_trials(config)
    path = config.output or _default_output(f"model{config.model}_seed{config.seed}", config.format)
    if path:
        emit_results(summary, config.format, path)
    else:
        print(pd.DataFrame([summary.to_row()]).to_csv(index=False), end="")
    return EXIT_OK


def cmd_independence(args) -> int:
    config = build_config(args.config, _overrides(args))
    kinds: List[str] = [k for k in args.kinds.split(",") if k.strip()]
    summaries = compare_interference(config, kinds)
    for summary in summaries:
        logger.info(f"{summary.interference}: rate {summary.error_rate:.4g} "
                    f"CI [{summary.ci_lo:.4g}, {summary.ci_hi:.4g}]")
    agree = intervals_agree(summaries)
    path = config.output or _default_output(f"independence_model{config.model}", config.format)
    if path:
        emit_results(summaries, config.format, path)
    print(f"Intervals overlap: {agree}")
    return EXIT_OK if agree else EXIT_FAILED


def cmd_verify(args) -> int:
    only = [c for c in args.only.split(",") if c] if args.only else None
    results = verify_suite(seed=args.seed if args.seed is not None else DEFAULT_SEED,
                           alpha1_override=args.alpha1_override, trials=args.trials or 1000, only=only)
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'}  {result.name}: {result.detail}")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAILED if failed else EXIT_OK


def _add_run_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="Flat YAML run configuration")
    parser.add_argument("--k1", help="Message nesting factor or 'auto'")
    parser.add_argument("--k2", help="Quantization refinement factor or 'auto'")
    parser.add_argument("--interference", help="Interference descriptor kind[:param], e.g. gaussian:1e12")
    parser.add_argument("--reseed", action=argparse.BooleanOptionalAction, default=None,
                        help="Draw a new interference sequence per trial")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--ideal-hop2", dest="ideal_hop2", action="store_true", default=None)
    parser.add_argument("--noiseless", action="store_true", default=None)
    parser.add_argument("--alpha1", type=float)
    parser.add_argument("--alpha2", type=float)
    parser.add_argument("--list-anchor", dest="list_anchor", choices=["region", "nearest"])
    parser.add_argument("--cancel-interference", dest="cancel_interference",
                        action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--output", help="Result file path")
    parser.add_argument("--format", choices=["csv", "json"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Lattice decode-and-forward relay simulator")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", type=int, choices=[1, 2])
    common.add_argument("--s1", type=float)
    common.add_argument("--s2", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--margin", type=float)
    common.add_argument("--seed", type=int)

    rates = sub.add_parser("rates", parents=[common], help="Closed-form rates and gap")
    rates.add_argument("--grid", action="store_true", help="Evaluate the default SNR grid")
    rates.add_argument("--k1", type=int)
    rates.add_argument("--k2", type=int)
    rates.add_argument("--output")
    rates.set_defaults(func=cmd_rates)

    plan = sub.add_parser("plan", parents=[common], help="Plan (k1, k2) for target SNRs")
    plan.set_defaults(func=cmd_plan)

    simulate = sub.add_parser("simulate", parents=[common], help="Monte-Carlo run of one scheme")
    _add_run_arguments(simulate)
    simulate.set_defaults(func=cmd_simulate)

    independence = sub.add_parser("independence", parents=[common],
                                  help="Same run under several interference sequences")
    _add_run_arguments(independence)
    independence.add_argument("--kinds", default=DEFAULT_INDEPENDENCE_KINDS,
                              help="Comma-separated interference descriptors")
    independence.set_defaults(func=cmd_independence)

    verify = sub.add_parser("verify", help="Run the invariant battery")
    verify.add_argument("--seed", type=int)
    verify.add_argument("--trials", type=int, help="Trials per noiseless exactness run")
    verify.add_argument("--alpha1-override", dest="alpha1_override", type=float)
    verify.add_argument("--only", help="Comma-separated check names")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.func(args)
    except (ConfigurationError, LatticeInputError, CapacityError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except ResultsIOError as e:
        logger.error(str(e))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
