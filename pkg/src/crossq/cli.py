"""Command-line entry points: run, estimators, tabular, gradcheck."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import load_config, load_tabular_config
from .errors import CrossQError
from .estimators import estimator_bias_mc, resolve_spec
from .harness import output_root, run_and_write
from .nn import gradient_check_suite
from .tabular import BUILTIN_MDPS, LearningSchedule, run_tabular


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crossq", description=__doc__)
    parser.add_argument("--version", action="version", version=f"crossq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train an agent from a config file or preset name")
    run_p.add_argument("--config", required=True, help="config path or preset name")
    run_p.add_argument("--seed", type=int, default=None, help="run only this seed")
    run_p.add_argument("--out", default=None, help="output directory root")

    est_p = sub.add_parser("estimators", help="Monte-Carlo estimator bias report (CSV)")
    est_p.add_argument("--spec", required=True, help="built-in spec name or spec file path")
    est_p.add_argument("--trials", type=int, default=100_000)
    est_p.add_argument("--seed", type=int, default=0)
    est_p.add_argument("--n", type=int, default=2, help="samples per action per set")
    est_p.add_argument("--cross-k", type=int, default=3, help="set count for the cross row")

    tab_p = sub.add_parser("tabular", help="tabular convergence traces (CSV)")
    tab_p.add_argument("--config", required=True, help="tabular config path or preset name")

    grad_p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    grad_p.add_argument("--fixtures", type=int, default=20)
    grad_p.add_argument("--seed", type=int, default=2024)
    grad_p.add_argument("--tol", type=float, default=1e-4)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    root = args.out if args.out is not None else output_root(config)
    seeds = [args.seed] if args.seed is not None else list(config.seeds)
    for seed in seeds:
        run_dir = run_and_write(config, seed, root)
        print(f"seed {seed}: wrote {run_dir}")
    return 0


def _cmd_estimators(args: argparse.Namespace) -> int:
    dist = resolve_spec(args.spec)
    true_max = dist.true_max_mean()
    print("kind,K,n_per_action,trials,mean_estimate,std_error,true_max_mean")
    for kind, k in (("single", 1), ("double", 2), ("cross", args.cross_k)):
        mean, se = estimator_bias_mc(dist, kind, k, args.n, args.trials, args.seed)
        print(f"{kind},{k},{args.n},{args.trials},{mean!r},{se!r},{true_max!r}")
    return 0


def _cmd_tabular(args: argparse.Namespace) -> int:
    config = load_tabular_config(args.config)
    builder = BUILTIN_MDPS.get(config.mdp)
    if builder is None:
        raise CrossQError(
            f"unknown tabular.mdp {config.mdp!r}; available: {', '.join(sorted(BUILTIN_MDPS))}"
        )
    mdp = builder(seed=config.mdp_seed) if config.mdp == "noisy6" else builder()
    schedule = LearningSchedule(alpha_exponent=config.alpha_exponent, epsilon=config.epsilon)
    print("step,algo,K,seed,max_norm_error")
    for seed in config.seeds:
        trace = run_tabular(
            mdp, config.algo, config.k, config.steps, schedule, seed, config.trace_points
        )
        for step, err in trace:
            print(f"{step},{config.algo},{config.k},{seed},{err!r}")
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    worst, per_fixture = gradient_check_suite(args.fixtures, args.seed)
    print(f"fixtures: {len(per_fixture)}")
    print(f"max relative error: {worst:.3e}")
    if worst < args.tol:
        print(f"PASS (< {args.tol:g})")
        return 0
    print(f"FAIL (>= {args.tol:g})")
    return 1


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "estimators": _cmd_estimators,
        "tabular": _cmd_tabular,
        "gradcheck": _cmd_gradcheck,
    }
    try:
        return handlers[args.command](args)
    except CrossQError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
