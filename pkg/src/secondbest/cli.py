"""Command-line interface.

Subcommands: run (single game), sweep (strategy permutations), tsweep
(horizon sweep), check (lineup assumption report), bench (benchmark
utilities), oracle (dominance search report). Exit codes: 0 success,
2 configuration error, 3 failed assumption check under `check --strict`,
64 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .accounting import report
from .harness import SweepSpec, run_permutation_sweep, run_t_sweep
from .mechanism import run_mechanism
from .model import ConfigError, benchmarks, check_assumptions
from .config import load_config
from .oracle import best_response_search, default_grid, validated_failure_rate
from .strategies import StrategyKind, parse_strategy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTIONS = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(sub):
    sub.add_argument("--config", required=True, help="path to a .json or .toml game config")
    sub.add_argument("--seed", type=int, default=None, help="override the configured seed")
    sub.add_argument("--T", type=int, default=None, help="override the configured query budget")
    sub.add_argument("--epsilon", type=float, default=None, help="override the configured epsilon")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="secondbest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[], help="run one game and print its utility report")
    _add_common(p_run)
    p_run.add_argument(
        "--strategies",
        default="ours",
        help="comma-separated strategy per provider, or one name for all "
        "(ours|honest|dishonest-model|dishonest-length|dishonest-all|ours-honest-length)",
    )
    p_run.add_argument("--out", default=None, help="directory for report.json")
    p_run.add_argument("--transcript", default=None, help="write the full transcript here")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="full strategy-permutation sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--replications", type=int, default=5)
    p_sweep.add_argument("--out", default=None, help="directory for summary CSVs")
    p_sweep.add_argument("--keep-transcripts", action="store_true")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument(
        "--fix",
        action="append",
        default=[],
        metavar="ID=STRATEGY",
        help="pin a provider to one strategy (repeatable), e.g. --fix 1=ours",
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_tsweep = sub.add_parser("tsweep", help="all-ours runs across a grid of T values")
    _add_common(p_tsweep)
    p_tsweep.add_argument("--T-values", required=True, help="comma-separated T grid, e.g. 100000,200000")
    p_tsweep.add_argument("--replications", type=int, default=5)
    p_tsweep.add_argument("--out", default=None)
    p_tsweep.add_argument("--workers", type=int, default=1)
    p_tsweep.set_defaults(func=cmd_tsweep)

    p_check = sub.add_parser("check", help="report whether the lineup assumptions hold")
    _add_common(p_check)
    p_check.add_argument("--strict", action="store_true", help="exit 3 if any assumption fails")
    p_check.set_defaults(func=cmd_check)

    p_bench = sub.add_parser("bench", help="print first-best and second-best user utility")
    _add_common(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_oracle = sub.add_parser("oracle", help="brute-force dominance search, JSON report")
    _add_common(p_oracle)
    p_oracle.add_argument("--focal", type=int, default=1)
    p_oracle.add_argument(
        "--opponents",
        action="append",
        default=[],
        help="opponent assignment: one strategy name for all, or a comma list "
        "per non-focal provider in id order (repeatable)",
    )
    p_oracle.add_argument("--report-lengths", type=int, default=5)
    p_oracle.add_argument("--grid-cap", type=int, default=10_000)
    p_oracle.add_argument("--n-seeds", type=int, default=2)
    p_oracle.add_argument("--bound-constant", type=float, default=1.0)
    p_oracle.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    p_oracle.set_defaults(func=cmd_oracle)

    p_rate = sub.add_parser("failure-rate", help="estimate the validated=false rate over seeded runs")
    _add_common(p_rate)
    p_rate.add_argument("--runs", type=int, default=200)
    p_rate.add_argument("--strategies", default="honest")
    p_rate.set_defaults(func=cmd_failure_rate)

    return parser


def _load(args):
    config, profiles = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.T is not None:
        overrides["T"] = args.T
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config, profiles


def _parse_assignment(text: str, K: int) -> list[StrategyKind]:
    names = [n.strip() for n in text.split(",") if n.strip()]
    if len(names) == 1:
        names = names * K
    if len(names) != K:
        raise ConfigError(f"expected 1 or {K} strategy names, got {len(names)}")
    return [parse_strategy(n) for n in names]


def cmd_run(args) -> int:
    config, profiles = _load(args)
    assignment = _parse_assignment(args.strategies, config.K)
    transcript = run_mechanism(config, profiles, assignment)
    rep = report(transcript, profiles)
    print(f"records={len(transcript)} (budget T={config.T})")
    print(
        f"B={transcript.params.B} M={transcript.params.M:.6g} T_R={transcript.params.T_R} "
        f"winner={transcript.winner.i_star} u_bar_prime={transcript.winner.u_bar_prime:.6g} "
        f"validated={transcript.validated}"
    )
    print(f"user_utility={rep.user_total:.6g} (u_SB={rep.u_sb:.6g}, gap={rep.gap_to_sb:.6g})")
    for row in rep.per_provider:
        print(
            f"provider {row.provider}: utility={row.provider_utility:.6g} "
            f"delegations={row.delegation_count} user_utility={row.user_utility_from_provider:.6g}"
        )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(rep.to_json() + "\n")
    if args.transcript:
        transcript.export(args.transcript)
        print(f"transcript written to {args.transcript}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config, profiles = _load(args)
    assignment: list = [None] * config.K
    for pin in args.fix:
        try:
            pid_text, name = pin.split("=", 1)
            pid = int(pid_text)
        except ValueError:
            raise ConfigError(f"bad --fix value {pin!r}, expected ID=STRATEGY") from None
        if not 1 <= pid <= config.K:
            raise ConfigError(f"--fix provider {pid} out of range 1..{config.K}")
        assignment[pid - 1] = parse_strategy(name)
    spec = SweepSpec(
        assignment=tuple(assignment),
        replications=args.replications,
        out_dir=args.out,
        keep_transcripts=args.keep_transcripts,
        workers=args.workers,
    )
    result = run_permutation_sweep(config, profiles, spec)
    if not result.assumptions_hold:
        print("warning: lineup assumptions do not hold; results are flagged", file=sys.stderr)
    print(f"runs={len(result.runs)}")
    for provider_id, table in sorted(result.tables.items()):
        print(f"provider {provider_id}:")
        for row in table:
            print(
                f"  {row.strategy.value:<20} provider_utility={row.mean_provider_utility:.6g} "
                f"user_utility={row.mean_user_utility:.6g} "
                f"delegations={row.mean_delegations:.6g} runs={row.run_count}"
            )
    if args.out:
        print(f"tables written to {args.out}")
    return EXIT_OK


def cmd_tsweep(args) -> int:
    config, profiles = _load(args)
    try:
        t_values = [int(float(v)) for v in args.T_values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --T-values {args.T_values!r}") from None
    rows = run_t_sweep(
        config, profiles, t_values, replications=args.replications,
        out_dir=args.out, workers=args.workers,
    )
    print("T,user_utility_mean,user_utility_stddev,u_SB")
    for r in rows:
        print(f"{r.T},{r.user_utility_mean:.6g},{r.user_utility_stddev:.6g},{r.u_sb:.6g}")
    return EXIT_OK


def cmd_check(args) -> int:
    config, profiles = _load(args)
    any_violation = False
    for profile in profiles:
        rep = check_assumptions(profile, config.gamma)
        if rep.holds:
            print(f"provider {profile.id}: assumptions hold")
        else:
            any_violation = True
            print(f"provider {profile.id}: {len(rep.violations)} violation(s)")
            for v in rep.violations:
                print(
                    f"  condition {v.condition} fails for ({v.pair[0]}, {v.pair[1]}): "
                    f"margin {v.margin:.6g}"
                )
    if any_violation and args.strict:
        return EXIT_ASSUMPTIONS
    return EXIT_OK


def cmd_bench(args) -> int:
    config, profiles = _load(args)
    bench = benchmarks(profiles, config.T)
    print(f"u_FB={bench.u_fb!r}")
    print(f"u_SB={bench.u_sb!r}")
    print(f"best_provider={bench.best_index}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    config, profiles = _load(args)
    n_opponents = config.K - 1
    assignments = []
    for text in args.opponents or ["honest"]:
        names = [n.strip() for n in text.split(",") if n.strip()]
        if len(names) == 1:
            names = names * n_opponents
        if len(names) != n_opponents:
            raise ConfigError(
                f"opponent assignment needs 1 or {n_opponents} names, got {len(names)}"
            )
        assignments.append(tuple(parse_strategy(n) for n in names))
    focal_profile = profiles[args.focal - 1] if 1 <= args.focal <= config.K else None
    if focal_profile is None:
        raise ConfigError(f"--focal {args.focal} out of range 1..{config.K}")
    grid = default_grid(focal_profile, n_report_lengths=args.report_lengths, cap=args.grid_cap)
    dom = best_response_search(
        config, profiles, args.focal, assignments, grid,
        n_seeds=args.n_seeds, bound_constant=args.bound_constant,
    )
    text = json.dumps(dom.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_failure_rate(args) -> int:
    config, profiles = _load(args)
    assignment = _parse_assignment(args.strategies, config.K)
    rate, (lo, hi) = validated_failure_rate(config, profiles, args.runs, assignment)
    print(f"failure_rate={rate:.6g} ci95=[{lo:.6g}, {hi:.6g}] runs={args.runs}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
