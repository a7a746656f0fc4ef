"""Experiment orchestration: single runs, strategy-permutation sweeps, and
horizon sweeps against the second-best benchmark.

Every run of a sweep gets its own seed derived from (base seed, assignment,
replication), so results are reproducible run-by-run without correlated
streams, and aggregation is a deterministic reduction ordered by run index
no matter how many workers execute the runs.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .accounting import report
from .mechanism import run_mechanism
from .model import GameConfig, ProviderProfile, benchmarks, check_assumptions
from .strategies import StrategyKind, parse_strategy

ALL_STRATEGIES = tuple(StrategyKind)


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep: one entry per provider, either a fixed StrategyKind or
    None meaning 'enumerate all six'."""

    assignment: tuple[Optional[StrategyKind], ...]
    replications: int = 1
    t_values: tuple[int, ...] = ()
    out_dir: Optional[str] = None
    keep_transcripts: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if any(nxt <= prev for prev, nxt in zip(self.t_values, self.t_values[1:])):
            raise ValueError("t_values must be strictly increasing")


@dataclass(frozen=True)
class RunSummary:
    run_index: int
    assignment: tuple[str, ...]
    replication: int
    seed: int
    n_records: int
    winner: int
    validated: bool
    user_total: float
    provider_utility: tuple[float, ...]
    delegations: tuple[int, ...]
    user_from_provider: tuple[float, ...]


@dataclass(frozen=True)
class StrategyAggregate:
    provider: int
    strategy: StrategyKind
    mean_provider_utility: float
    mean_user_utility: float
    mean_delegations: float
    run_count: int


def derive_seed(base_seed: int, assignment: Sequence[str], replication: int) -> int:
    """base seed plus a stable hash of (assignment, replication), mod 2^63."""
    key = "|".join(assignment) + f"#{replication}"
    digest = hashlib.sha256(key.encode()).digest()
    offset = int.from_bytes(digest[:8], "big")
    return (int(base_seed) + offset) % (2**63)


def enumerate_assignments(
    spec_assignment: Sequence[Optional[StrategyKind]],
) -> list[tuple[StrategyKind, ...]]:
    options = [
        ALL_STRATEGIES if kind is None else (kind,) for kind in spec_assignment
    ]
    return list(itertools.product(*options))


def _execute_run(payload) -> RunSummary:
    config, profiles, names, run_index, rep, seed, transcript_path = payload
    kinds = [parse_strategy(n) for n in names]
    transcript = run_mechanism(config, profiles, kinds, seed=seed)
    if transcript_path is not None:
        transcript.export(transcript_path)
    rep_report = report(transcript, profiles)
    return RunSummary(
        run_index=run_index,
        assignment=tuple(names),
        replication=rep,
        seed=seed,
        n_records=len(transcript),
        winner=transcript.winner.i_star,
        validated=transcript.validated,
        user_total=rep_report.user_total,
        provider_utility=tuple(r.provider_utility for r in rep_report.per_provider),
        delegations=tuple(r.delegation_count for r in rep_report.per_provider),
        user_from_provider=tuple(r.user_utility_from_provider for r in rep_report.per_provider),
    )


def _run_all(config, profiles, jobs, workers: int) -> list[RunSummary]:
    if workers <= 1:
        results = [_execute_run(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute_run, jobs, chunksize=4))
    return sorted(results, key=lambda r: r.run_index)


def _build_jobs(config, profiles, assignments, spec: SweepSpec):
    out = Path(spec.out_dir) if spec.out_dir else None
    jobs = []
    run_index = 0
    for names_kinds in assignments:
        names = tuple(k.value for k in names_kinds)
        for rep in range(spec.replications):
            seed = derive_seed(config.seed, names, rep)
            tpath = None
            if spec.keep_transcripts and out is not None:
                tpath = out / "transcripts" / f"run{run_index:05d}.log"
            jobs.append((config, profiles, names, run_index, rep, seed, tpath))
            run_index += 1
    return jobs


def aggregate_by_strategy(
    runs: Sequence[RunSummary], provider: int
) -> list[StrategyAggregate]:
    """Mean outcome for one provider, bucketed by the strategy it played."""
    rows = []
    for kind in ALL_STRATEGIES:
        bucket = [r for r in runs if r.assignment[provider - 1] == kind.value]
        if not bucket:
            continue
        rows.append(
            StrategyAggregate(
                provider=provider,
                strategy=kind,
                mean_provider_utility=float(
                    np.mean([r.provider_utility[provider - 1] for r in bucket])
                ),
                mean_user_utility=float(
                    np.mean([r.user_from_provider[provider - 1] for r in bucket])
                ),
                mean_delegations=float(
                    np.mean([r.delegations[provider - 1] for r in bucket])
                ),
                run_count=len(bucket),
            )
        )
    return rows


@dataclass(frozen=True)
class SweepResult:
    runs: tuple[RunSummary, ...]
    tables: dict  # provider id -> list[StrategyAggregate]
    assumptions_hold: bool


def run_permutation_sweep(
    config: GameConfig, profiles: Sequence[ProviderProfile], spec: SweepSpec
) -> SweepResult:
    """Run the full cross-product of strategies (6^K when nothing is pinned)
    times `replications`, and aggregate per focal provider."""
    assumptions_hold = all(
        check_assumptions(p, config.gamma).holds for p in profiles
    )
    assignments = enumerate_assignments(spec.assignment)
    jobs = _build_jobs(config, profiles, assignments, spec)
    runs = _run_all(config, profiles, jobs, spec.workers)
    tables = {
        p.id: aggregate_by_strategy(runs, p.id)
        for p in profiles
        if spec.assignment[p.id - 1] is None
    }
    result = SweepResult(
        runs=tuple(runs), tables=tables, assumptions_hold=assumptions_hold
    )
    if spec.out_dir:
        _write_sweep_outputs(config, profiles, spec, result)
    return result


def run_conditional_sweep(
    config: GameConfig,
    profiles: Sequence[ProviderProfile],
    spec: SweepSpec,
    fixed: dict[int, StrategyKind],
) -> SweepResult:
    """Permutation sweep with some providers pinned to a fixed strategy;
    aggregates cover the free providers only."""
    assignment = tuple(
        fixed.get(p.id, spec.assignment[p.id - 1]) for p in profiles
    )
    pinned_spec = SweepSpec(
        assignment=assignment,
        replications=spec.replications,
        t_values=spec.t_values,
        out_dir=spec.out_dir,
        keep_transcripts=spec.keep_transcripts,
        workers=spec.workers,
    )
    return run_permutation_sweep(config, profiles, pinned_spec)


@dataclass(frozen=True)
class TSweepRow:
    T: int
    user_utility_mean: float
    user_utility_stddev: float
    u_sb: float


def run_t_sweep(
    config: GameConfig,
    profiles: Sequence[ProviderProfile],
    t_values: Sequence[int],
    replications: int = 1,
    out_dir: Optional[str] = None,
    workers: int = 1,
) -> list[TSweepRow]:
    """All-providers-ours runs across a grid of horizons, against u_SB(T)."""
    rows = []
    names = tuple(StrategyKind.OURS.value for _ in profiles)
    for T in t_values:
        cfg = replace(config, T=int(T))
        jobs = []
        for rep in range(replications):
            seed = derive_seed(config.seed, names + (f"T={T}",), rep)
            jobs.append((cfg, profiles, names, rep, rep, seed, None))
        runs = _run_all(cfg, profiles, jobs, workers)
        totals = [r.user_total for r in runs]
        bench = benchmarks(profiles, int(T))
        rows.append(
            TSweepRow(
                T=int(T),
                user_utility_mean=float(np.mean(totals)),
                user_utility_stddev=float(np.std(totals, ddof=1)) if len(totals) > 1 else 0.0,
                u_sb=bench.u_sb,
            )
        )
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["T,user_utility_mean,user_utility_stddev,u_SB"]
        for r in rows:
            lines.append(
                f"{r.T},{r.user_utility_mean!r},{r.user_utility_stddev!r},{r.u_sb!r}"
            )
        (out / "tsweep.csv").write_text("\n".join(lines) + "\n")
    return rows


def _write_sweep_outputs(config, profiles, spec: SweepSpec, result: SweepResult):
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for provider_id, table in result.tables.items():
        lines = ["strategy,mean_provider_utility,mean_user_utility,mean_delegations,run_count"]
        for row in table:
            lines.append(
                f"{row.strategy.value},{row.mean_provider_utility!r},"
                f"{row.mean_user_utility!r},{row.mean_delegations!r},{row.run_count}"
            )
        (out / f"summary_provider{provider_id}.csv").write_text("\n".join(lines) + "\n")

    K = len(profiles)
    header = ["run_index", "replication", "seed", "assignment", "winner", "validated",
              "n_records", "user_total"]
    for i in range(1, K + 1):
        header += [f"p{i}_utility", f"p{i}_delegations", f"p{i}_user_utility"]
    lines = [",".join(header)]
    for r in result.runs:
        cells = [str(r.run_index), str(r.replication), str(r.seed),
                 "|".join(r.assignment), str(r.winner), str(r.validated).lower(),
                 str(r.n_records), repr(r.user_total)]
        for i in range(K):
            cells += [repr(r.provider_utility[i]), str(r.delegations[i]),
                      repr(r.user_from_provider[i])]
        lines.append(",".join(cells))
    (out / "runs.csv").write_text("\n".join(lines) + "\n")

    meta = {
        "config": asdict(config),
        "spec": {
            "assignment": [a.value if a is not None else "all" for a in spec.assignment],
            "replications": spec.replications,
            "keep_transcripts": spec.keep_transcripts,
            "workers": spec.workers,
        },
        "assumptions_hold": result.assumptions_hold,
        "seeds": [r.seed for r in result.runs],
        "versions": {
            "secondbest": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def linear_fit_r_squared(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Coefficient of determination of the least-squares line through (xs, ys)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 2:
        raise ValueError("need at least 2 points")
    sxx = float(np.sum((x - x.mean()) ** 2))
    syy = float(np.sum((y - y.mean()) ** 2))
    sxy = float(np.sum((x - x.mean()) * (y - y.mean())))
    if sxx == 0.0 or syy == 0.0:
        return 1.0
    return (sxy * sxy) / (sxx * syy)
