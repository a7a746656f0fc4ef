"""Independent verification machinery.

The dominance oracle replays the exact mechanism code path once per point
of an exhaustive per-phase strategy grid, with the same seed set for every
point, and measures how far the named `ours` strategy sits from the
empirical best response. The failure-rate estimator replays seeded runs to
bound how often a well-behaved winner trips the running-average check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .accounting import provider_utility
from .harness import derive_seed
from .mechanism import run_mechanism
from .model import ConfigError, GameConfig, ProviderProfile
from .strategies import (
    ChoiceKind,
    PhaseChoice,
    StrategyKind,
    StrategySpec,
    strategy_spec,
)

_NAMED_EXPLOITATION = (
    PhaseChoice(ChoiceKind.HONEST),
    PhaseChoice(ChoiceKind.WORST_MODEL),
    PhaseChoice(ChoiceKind.WORST_LENGTH),
    PhaseChoice(ChoiceKind.WORST),
    PhaseChoice(ChoiceKind.SECOND_BEST),
    PhaseChoice(ChoiceKind.SECOND_BEST_HONEST_LENGTH),
)
_BLIND_CHOICES = (PhaseChoice(ChoiceKind.WORST), PhaseChoice(ChoiceKind.HONEST))


@dataclass(frozen=True)
class StrategyGrid:
    """Per-phase candidate sets whose cross product is the search space."""

    exploration: tuple[PhaseChoice, ...]
    exploitation: tuple[PhaseChoice, ...]
    blind_trust_1: tuple[PhaseChoice, ...] = _BLIND_CHOICES
    blind_trust_2: tuple[PhaseChoice, ...] = _BLIND_CHOICES
    cap: int = 10_000

    @property
    def size(self) -> int:
        return (
            len(self.exploration)
            * len(self.exploitation)
            * len(self.blind_trust_1)
            * len(self.blind_trust_2)
        )

    def specs(self) -> list[StrategySpec]:
        if self.size > self.cap:
            raise ConfigError(f"grid size {self.size} exceeds cap {self.cap}")
        return [
            StrategySpec(e, x, b1, b2)
            for e in self.exploration
            for x in self.exploitation
            for b1 in self.blind_trust_1
            for b2 in self.blind_trust_2
        ]


def default_grid(profile: ProviderProfile, n_report_lengths: int = 5, cap: int = 10_000) -> StrategyGrid:
    """Named per-phase choices plus fixed (variant, report-length) points,
    with report lengths evenly spread up to L."""
    lengths = sorted(
        {int(round(x)) for x in np.linspace(1, profile.L, n_report_lengths)}
    )
    fixed = tuple(
        PhaseChoice(ChoiceKind.FIXED, variant_index=m, report_length=l)
        for m in range(len(profile.variants))
        for l in lengths
    )
    return StrategyGrid(
        exploration=(PhaseChoice(ChoiceKind.HONEST), PhaseChoice(ChoiceKind.WORST)),
        exploitation=_NAMED_EXPLOITATION + fixed,
        cap=cap,
    )


@dataclass(frozen=True)
class AssignmentMargin:
    opponents: tuple[str, ...]
    seeds: tuple[int, ...]
    named_utility: float
    grid_max_utility: float
    margin: float
    best_point: str


@dataclass(frozen=True)
class DominanceReport:
    """Empirical distance of the named strategy from the grid best response.

    `margin` is the worst (largest) gap found over the sampled opponent
    assignments; `bound_value` is C * T^(1-epsilon) * ln T for the given C.
    """

    focal: int
    named: StrategyKind
    T: int
    epsilon: float
    per_assignment: tuple[AssignmentMargin, ...]
    margin: float
    bound_constant: float
    bound_value: float

    @property
    def within_bound(self) -> bool:
        return self.margin <= self.bound_value

    def to_dict(self) -> dict:
        return {
            "focal": self.focal,
            "named": self.named.value,
            "T": self.T,
            "epsilon": self.epsilon,
            "margin": self.margin,
            "bound_constant": self.bound_constant,
            "bound_value": self.bound_value,
            "within_bound": self.within_bound,
            "per_assignment": [
                {
                    "opponents": list(a.opponents),
                    "seeds": list(a.seeds),
                    "named_utility": a.named_utility,
                    "grid_max_utility": a.grid_max_utility,
                    "margin": a.margin,
                    "best_point": a.best_point,
                }
                for a in self.per_assignment
            ],
        }


def dominance_bound(T: int, epsilon: float, constant: float) -> float:
    return constant * T ** (1.0 - epsilon) * math.log(T)


def _mean_focal_utility(config, profiles, assignment, focal, seeds) -> float:
    vals = []
    for seed in seeds:
        transcript = run_mechanism(config, profiles, assignment, seed=seed)
        vals.append(provider_utility(transcript, focal))
    return float(np.mean(vals))


def best_response_search(
    config: GameConfig,
    profiles: Sequence[ProviderProfile],
    focal: int,
    opponents: Sequence[Sequence[StrategyKind]],
    grid: StrategyGrid,
    named: StrategyKind = StrategyKind.OURS,
    n_seeds: int = 2,
    bound_constant: float = 1.0,
) -> DominanceReport:
    """Exhaustive grid search for the focal provider against each fixed
    opponent assignment, using an identical seed set for every grid point.

    `opponents` is a list of assignments, each giving one StrategyKind per
    non-focal provider in id order. The reported margin is the worst one.
    """
    if not 1 <= focal <= len(profiles):
        raise ConfigError(f"focal provider {focal} out of range")
    if not opponents:
        raise ConfigError("need at least one opponent assignment")
    specs = grid.specs()
    named_spec = strategy_spec(named)
    results = []
    for opp in opponents:
        opp = tuple(opp)
        if len(opp) != len(profiles) - 1:
            raise ConfigError(
                f"opponent assignment needs {len(profiles) - 1} entries, got {len(opp)}"
            )
        opp_names = tuple(k.value for k in opp)
        seeds = tuple(
            derive_seed(config.seed, ("oracle",) + opp_names, r) for r in range(n_seeds)
        )

        def full_assignment(focal_spec):
            merged = list(opp)
            merged.insert(focal - 1, focal_spec)
            return merged

        named_utility = _mean_focal_utility(
            config, profiles, full_assignment(named_spec), focal, seeds
        )
        grid_max = -math.inf
        best_point = ""
        for spec in specs:
            value = _mean_focal_utility(
                config, profiles, full_assignment(spec), focal, seeds
            )
            if value > grid_max:
                grid_max = value
                best_point = spec.describe()
        results.append(
            AssignmentMargin(
                opponents=opp_names,
                seeds=seeds,
                named_utility=named_utility,
                grid_max_utility=grid_max,
                margin=grid_max - named_utility,
                best_point=best_point,
            )
        )
    worst = max(r.margin for r in results)
    return DominanceReport(
        focal=focal,
        named=named,
        T=config.T,
        epsilon=config.epsilon,
        per_assignment=tuple(results),
        margin=worst,
        bound_constant=bound_constant,
        bound_value=dominance_bound(config.T, config.epsilon, bound_constant),
    )


def validated_failure_rate(
    config: GameConfig,
    profiles: Sequence[ProviderProfile],
    runs: int,
    assignment: Optional[Sequence[StrategyKind]] = None,
) -> tuple[float, tuple[float, float]]:
    """Fraction of seeded runs ending with validated=false, with a 95%
    Wilson score interval. Defaults to the all-honest assignment."""
    if runs < 30:
        raise ConfigError(f"insufficient replications: {runs} < 30")
    if assignment is None:
        assignment = [StrategyKind.HONEST] * len(profiles)
    failures = 0
    for r in range(runs):
        seed = derive_seed(config.seed, ("failure-rate",), r)
        transcript = run_mechanism(config, profiles, assignment, seed=seed)
        failures += 0 if transcript.validated else 1
    rate = failures / runs
    return rate, _wilson_interval(failures, runs)


def _wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    return (max(0.0, center - half), min(1.0, center + half))
