"""Provider-side decision layer.

Six named strategies plus a generic per-phase choice table. Every strategy
reduces, per phase, to a pair (which variant to serve, how to report the
output length); reporting can only inflate, never shrink. The winner's
exploitation behaviour under the `ours` strategies comes from a constrained
optimizer that extracts the largest billable report while still delivering
the runner-up utility level it was told to match.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ConfigError, OutcomeSample, ProviderProfile, expected_stats


class Phase(enum.Enum):
    EXPLORATION = 0
    EXPLOITATION = 1
    BLIND_TRUST_1 = 2
    BLIND_TRUST_2 = 3

    @property
    def label(self) -> str:
        return self.name.lower()


PHASE_BY_CODE = {p.value: p for p in Phase}


class StrategyKind(enum.Enum):
    OURS = "ours"
    HONEST = "honest"
    DISHONEST_MODEL = "dishonest-model"
    DISHONEST_LENGTH = "dishonest-length"
    DISHONEST_ALL = "dishonest-all"
    OURS_HONEST_LENGTH = "ours-honest-length"


def parse_strategy(name: str) -> StrategyKind:
    try:
        return StrategyKind(name)
    except ValueError:
        valid = ", ".join(k.value for k in StrategyKind)
        raise ConfigError(f"unknown strategy {name!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class Action:
    """One delegation's choice: which variant served, what length was billed."""

    variant_index: int
    reported_length: int


@dataclass(frozen=True)
class Observation:
    """What a provider sees for one query before reporting."""

    phase: Phase
    query_index_in_phase: int
    generated: OutcomeSample
    informed_u_bar_prime: Optional[float] = None


@dataclass(frozen=True)
class SecondBestPlan:
    """Exploitation-phase blueprint: serve `chosen_variant`, inflate reports
    up to `target_report_length` (a real; reports use its floor)."""

    chosen_variant: Optional[int]
    target_report_length: Optional[float]
    feasible: bool


class ChoiceKind(enum.Enum):
    HONEST = "honest"  # truthful variant, truthful report
    WORST = "worst"  # cheapest variant, report L
    WORST_MODEL = "worst-model"  # cheapest variant, truthful report
    WORST_LENGTH = "worst-length"  # truthful variant, report L
    SECOND_BEST = "second-best"  # plan variant, inflate to plan target
    SECOND_BEST_HONEST_LENGTH = "second-best-honest-length"  # plan variant, truthful
    FIXED = "fixed"  # explicit variant + inflate-to-length (search grids)


@dataclass(frozen=True)
class PhaseChoice:
    kind: ChoiceKind
    variant_index: Optional[int] = None
    report_length: Optional[int] = None

    def describe(self) -> str:
        if self.kind is ChoiceKind.FIXED:
            return f"fixed(variant={self.variant_index},report={self.report_length})"
        return self.kind.value

    @property
    def needs_plan(self) -> bool:
        return self.kind in (ChoiceKind.SECOND_BEST, ChoiceKind.SECOND_BEST_HONEST_LENGTH)


@dataclass(frozen=True)
class PhasePolicy:
    """Resolved per-phase behaviour: serve one variant; report truthfully when
    `inflate_to` is None, else report max(inflate_to, generated length)."""

    variant_index: int
    inflate_to: Optional[int]

    def reported_length(self, gen_length: int) -> int:
        if self.inflate_to is None:
            return gen_length
        return max(self.inflate_to, gen_length)


@dataclass(frozen=True)
class StrategySpec:
    """A full strategy as one choice per phase."""

    exploration: PhaseChoice
    exploitation: PhaseChoice
    blind_trust_1: PhaseChoice
    blind_trust_2: PhaseChoice

    def choice(self, phase: Phase) -> PhaseChoice:
        return {
            Phase.EXPLORATION: self.exploration,
            Phase.EXPLOITATION: self.exploitation,
            Phase.BLIND_TRUST_1: self.blind_trust_1,
            Phase.BLIND_TRUST_2: self.blind_trust_2,
        }[phase]

    def describe(self) -> str:
        return "/".join(
            c.describe()
            for c in (self.exploration, self.exploitation, self.blind_trust_1, self.blind_trust_2)
        )


_HONEST = PhaseChoice(ChoiceKind.HONEST)
_WORST = PhaseChoice(ChoiceKind.WORST)

_SPEC_TABLE = {
    StrategyKind.OURS: StrategySpec(
        _HONEST, PhaseChoice(ChoiceKind.SECOND_BEST), _WORST, _WORST
    ),
    StrategyKind.HONEST: StrategySpec(_HONEST, _HONEST, _HONEST, _HONEST),
    StrategyKind.DISHONEST_MODEL: StrategySpec(
        _HONEST, PhaseChoice(ChoiceKind.WORST_MODEL), _WORST, _WORST
    ),
    StrategyKind.DISHONEST_LENGTH: StrategySpec(
        _HONEST, PhaseChoice(ChoiceKind.WORST_LENGTH), _WORST, _WORST
    ),
    StrategyKind.DISHONEST_ALL: StrategySpec(_WORST, _WORST, _WORST, _WORST),
    StrategyKind.OURS_HONEST_LENGTH: StrategySpec(
        _HONEST, PhaseChoice(ChoiceKind.SECOND_BEST_HONEST_LENGTH), _WORST, _WORST
    ),
}


def strategy_spec(kind: StrategyKind) -> StrategySpec:
    return _SPEC_TABLE[kind]


def as_strategy_spec(strategy) -> StrategySpec:
    if isinstance(strategy, StrategySpec):
        return strategy
    if isinstance(strategy, StrategyKind):
        return strategy_spec(strategy)
    if isinstance(strategy, str):
        return strategy_spec(parse_strategy(strategy))
    raise TypeError(f"not a strategy: {strategy!r}")


def resolve_policy(
    choice: PhaseChoice,
    profile: ProviderProfile,
    plan: Optional[SecondBestPlan] = None,
) -> PhasePolicy:
    """Turn a phase choice into a concrete (variant, report) policy.

    An infeasible plan degrades to the all-out deviation: serve the cheapest
    variant and bill the maximum length.
    """
    kind = choice.kind
    if kind is ChoiceKind.HONEST:
        return PhasePolicy(profile.truthful_index, None)
    if kind is ChoiceKind.WORST:
        return PhasePolicy(profile.cheapest_index, profile.L)
    if kind is ChoiceKind.WORST_MODEL:
        return PhasePolicy(profile.cheapest_index, None)
    if kind is ChoiceKind.WORST_LENGTH:
        return PhasePolicy(profile.truthful_index, profile.L)
    if kind is ChoiceKind.FIXED:
        if choice.variant_index is None or choice.report_length is None:
            raise ConfigError("fixed choice needs variant_index and report_length")
        return PhasePolicy(choice.variant_index, min(choice.report_length, profile.L))
    if plan is None:
        raise ConfigError(f"{kind.value} choice requires a second-best plan")
    if not plan.feasible:
        fallback = infeasible_fallback(profile)
        return PhasePolicy(fallback.variant_index, fallback.reported_length)
    if kind is ChoiceKind.SECOND_BEST:
        return PhasePolicy(plan.chosen_variant, math.floor(plan.target_report_length))
    if kind is ChoiceKind.SECOND_BEST_HONEST_LENGTH:
        return PhasePolicy(plan.chosen_variant, None)
    raise AssertionError(f"unhandled choice kind {kind}")


def decide(
    kind: StrategyKind,
    profile: ProviderProfile,
    obs: Observation,
    plan: Optional[SecondBestPlan] = None,
) -> Action:
    """Single-query decision of a named strategy, given the generated outcome."""
    choice = strategy_spec(kind).choice(obs.phase)
    if choice.needs_plan and obs.phase is Phase.EXPLOITATION and plan is None:
        raise ConfigError(f"strategy {kind.value} needs a plan during exploitation")
    policy = resolve_policy(choice, profile, plan)
    return Action(policy.variant_index, policy.reported_length(obs.generated.gen_length))


def second_best_plan(
    profile: ProviderProfile, u_bar_prime: float, honest_length: bool = False
) -> SecondBestPlan:
    """Best billable response subject to delivering at least `u_bar_prime`.

    Enumerates variants; a variant with mean reward h and mean length g is
    feasible when some report length l in [g, L] keeps the expected user
    utility h - p*l at or above the floor. The report is g itself under
    honest-length play, otherwise the largest admissible length, and the
    winner maximizes (p - c) * l, ties going to the cheaper variant.
    Infeasibility is a value here, not an error.
    """
    p = profile.price_per_token
    best: Optional[tuple[float, int, float]] = None  # (objective, index, l)
    for m, variant in enumerate(profile.variants):
        h, g = expected_stats(variant)
        l_cap = min(float(profile.L), (h - u_bar_prime) / p)
        # One-ulp guard: division/multiplication round-off must never let the
        # report break the utility floor it was solved from.
        while l_cap > 0 and h - p * l_cap < u_bar_prime:
            l_cap = np.nextafter(l_cap, -np.inf)
        if l_cap < g:
            continue
        l = g if honest_length else l_cap
        objective = (p - variant.cost_per_token) * l
        if best is None or objective > best[0]:
            best = (objective, m, l)
    if best is None:
        return SecondBestPlan(chosen_variant=None, target_report_length=None, feasible=False)
    _, m, l = best
    return SecondBestPlan(chosen_variant=m, target_report_length=l, feasible=True)


def infeasible_fallback(profile: ProviderProfile) -> Action:
    """Deviation played when no variant can deliver the required utility:
    cheapest variant, maximum billable length, for every remaining query."""
    return Action(profile.cheapest_index, profile.L)
