"""Four-phase delegation mechanism.

One run walks the full protocol: sample every provider for B queries
(exploration), pick the best observed utility and hold its provider to the
runner-up level for T_R queries under a running-average check
(exploitation), then pay out the two unconditional blind-trust phases that
make early honesty worthwhile. The run produces an append-only transcript,
the single source of truth for all utility accounting.

Phases are simulated in vectorized blocks: a provider's behaviour within a
phase is one (variant, report) policy, so a block reduces to array draws
from the variant's outcome bank.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import ConfigError, GameConfig, ProviderProfile
from .strategies import (
    ChoiceKind,
    Phase,
    PhasePolicy,
    SecondBestPlan,
    StrategySpec,
    as_strategy_spec,
    resolve_policy,
    second_best_plan,
)


class BudgetError(ConfigError):
    """The requested (T, epsilon, K) leaves no room for the exploitation phase."""


@dataclass(frozen=True)
class MechanismParams:
    """Derived run constants: batch size B, relaxation M, and (once the
    winner is known) the exploitation length T_R and the slack subtracted
    from the running-average threshold."""

    B: int
    M: float
    T_R: Optional[int] = None
    validated_threshold_offset: Optional[float] = None


def derive_params(T: int, K: int, epsilon: float) -> MechanismParams:
    """B = floor(T^(2*epsilon)) clamped to >= 1, M = T^(-epsilon) * ln(K*T)."""
    B = max(1, math.floor(T ** (2.0 * epsilon)))
    M = T ** (-epsilon) * math.log(K * T)
    return MechanismParams(B=B, M=M)


@dataclass(frozen=True)
class ExplorationStats:
    """Per-provider exploration aggregates, each a mean over exactly B records.

    u_bar uses the reported length (what the user observes and pays for);
    delta is the blind-trust credit 2*v_bar/(p*L) - 2*l_bar_reported/L.
    """

    B: int
    v_bar: np.ndarray
    l_bar_true: np.ndarray
    l_bar_reported: np.ndarray
    u_bar: np.ndarray
    delta: np.ndarray


@dataclass(frozen=True)
class WinnerSelection:
    i_star: int  # 1-based provider id
    u_bar_prime: float


@dataclass(frozen=True)
class QueryRecord:
    t: int
    phase: Phase
    provider: int
    variant: int
    cost_per_token: float
    true_length: int
    reported_length: int
    reward: float
    payment: float


class _Blocks:
    """Column accumulator for transcript records."""

    def __init__(self):
        self.phase = []
        self.provider = []
        self.variant = []
        self.cost = []
        self.true_len = []
        self.reported_len = []
        self.reward = []
        self.payment = []

    def append(self, profile: ProviderProfile, policy: PhasePolicy, phase: Phase,
               reward: np.ndarray, true_len: np.ndarray, reported: np.ndarray):
        n = reward.size
        if n == 0:
            return
        variant = profile.variants[policy.variant_index]
        self.phase.append(np.full(n, phase.value, dtype=np.int8))
        self.provider.append(np.full(n, profile.id, dtype=np.int32))
        self.variant.append(np.full(n, policy.variant_index, dtype=np.int32))
        self.cost.append(np.full(n, variant.cost_per_token, dtype=np.float64))
        self.true_len.append(true_len.astype(np.int64, copy=False))
        self.reported_len.append(reported.astype(np.int64, copy=False))
        self.reward.append(reward)
        self.payment.append(profile.price_per_token * reported)

    def _cat(self, parts, dtype):
        if not parts:
            return np.empty(0, dtype=dtype)
        return np.concatenate(parts)


class Transcript:
    """Append-only ledger of one mechanism run, stored column-wise."""

    def __init__(self, blocks: _Blocks, params: MechanismParams,
                 stats: ExplorationStats, winner: WinnerSelection, validated: bool,
                 T: int):
        self.phase_code = blocks._cat(blocks.phase, np.int8)
        self.provider = blocks._cat(blocks.provider, np.int32)
        self.variant = blocks._cat(blocks.variant, np.int32)
        self.cost_per_token = blocks._cat(blocks.cost, np.float64)
        self.true_length = blocks._cat(blocks.true_len, np.int64)
        self.reported_length = blocks._cat(blocks.reported_len, np.int64)
        self.reward = blocks._cat(blocks.reward, np.float64)
        self.payment = blocks._cat(blocks.payment, np.float64)
        self.params = params
        self.stats = stats
        self.winner = winner
        self.validated = validated
        self.T = T

    def __len__(self) -> int:
        return int(self.phase_code.size)

    def record(self, i: int) -> QueryRecord:
        if not -len(self) <= i < len(self):
            raise IndexError(i)
        i = i % len(self)
        return QueryRecord(
            t=i + 1,
            phase=Phase(int(self.phase_code[i])),
            provider=int(self.provider[i]),
            variant=int(self.variant[i]),
            cost_per_token=float(self.cost_per_token[i]),
            true_length=int(self.true_length[i]),
            reported_length=int(self.reported_length[i]),
            reward=float(self.reward[i]),
            payment=float(self.payment[i]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self.record(i)

    def phase_mask(self, phase: Phase, provider: Optional[int] = None) -> np.ndarray:
        mask = self.phase_code == phase.value
        if provider is not None:
            mask &= self.provider == provider
        return mask

    def count(self, phase: Optional[Phase] = None, provider: Optional[int] = None) -> int:
        if phase is None:
            mask = np.ones(len(self), dtype=bool)
        else:
            mask = self.phase_code == phase.value
        if provider is not None:
            mask &= self.provider == provider
        return int(mask.sum())

    def summary(self) -> dict:
        return {
            "B": self.params.B,
            "M": self.params.M,
            "T_R": self.params.T_R,
            "i_star": self.winner.i_star,
            "u_bar_prime": self.winner.u_bar_prime,
            "validated": self.validated,
        }

    def export_lines(self):
        yield "#summary " + json.dumps(self.summary(), sort_keys=True)
        yield "t,phase,provider,variant,cost_per_token,true_length,reported_length,reward,payment"
        labels = {p.value: p.label for p in Phase}
        for i in range(len(self)):
            yield (
                f"{i + 1},{labels[int(self.phase_code[i])]},{int(self.provider[i])},"
                f"{int(self.variant[i])},{float(self.cost_per_token[i])!r},"
                f"{int(self.true_length[i])},{int(self.reported_length[i])},"
                f"{float(self.reward[i])!r},{float(self.payment[i])!r}"
            )

    def export(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            for line in self.export_lines():
                fh.write(line + "\n")


def _draw(profile: ProviderProfile, policy: PhasePolicy, n: int, rng: np.random.Generator):
    """Sample n outcomes under a policy: (reward, true_length, reported_length)."""
    bank = profile.variants[policy.variant_index].bank
    idx = bank.sample_indices(rng, n)
    reward = bank.rewards[idx]
    true_len = bank.lengths[idx]
    if policy.inflate_to is None:
        reported = true_len
    else:
        reported = np.maximum(true_len, np.int64(policy.inflate_to))
    return reward, true_len, reported


def _global_bounds(profiles: Sequence[ProviderProfile]) -> tuple[float, int]:
    # Mechanism-level constants; heterogeneous lineups contribute their max.
    return max(p.R for p in profiles), max(p.L for p in profiles)


def run_exploration(
    params: MechanismParams,
    profiles: Sequence[ProviderProfile],
    strategies: Sequence[StrategySpec],
    rng: np.random.Generator,
    blocks: Optional[_Blocks] = None,
) -> tuple[ExplorationStats, _Blocks]:
    """Delegate B queries to every provider in id order and compute the
    per-provider means that drive the rest of the run."""
    blocks = blocks if blocks is not None else _Blocks()
    _, L = _global_bounds(profiles)
    B = params.B
    K = len(profiles)
    v_bar = np.empty(K)
    l_true = np.empty(K)
    l_rep = np.empty(K)
    u_bar = np.empty(K)
    delta = np.empty(K)
    for i, (profile, spec) in enumerate(zip(profiles, strategies)):
        policy = resolve_policy(spec.exploration, profile)
        reward, true_len, reported = _draw(profile, policy, B, rng)
        blocks.append(profile, policy, Phase.EXPLORATION, reward, true_len, reported)
        p = profile.price_per_token
        v_bar[i] = reward.mean()
        l_true[i] = true_len.mean()
        l_rep[i] = reported.mean()
        u_bar[i] = v_bar[i] - p * l_rep[i]
        delta[i] = 2.0 * v_bar[i] / (p * L) - 2.0 * l_rep[i] / L
    stats = ExplorationStats(
        B=B, v_bar=v_bar, l_bar_true=l_true, l_bar_reported=l_rep, u_bar=u_bar, delta=delta
    )
    return stats, blocks


def select_winner(stats: ExplorationStats, rng: np.random.Generator) -> WinnerSelection:
    """Argmax of observed utility, ties broken uniformly at random; u_bar_prime
    is the best utility among the others."""
    u = stats.u_bar
    if u.size < 2:
        raise ConfigError("winner selection needs at least 2 providers")
    ties = np.flatnonzero(u == u.max())
    pos = int(ties[0]) if ties.size == 1 else int(ties[rng.integers(0, ties.size)])
    u_prime = max(float(u[j]) for j in range(u.size) if j != pos)
    return WinnerSelection(i_star=pos + 1, u_bar_prime=u_prime)


def compute_T_R(
    T: int,
    K: int,
    B: int,
    R: float,
    prices: Sequence[float],
    L: int,
    deltas: Sequence[float],
    i_star: int,
) -> int:
    """Exploitation length: floor(T - (5K + 2R/(min_p*L) + sum_{i != i*} delta_i)*B - K).

    The subtracted budget reserves room for exploration, both blind-trust
    phases, and the rounding slack, which is what keeps the total completed
    queries at or below T for every outcome.
    """
    min_p = min(prices)
    others = sum(d for j, d in enumerate(deltas) if j != i_star - 1)
    t_r = math.floor(T - (5.0 * K + 2.0 * R / (min_p * L) + others) * B - K)
    if t_r <= 0:
        raise BudgetError(
            f"T too small for chosen epsilon/K: exploitation length {t_r} <= 0 "
            f"(T={T}, K={K}, B={B})"
        )
    return t_r


def threshold_offset(R: float, p_star: float, L: int, M: float) -> float:
    """Slack subtracted from u_bar_prime in the running-average check:
    (R + p_star * L) * M / 3."""
    return (R + p_star * L) * M / 3.0


def _winner_policy(
    profile: ProviderProfile, spec: StrategySpec, u_bar_prime: float
) -> tuple[PhasePolicy, Optional[SecondBestPlan]]:
    choice = spec.exploitation
    plan = None
    if choice.needs_plan:
        honest_length = choice.kind is ChoiceKind.SECOND_BEST_HONEST_LENGTH
        plan = second_best_plan(profile, u_bar_prime, honest_length=honest_length)
    return resolve_policy(choice, profile, plan), plan


def run_exploitation(
    winner: WinnerSelection,
    params: MechanismParams,
    profiles: Sequence[ProviderProfile],
    strategies: Sequence[StrategySpec],
    rng: np.random.Generator,
    blocks: Optional[_Blocks] = None,
) -> tuple[bool, _Blocks]:
    """Stream up to T_R queries to the winner, aborting the moment the
    running mean of (reward - payment) over this phase drops below
    u_bar_prime minus the concentration slack. The check only activates
    after the first B queries of the phase."""
    blocks = blocks if blocks is not None else _Blocks()
    if params.T_R is None or params.validated_threshold_offset is None:
        raise ConfigError("run_exploitation needs params with T_R and threshold offset")
    profile = profiles[winner.i_star - 1]
    spec = strategies[winner.i_star - 1]
    policy, _ = _winner_policy(profile, spec, winner.u_bar_prime)

    reward, true_len, reported = _draw(profile, policy, params.T_R, rng)
    utility = reward - profile.price_per_token * reported
    running_mean = np.cumsum(utility) / np.arange(1, params.T_R + 1)
    threshold = winner.u_bar_prime - params.validated_threshold_offset
    breach = running_mean < threshold
    breach[: params.B] = False  # check never evaluated for j <= B
    validated = not bool(breach.any())
    n = params.T_R if validated else int(np.argmax(breach)) + 1
    blocks.append(
        profile, policy, Phase.EXPLOITATION, reward[:n], true_len[:n], reported[:n]
    )
    return validated, blocks


def run_blind_trust(
    winner: WinnerSelection,
    validated: bool,
    stats: ExplorationStats,
    params: MechanismParams,
    profiles: Sequence[ProviderProfile],
    strategies: Sequence[StrategySpec],
    rng: np.random.Generator,
    blocks: Optional[_Blocks] = None,
) -> _Blocks:
    """Both unconditional-payout phases.

    Phase I: B queries to the winner only if it stayed validated, and B to
    every other provider regardless. Phase II: each provider gets
    floor(B * (delta_i + 3)) queries plus one more with probability equal to
    the fractional remainder.
    """
    blocks = blocks if blocks is not None else _Blocks()
    B = params.B
    star = winner.i_star - 1
    order = ([star] if validated else []) + [j for j in range(len(profiles)) if j != star]
    for j in order:
        profile, spec = profiles[j], strategies[j]
        policy = resolve_policy(spec.blind_trust_1, profile)
        reward, true_len, reported = _draw(profile, policy, B, rng)
        blocks.append(profile, policy, Phase.BLIND_TRUST_1, reward, true_len, reported)

    for j, (profile, spec) in enumerate(zip(profiles, strategies)):
        delta_prime = float(stats.delta[j]) + 3.0
        if delta_prime < 0.0:
            continue
        scaled = B * delta_prime
        n = math.floor(scaled)
        if rng.random() < scaled - n:
            n += 1
        if n == 0:
            continue
        policy = resolve_policy(spec.blind_trust_2, profile)
        reward, true_len, reported = _draw(profile, policy, n, rng)
        blocks.append(profile, policy, Phase.BLIND_TRUST_2, reward, true_len, reported)
    return blocks


def run_mechanism(
    config: GameConfig,
    profiles: Sequence[ProviderProfile],
    assignment: Sequence,
    seed: Optional[int] = None,
) -> Transcript:
    """Execute all four phases and return the full transcript.

    `assignment` gives one strategy per provider (StrategyKind, name string,
    or an explicit StrategySpec). The run is a pure function of
    (config, profiles, assignment, seed).
    """
    if len(profiles) != config.K:
        raise ConfigError(f"expected {config.K} profiles, got {len(profiles)}")
    if len(assignment) != config.K:
        raise ConfigError(f"expected {config.K} strategies, got {len(assignment)}")
    strategies = [as_strategy_spec(s) for s in assignment]
    R, L = _global_bounds(profiles)
    prices = [p.price_per_token for p in profiles]

    params = derive_params(config.T, config.K, config.epsilon)
    rng = np.random.default_rng(config.seed if seed is None else seed)

    stats, blocks = run_exploration(params, profiles, strategies, rng)
    winner = select_winner(stats, rng)
    t_r = compute_T_R(
        config.T, config.K, params.B, R, prices, L, stats.delta, winner.i_star
    )
    offset = threshold_offset(R, prices[winner.i_star - 1], L, params.M)
    params = replace(params, T_R=t_r, validated_threshold_offset=offset)

    validated, blocks = run_exploitation(winner, params, profiles, strategies, rng, blocks)
    blocks = run_blind_trust(winner, validated, stats, params, profiles, strategies, rng, blocks)

    transcript = Transcript(blocks, params, stats, winner, validated, T=config.T)
    if len(transcript) > config.T:
        raise AssertionError(
            f"budget overrun: {len(transcript)} records for T={config.T}"
        )
    return transcript
