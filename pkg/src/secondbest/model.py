"""Domain types for the user-provider delegation game.

A provider publishes a single price-per-token but can secretly serve any of
several model variants, each with its own cost and an empirical bank of
recorded outcomes (reward, generated length). These types carry the market
configuration, the per-variant outcome banks, and the checks that gate
whether a lineup is well-behaved enough for the headline guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration or lineup violates a domain invariant."""


class OutcomeSample(NamedTuple):
    reward: float
    gen_length: int


@dataclass(frozen=True)
class GameConfig:
    """Global game parameters.

    T is the total query budget, K the provider count, epsilon the
    exploration exponent in (0, 1/2), gamma the slack required of the
    lineup-quality check, and price_scale the multiplier taking configured
    currency-per-token into utility units per token (the default 1e-6 maps
    dollars-per-million-tokens onto dollars-per-token).
    """

    T: int
    K: int
    epsilon: float
    seed: int
    gamma: float = 0.0
    price_scale: float = 1e-6

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if self.K < 2:
            raise ConfigError(f"K must be >= 2, got {self.K}")
        if not (0.0 < self.epsilon < 0.5):
            raise ConfigError(f"epsilon out of (0, 0.5): {self.epsilon}")
        if self.gamma < 0.0:
            raise ConfigError(f"gamma must be non-negative, got {self.gamma}")
        if not self.price_scale > 0.0:
            raise ConfigError(f"price_scale must be positive, got {self.price_scale}")
        if not (-(2**63) <= int(self.seed) < 2**64):
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")


class SampleBank:
    """An empirical outcome distribution: recorded (reward, length) pairs.

    Draws are uniform with replacement, mirroring how a fixed result set is
    resampled during simulation instead of calling a live model.
    """

    __slots__ = ("rewards", "lengths", "source_id")

    def __init__(self, rewards, lengths, source_id: str = ""):
        rewards = np.asarray(rewards, dtype=np.float64)
        lengths = np.asarray(lengths, dtype=np.int64)
        if rewards.ndim != 1 or rewards.shape != lengths.shape:
            raise ConfigError("rewards and lengths must be 1-d and equal length")
        if rewards.size == 0:
            raise ConfigError("sample bank must be non-empty")
        self.rewards = rewards
        self.lengths = lengths
        self.source_id = source_id
        self.rewards.setflags(write=False)
        self.lengths.setflags(write=False)

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[float, int]], source_id: str = "") -> "SampleBank":
        rewards = [r for r, _ in samples]
        lengths = [l for _, l in samples]
        return cls(rewards, lengths, source_id)

    def __len__(self) -> int:
        return int(self.rewards.size)

    def __getitem__(self, i: int) -> OutcomeSample:
        return OutcomeSample(float(self.rewards[i]), int(self.lengths[i]))

    def __iter__(self) -> Iterator[OutcomeSample]:
        for i in range(len(self)):
            yield self[i]

    def sample_indices(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.integers(0, len(self), size=n)

    def mean_reward(self) -> float:
        return float(np.mean(self.rewards))

    def mean_length(self) -> float:
        return float(np.mean(self.lengths))


@dataclass(frozen=True)
class ModelVariant:
    """One cost level a provider can secretly serve at, with its outcome bank."""

    name: str
    cost_per_token: float
    bank: SampleBank


@dataclass(frozen=True)
class ProviderProfile:
    """A provider's public face (id, price, bounds) and private lineup.

    Variants are sorted by ascending cost; exactly one variant incurs the
    full advertised price (the truthful model). R bounds every recorded
    reward and L every recorded generation length.
    """

    id: int
    price_per_token: float
    R: float
    L: int
    variants: tuple[ModelVariant, ...]

    def __post_init__(self):
        validate_profile(self)

    @property
    def truthful_index(self) -> int:
        for i, v in enumerate(self.variants):
            if v.cost_per_token == self.price_per_token:
                return i
        raise ConfigError(f"provider {self.id} has no truthful variant")

    @property
    def cheapest_index(self) -> int:
        return 0

    def cost_performance(self) -> "CostPerformanceView":
        rows = tuple(
            (v.cost_per_token, *expected_stats(v)) for v in self.variants
        )
        return CostPerformanceView(provider_id=self.id, rows=rows)


def validate_profile(profile: ProviderProfile) -> None:
    pid = profile.id
    if profile.id < 1:
        raise ConfigError(f"provider id must be >= 1, got {profile.id}")
    if not profile.price_per_token > 0.0:
        raise ConfigError(f"provider {pid}: price_per_token must be positive")
    if not profile.variants:
        raise ConfigError(f"provider {pid}: variants must be non-empty")
    if profile.R <= 0.0:
        raise ConfigError(f"provider {pid}: R must be positive")
    if profile.L < 1:
        raise ConfigError(f"provider {pid}: L must be >= 1")
    costs = [v.cost_per_token for v in profile.variants]
    for a, b in zip(costs, costs[1:]):
        if not a < b:
            raise ConfigError(
                f"provider {pid}: variant costs must be strictly increasing, got {a} then {b}"
            )
    truthful = [v for v in profile.variants if v.cost_per_token == profile.price_per_token]
    if len(truthful) != 1:
        raise ConfigError(
            f"provider {pid}: exactly one variant must incur the full price "
            f"{profile.price_per_token}, found {len(truthful)}"
        )
    for v in profile.variants:
        if not (0.0 <= v.cost_per_token <= profile.price_per_token):
            raise ConfigError(
                f"provider {pid}: variant {v.name!r} cost {v.cost_per_token} "
                f"outside [0, {profile.price_per_token}]"
            )
        lo_r, hi_r = float(v.bank.rewards.min()), float(v.bank.rewards.max())
        if lo_r < 0.0 or hi_r > profile.R:
            bad = int(np.argmax((v.bank.rewards < 0.0) | (v.bank.rewards > profile.R)))
            raise ConfigError(
                f"provider {pid}: variant {v.name!r} sample {bad} reward "
                f"{float(v.bank.rewards[bad])} outside [0, {profile.R}]"
            )
        lo_l, hi_l = int(v.bank.lengths.min()), int(v.bank.lengths.max())
        if lo_l < 1 or hi_l > profile.L:
            bad = int(np.argmax((v.bank.lengths < 1) | (v.bank.lengths > profile.L)))
            raise ConfigError(
                f"provider {pid}: variant {v.name!r} sample {bad} gen_length "
                f"{int(v.bank.lengths[bad])} outside [1, {profile.L}]"
            )


@dataclass(frozen=True)
class CostPerformanceView:
    """Per-variant expected reward h(c) and expected length g(c), as bank means."""

    provider_id: int
    rows: tuple[tuple[float, float, float], ...]  # (cost, h, g) ascending in cost

    def h(self, variant_index: int) -> float:
        return self.rows[variant_index][1]

    def g(self, variant_index: int) -> float:
        return self.rows[variant_index][2]


def expected_stats(variant: ModelVariant) -> tuple[float, float]:
    """Mean reward and mean generated length of a variant's bank."""
    return variant.bank.mean_reward(), variant.bank.mean_length()


def sample_outcome(variant: ModelVariant, rng: np.random.Generator) -> OutcomeSample:
    """Draw one outcome uniformly with replacement from the variant's bank."""
    i = int(rng.integers(0, len(variant.bank)))
    return variant.bank[i]


@dataclass(frozen=True)
class AssumptionViolation:
    provider_id: int
    pair: tuple[str, str]
    condition: str  # "A": utility slope, "B": margin-over-cost growth
    margin: float


@dataclass(frozen=True)
class AssumptionReport:
    holds: bool
    violations: tuple[AssumptionViolation, ...] = ()


def check_assumptions(profile: ProviderProfile, gamma: float) -> AssumptionReport:
    """Check the discrete lineup-quality conditions on adjacent variant pairs.

    For adjacent costs c1 < c2 with bank means (h1, g1), (h2, g2):

      (A)  [h2 - h1] - p * [g2 - g1] >= gamma * (c2 - c1)
           (delivered user utility rises with incurred cost, at slope gamma)
      (B)  h2 - c2 * g2 >= h1 - c1 * g1
           (reward grows at least as fast as total generation cost)

    Upper differences stand in for the derivatives on the discrete support.
    """
    if len(profile.variants) < 2:
        raise ConfigError(f"provider {profile.id}: assumption check needs a lineup")
    p = profile.price_per_token
    violations = []
    for v1, v2 in zip(profile.variants, profile.variants[1:]):
        c1, c2 = v1.cost_per_token, v2.cost_per_token
        h1, g1 = expected_stats(v1)
        h2, g2 = expected_stats(v2)
        margin_a = (h2 - h1) - p * (g2 - g1) - gamma * (c2 - c1)
        if margin_a < 0.0:
            violations.append(
                AssumptionViolation(profile.id, (v1.name, v2.name), "A", margin_a)
            )
        margin_b = (h2 - c2 * g2) - (h1 - c1 * g1)
        if margin_b < 0.0:
            violations.append(
                AssumptionViolation(profile.id, (v1.name, v2.name), "B", margin_b)
            )
    return AssumptionReport(holds=not violations, violations=tuple(violations))


@dataclass(frozen=True)
class Benchmarks:
    u_fb: float
    u_sb: float
    best_index: int


def truthful_query_utility(profile: ProviderProfile) -> float:
    """Expected per-query user utility when the provider behaves truthfully."""
    v = profile.variants[profile.truthful_index]
    h, g = expected_stats(v)
    return h - profile.price_per_token * g


def benchmarks(profiles: Sequence[ProviderProfile], T: int) -> Benchmarks:
    """First-best and second-best user utility over T queries.

    Both are computed from truthful-variant bank means; the second-best
    excludes the top provider. Ties in the top pick resolve to the lowest
    provider id (this affects reporting only, never the mechanism itself).
    """
    if len(profiles) < 2:
        raise ConfigError("second-best undefined: need at least 2 providers")
    per_query = [truthful_query_utility(p) for p in profiles]
    best_pos = max(range(len(profiles)), key=lambda i: (per_query[i], -i))
    u_fb = T * per_query[best_pos]
    u_sb = T * max(u for i, u in enumerate(per_query) if i != best_pos)
    return Benchmarks(u_fb=u_fb, u_sb=u_sb, best_index=profiles[best_pos].id)
