import math

import numpy as np
import pytest

from secondbest.model import ConfigError, ModelVariant, OutcomeSample, ProviderProfile, expected_stats
from secondbest.strategies import (
    Action,
    Observation,
    Phase,
    StrategyKind,
    decide,
    infeasible_fallback,
    parse_strategy,
    second_best_plan,
    strategy_spec,
)

from conftest import bank, deterministic_profiles


def obs(phase, reward=0.7, length=12, u_prime=None, index=1):
    return Observation(
        phase=phase,
        query_index_in_phase=index,
        generated=OutcomeSample(reward, length),
        informed_u_bar_prime=u_prime,
    )


def plan_instance():
    # price 2, L=5: variants (c=1, h=8, g=3) and (c=2, h=10, g=3); rewards
    # live in [0, 10] for this instance.
    return ProviderProfile(
        id=1, price_per_token=2.0, R=10.0, L=5,
        variants=(
            ModelVariant("cheap", 1.0, bank((8.0, 3))),
            ModelVariant("full", 2.0, bank((10.0, 3))),
        ),
    )


class TestParse:
    def test_round_trip(self):
        for kind in StrategyKind:
            assert parse_strategy(kind.value) is kind

    def test_unknown(self):
        with pytest.raises(ConfigError, match="unknown strategy"):
            parse_strategy("bananas")


class TestDecide:
    def setup_method(self):
        self.p1 = deterministic_profiles()[0]  # 3 variants, truthful index 2, L=10

    def test_honest_reports_identity(self):
        for phase in Phase:
            action = decide(StrategyKind.HONEST, self.p1, obs(phase, 0.7, 7))
            assert action == Action(variant_index=2, reported_length=7)

    def test_ours_blind_trust_deviates_fully(self):
        action = decide(StrategyKind.OURS, self.p1, obs(Phase.BLIND_TRUST_1, 0.7, 3))
        assert action == Action(variant_index=0, reported_length=10)
        action = decide(StrategyKind.OURS, self.p1, obs(Phase.BLIND_TRUST_2, 0.7, 3))
        assert action == Action(variant_index=0, reported_length=10)

    def test_ours_exploration_honest(self):
        action = decide(StrategyKind.OURS, self.p1, obs(Phase.EXPLORATION, 0.7, 6))
        assert action == Action(variant_index=2, reported_length=6)

    def test_second_best_reporting_rule(self):
        profile = plan_instance()
        plan = second_best_plan(profile, u_bar_prime=2.0)
        # Generated longer than the target: report truthfully.
        action = decide(StrategyKind.OURS, profile, obs(Phase.EXPLOITATION, 8.0, 5, u_prime=2.0), plan)
        assert action.reported_length == 5
        # Generated below the target: pad the report up to it.
        action = decide(StrategyKind.OURS, profile, obs(Phase.EXPLOITATION, 8.0, 2, u_prime=2.0), plan)
        assert action.reported_length == 3

    def test_dishonest_variants(self):
        a = decide(StrategyKind.DISHONEST_MODEL, self.p1, obs(Phase.EXPLOITATION, 0.5, 6))
        assert a == Action(variant_index=0, reported_length=6)
        a = decide(StrategyKind.DISHONEST_LENGTH, self.p1, obs(Phase.EXPLOITATION, 0.5, 6))
        assert a == Action(variant_index=2, reported_length=10)
        a = decide(StrategyKind.DISHONEST_ALL, self.p1, obs(Phase.EXPLORATION, 0.5, 6))
        assert a == Action(variant_index=0, reported_length=10)

    def test_missing_plan_raises(self):
        with pytest.raises(ConfigError, match="needs a plan"):
            decide(StrategyKind.OURS, self.p1, obs(Phase.EXPLOITATION, 0.5, 6, u_prime=0.3))

    def test_never_shrinks_report(self):
        rng = np.random.default_rng(8)
        profile = plan_instance()
        plan = second_best_plan(profile, u_bar_prime=2.0)
        for _ in range(200):
            kind = list(StrategyKind)[rng.integers(0, 6)]
            phase = list(Phase)[rng.integers(0, 4)]
            length = int(rng.integers(1, profile.L + 1))
            action = decide(kind, profile, obs(phase, 0.5, length), plan)
            assert action.reported_length >= length
            assert action.reported_length <= profile.L


class TestSecondBestPlan:
    def test_worked_instance(self):
        profile = plan_instance()
        plan = second_best_plan(profile, u_bar_prime=2.0)
        assert plan.feasible
        # The cheap variant can bill 3 tokens while clearing the floor:
        # objective (2-1)*3 = 3 beats the full-price variant's 0.
        assert profile.variants[plan.chosen_variant].cost_per_token == 1.0
        assert plan.target_report_length == pytest.approx(3.0)

    def test_honest_length_branch(self):
        profile = plan_instance()
        plan = second_best_plan(profile, u_bar_prime=2.0, honest_length=True)
        assert plan.feasible
        assert profile.variants[plan.chosen_variant].cost_per_token == 1.0
        assert plan.target_report_length == pytest.approx(3.0)

    def test_infeasible_when_floor_unreachable(self):
        profile = plan_instance()
        # max_m h_m - p*g_m = 10 - 6 = 4; anything above is unreachable.
        plan = second_best_plan(profile, u_bar_prime=4.5)
        assert not plan.feasible
        assert plan.chosen_variant is None

    def test_feasibility_constraint_holds_exactly(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            profile = _random_profile(rng)
            u_prime = float(rng.uniform(-1.0, 1.0))
            plan = second_best_plan(profile, u_prime)
            if not plan.feasible:
                continue
            variant = profile.variants[plan.chosen_variant]
            h, g = expected_stats(variant)
            l = plan.target_report_length
            assert g <= l <= profile.L
            assert h - profile.price_per_token * l >= u_prime

    def test_matches_exhaustive_integer_grid(self):
        rng = np.random.default_rng(23)
        for _ in range(300):
            profile = _random_profile(rng)
            u_prime = float(rng.uniform(-1.0, 1.0))
            plan = second_best_plan(profile, u_prime)
            p = profile.price_per_token
            best_obj = None
            for variant in profile.variants:
                h, g = expected_stats(variant)
                for l in range(math.ceil(g), profile.L + 1):
                    if h - p * l < u_prime:
                        continue
                    obj = (p - variant.cost_per_token) * l
                    if best_obj is None or obj > best_obj:
                        best_obj = obj
            if best_obj is None:
                assert not plan.feasible
                continue
            assert plan.feasible
            variant = profile.variants[plan.chosen_variant]
            plan_obj = (p - variant.cost_per_token) * math.floor(plan.target_report_length)
            # The continuous target may round down one token below the best
            # integer grid point, never more.
            assert plan_obj >= best_obj - p - 1e-12


def _random_profile(rng):
    L = int(rng.integers(5, 60))
    price = float(rng.uniform(0.02, 0.5))
    n_variants = int(rng.integers(2, 4))
    costs = np.sort(rng.uniform(0.0, price, size=n_variants))
    costs[-1] = price
    while len(set(costs.tolist())) < n_variants:
        costs = np.sort(rng.uniform(0.0, price, size=n_variants))
        costs[-1] = price
    variants = []
    for i, c in enumerate(costs):
        g = int(rng.integers(1, L + 1))
        h = float(rng.uniform(0.0, 1.0))
        variants.append(ModelVariant(f"v{i}", float(c), bank((h, g))))
    return ProviderProfile(id=1, price_per_token=price, R=1.0, L=L, variants=tuple(variants))


class TestInfeasibleFallback:
    def test_cheapest_and_max_length(self):
        p1 = deterministic_profiles()[0]
        assert infeasible_fallback(p1) == Action(variant_index=0, reported_length=10)

    def test_single_full_price_variant(self):
        profile = ProviderProfile(
            id=1, price_per_token=0.1, R=1.0, L=8,
            variants=(ModelVariant("only", 0.1, bank((0.5, 4))),),
        )
        assert infeasible_fallback(profile) == Action(variant_index=0, reported_length=8)


class TestSpecTable:
    def test_phase_mapping(self):
        ours = strategy_spec(StrategyKind.OURS)
        assert ours.exploration.kind.value == "honest"
        assert ours.exploitation.kind.value == "second-best"
        assert ours.blind_trust_1.kind.value == "worst"
        honest = strategy_spec(StrategyKind.HONEST)
        assert all(
            honest.choice(ph).kind.value == "honest" for ph in Phase
        )
        dl = strategy_spec(StrategyKind.DISHONEST_LENGTH)
        assert dl.exploitation.kind.value == "worst-length"
        ohl = strategy_spec(StrategyKind.OURS_HONEST_LENGTH)
        assert ohl.exploitation.kind.value == "second-best-honest-length"
