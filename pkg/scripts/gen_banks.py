#!/usr/bin/env python3
"""Regenerate the bundled stand-in outcome banks under configs/banks/.

Each bank is 2000 synthetic (reward, length) records for one model variant:
rewards are Beta-distributed partial-credit scores in [0, 1], lengths are
rounded lognormal token counts. Targets are chosen so provider 1 carries the
strongest lineup and every lineup passes the assumption check with room to
spare; the script asserts those properties on the written files and fails
loudly if a regeneration breaks them.

Usage: python scripts/gen_banks.py
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from secondbest.config import load_config  # noqa: E402
from secondbest.model import check_assumptions, expected_stats, truthful_query_utility  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
BANK_DIR = ROOT / "configs" / "banks"

L_MAX = 38058
N_SAMPLES = 2000
REWARD_CONCENTRATION = 12.0
LENGTH_SIGMA = 0.35

# (provider, variant name, cost $/Mtok, target mean reward, target mean length)
LINEUP = [
    (1, "deepseek-r1", 2.19, 0.62, 5200),
    (1, "gpt-5-medium", 5.00, 0.87, 3600),
    (1, "gpt-5-high", 10.00, 0.92, 3500),
    (2, "deepseek-r1", 2.19, 0.60, 5200),
    (2, "o1-mini", 3.30, 0.66, 4800),
    (2, "o3-mini", 4.40, 0.72, 4400),
    (3, "deepseek-r1", 2.19, 0.58, 5200),
    (3, "o1-mini", 4.40, 0.66, 4800),
    (3, "claude-sonnet-4", 15.00, 0.86, 3400),
]


def synth_bank(rng: np.random.Generator, mean_reward: float, mean_length: float):
    a = mean_reward * REWARD_CONCENTRATION
    b = (1.0 - mean_reward) * REWARD_CONCENTRATION
    rewards = rng.beta(a, b, size=N_SAMPLES)
    mu = np.log(mean_length) - LENGTH_SIGMA**2 / 2.0
    lengths = np.rint(rng.lognormal(mu, LENGTH_SIGMA, size=N_SAMPLES))
    lengths = np.clip(lengths, 400, 20000).astype(int)
    return rewards, lengths


def write_bank(path: Path, rewards, lengths):
    lines = ["reward,gen_length"]
    for r, l in zip(rewards, lengths):
        lines.append(f"{r:.6f},{int(l)}")
    path.write_text("\n".join(lines) + "\n")


def main() -> int:
    BANK_DIR.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(815)
    for provider, name, _cost, h_target, g_target in LINEUP:
        rewards, lengths = synth_bank(rng, h_target, g_target)
        path = BANK_DIR / f"p{provider}_{name}.csv"
        write_bank(path, rewards, lengths)
        print(f"wrote {path.name}: mean reward {rewards.mean():.4f}, mean length {lengths.mean():.1f}")

    config, profiles = load_config(ROOT / "configs" / "default.toml")
    for profile in profiles:
        rep = check_assumptions(profile, config.gamma)
        assert rep.holds, f"provider {profile.id} fails assumptions: {rep.violations}"
        print(f"provider {profile.id}: assumptions hold (gamma={config.gamma})")

    utils = {p.id: truthful_query_utility(p) for p in profiles}
    print("truthful per-query utilities:", {k: round(v, 4) for k, v in utils.items()})
    assert utils[1] > utils[3] + 0.02 > utils[2] + 0.02, "provider ordering broken"

    # Provider 1's mid-tier must itself beat the runner-up's truthful utility,
    # otherwise the winner has no profitable variant to serve during exploitation.
    p1 = profiles[0]
    h_mid, g_mid = expected_stats(p1.variants[1])
    mid_utility = h_mid - p1.price_per_token * g_mid
    runner_up = max(utils[2], utils[3])
    assert mid_utility > runner_up + 0.01, (
        f"mid-tier utility {mid_utility:.4f} too close to runner-up {runner_up:.4f}"
    )
    print(f"provider 1 mid-tier utility {mid_utility:.4f} > runner-up {runner_up:.4f}")
    print("all lineup properties verified")
    return 0


if __name__ == "__main__":
    sys.exit(main())
