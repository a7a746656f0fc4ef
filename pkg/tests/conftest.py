from pathlib import Path

import numpy as np
import pytest

from secondbest.model import GameConfig, ModelVariant, ProviderProfile, SampleBank

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def bank(*samples, source_id=""):
    return SampleBank.from_samples(list(samples), source_id=source_id)


def deterministic_profiles():
    """The two-provider lineup with single-record banks: every run over it is
    exact arithmetic."""
    p1 = ProviderProfile(
        id=1, price_per_token=0.10, R=1.0, L=10,
        variants=(
            ModelVariant("small", 0.02, bank((0.55, 6))),
            ModelVariant("mid", 0.06, bank((0.75, 5))),
            ModelVariant("flagship", 0.10, bank((0.90, 4))),
        ),
    )
    p2 = ProviderProfile(
        id=2, price_per_token=0.07, R=1.0, L=10,
        variants=(
            ModelVariant("small", 0.01, bank((0.30, 5))),
            ModelVariant("flagship", 0.07, bank((0.71, 5))),
        ),
    )
    return [p1, p2]


def noisy_profiles(seed=3):
    """Same shape as the deterministic lineup but with 40-record noisy banks."""
    rng = np.random.default_rng(seed)

    def noisy_bank(mean_reward, mean_length, spread=2):
        n = 40
        rewards = np.clip(rng.normal(mean_reward, 0.08, n), 0.0, 1.0)
        lengths = np.clip(
            np.rint(rng.normal(mean_length, spread, n)), 1, 10
        ).astype(int)
        return SampleBank(rewards, lengths)

    p1 = ProviderProfile(
        id=1, price_per_token=0.10, R=1.0, L=10,
        variants=(
            ModelVariant("small", 0.02, noisy_bank(0.55, 6)),
            ModelVariant("mid", 0.06, noisy_bank(0.75, 5)),
            ModelVariant("flagship", 0.10, noisy_bank(0.90, 4)),
        ),
    )
    p2 = ProviderProfile(
        id=2, price_per_token=0.07, R=1.0, L=10,
        variants=(
            ModelVariant("small", 0.01, noisy_bank(0.30, 5)),
            ModelVariant("flagship", 0.07, noisy_bank(0.71, 5)),
        ),
    )
    return [p1, p2]


def toy_config(**overrides):
    params = dict(T=2000, K=2, epsilon=0.1, seed=11, gamma=1.0, price_scale=1.0)
    params.update(overrides)
    return GameConfig(**params)


@pytest.fixture(scope="session")
def default_config_path():
    return CONFIG_DIR / "default.toml"


@pytest.fixture(scope="session")
def toy_config_path():
    return CONFIG_DIR / "toy.toml"


@pytest.fixture(scope="session")
def default_game(default_config_path):
    from secondbest.config import load_config

    return load_config(default_config_path)
