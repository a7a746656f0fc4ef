"""Config-file and sample-bank loading.

A game is described by one JSON or TOML file plus one CSV per variant:

    { T, K, epsilon, seed, gamma, price_scale,
      providers: [ { id, price_per_token, R, L,
                     variants: [ { name, cost_per_token, samples_file } ] } ] }

Sample files have a `reward,gen_length` header and one recorded outcome per
row. Prices and costs in the file are multiplied by price_scale on load so
that everything downstream lives in utility units per token. Loading is
total validation: every invariant is checked here, nothing is deferred.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .model import ConfigError, GameConfig, ModelVariant, ProviderProfile, SampleBank

_CONFIG_KEYS = {"T", "K", "epsilon", "seed", "gamma", "price_scale", "providers"}


def load_config(path) -> tuple[GameConfig, list[ProviderProfile]]:
    """Parse a config file, load all sample banks, and validate everything."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = _parse(path)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    for key in ("T", "K", "epsilon", "seed", "providers"):
        if key not in raw:
            raise ConfigError(f"{path}: missing required key {key!r}")

    config = GameConfig(
        T=_as_int(raw["T"], "T"),
        K=_as_int(raw["K"], "K"),
        epsilon=float(raw["epsilon"]),
        seed=_as_int(raw["seed"], "seed"),
        gamma=float(raw.get("gamma", 0.0)),
        price_scale=float(raw.get("price_scale", 1e-6)),
    )

    entries = raw["providers"]
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{path}: providers must be a non-empty list")
    if len(entries) != config.K:
        raise ConfigError(
            f"{path}: K={config.K} but {len(entries)} providers listed"
        )
    profiles = [_load_provider(e, config.price_scale, path.parent) for e in entries]
    ids = [p.id for p in profiles]
    if ids != list(range(1, config.K + 1)):
        raise ConfigError(f"{path}: provider ids must be 1..{config.K} in order, got {ids}")
    return config, profiles


def _parse(path: Path) -> dict:
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            return json.loads(path.read_text())
        if suffix == ".toml":
            with open(path, "rb") as fh:
                return tomllib.load(fh)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    raise ConfigError(f"{path}: unsupported config format {suffix!r} (use .json or .toml)")


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _load_provider(entry: dict, price_scale: float, base_dir: Path) -> ProviderProfile:
    for key in ("id", "price_per_token", "R", "L", "variants"):
        if key not in entry:
            raise ConfigError(f"provider entry missing key {key!r}: {entry}")
    pid = _as_int(entry["id"], "provider id")
    raw_price = float(entry["price_per_token"])
    variants = []
    raw_variants = entry["variants"]
    if not isinstance(raw_variants, list) or not raw_variants:
        raise ConfigError(f"provider {pid}: variants must be a non-empty list")
    for v in sorted(raw_variants, key=lambda v: float(v.get("cost_per_token", 0.0))):
        for key in ("name", "cost_per_token", "samples_file"):
            if key not in v:
                raise ConfigError(f"provider {pid}: variant entry missing key {key!r}")
        bank = load_samples(base_dir / v["samples_file"])
        variants.append(
            ModelVariant(
                name=str(v["name"]),
                cost_per_token=float(v["cost_per_token"]) * price_scale,
                bank=bank,
            )
        )
    return ProviderProfile(
        id=pid,
        price_per_token=raw_price * price_scale,
        R=float(entry["R"]),
        L=_as_int(entry["L"], f"provider {pid} L"),
        variants=tuple(variants),
    )


def load_samples(path) -> SampleBank:
    """Read a `reward,gen_length` CSV into a bank, preserving row order."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing sample file: {path}")
    rewards: list[float] = []
    lengths: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["reward", "gen_length"]:
            raise ConfigError(f"{path}: expected header 'reward,gen_length', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ConfigError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                reward = float(row[0])
                length = int(row[1])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
            rewards.append(reward)
            lengths.append(length)
    if not rewards:
        raise ConfigError(f"{path}: sample file has no rows")
    return SampleBank(rewards, lengths, source_id=str(path))
