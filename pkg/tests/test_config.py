import json

import pytest

from secondbest.config import load_config, load_samples
from secondbest.model import ConfigError


def write_toy_files(tmp_path, *, epsilon=0.2, length=5, price_scale=1.0, fmt="toml"):
    (tmp_path / "a.csv").write_text("reward,gen_length\n0.5,4\n0.7,3\n")
    (tmp_path / "b.csv").write_text(f"reward,gen_length\n0.9,{length}\n")
    (tmp_path / "c.csv").write_text("reward,gen_length\n0.4,2\n")
    (tmp_path / "d.csv").write_text("reward,gen_length\n0.8,3\n")
    data = {
        "T": 5000,
        "K": 2,
        "epsilon": epsilon,
        "seed": 42,
        "gamma": 0.0,
        "price_scale": price_scale,
        "providers": [
            {
                "id": 1,
                "price_per_token": 0.2,
                "R": 1.0,
                "L": 10,
                "variants": [
                    {"name": "lo", "cost_per_token": 0.1, "samples_file": "a.csv"},
                    {"name": "hi", "cost_per_token": 0.2, "samples_file": "b.csv"},
                ],
            },
            {
                "id": 2,
                "price_per_token": 0.1,
                "R": 1.0,
                "L": 10,
                "variants": [
                    {"name": "lo", "cost_per_token": 0.05, "samples_file": "c.csv"},
                    {"name": "hi", "cost_per_token": 0.1, "samples_file": "d.csv"},
                ],
            },
        ],
    }
    if fmt == "json":
        path = tmp_path / "game.json"
        path.write_text(json.dumps(data))
    else:
        path = tmp_path / "game.toml"
        path.write_text(_to_toml(data))
    return path


def _to_toml(data):
    lines = []
    for key in ("T", "K", "epsilon", "seed", "gamma", "price_scale"):
        lines.append(f"{key} = {data[key]}")
    for p in data["providers"]:
        lines.append("[[providers]]")
        lines.append(f"id = {p['id']}")
        lines.append(f"price_per_token = {p['price_per_token']}")
        lines.append(f"R = {p['R']}")
        lines.append(f"L = {p['L']}")
        for v in p["variants"]:
            lines.append("[[providers.variants]]")
            lines.append(f'name = "{v["name"]}"')
            lines.append(f"cost_per_token = {v['cost_per_token']}")
            lines.append(f'samples_file = "{v["samples_file"]}"')
    return "\n".join(lines) + "\n"


def test_load_bundled_default(default_config_path):
    config, profiles = load_config(default_config_path)
    assert config.K == 3 and config.T == 10**6 and config.epsilon == 0.3
    assert len(profiles) == 3
    # $/Mtok figures land as utility units per token.
    assert profiles[0].price_per_token == pytest.approx(10.0e-6)
    assert profiles[0].variants[0].cost_per_token == pytest.approx(2.19e-6)
    assert profiles[0].L == 38058
    assert all(len(v.bank) == 2000 for p in profiles for v in p.variants)


def test_json_and_toml_agree(tmp_path):
    toml_path = write_toy_files(tmp_path, fmt="toml")
    cfg_t, profs_t = load_config(toml_path)
    json_path = write_toy_files(tmp_path, fmt="json")
    cfg_j, profs_j = load_config(json_path)
    assert cfg_t == cfg_j
    for a, b in zip(profs_t, profs_j):
        assert a.price_per_token == b.price_per_token
        assert [v.cost_per_token for v in a.variants] == [v.cost_per_token for v in b.variants]


def test_price_scale_applied(tmp_path):
    path = write_toy_files(tmp_path, price_scale=0.5)
    _, profiles = load_config(path)
    assert profiles[0].price_per_token == pytest.approx(0.1)
    assert profiles[0].variants[0].cost_per_token == pytest.approx(0.05)
    # Truthful variant still matches the scaled price exactly.
    assert profiles[0].variants[1].cost_per_token == profiles[0].price_per_token


def test_epsilon_boundary_rejected(tmp_path):
    path = write_toy_files(tmp_path, epsilon=0.5)
    with pytest.raises(ConfigError, match=r"epsilon out of \(0, 0.5\)"):
        load_config(path)


def test_bank_length_above_L_names_sample(tmp_path):
    path = write_toy_files(tmp_path, length=11)  # L is 10
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert "gen_length" in str(err.value) and "11" in str(err.value)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.toml")


def test_missing_samples_file(tmp_path):
    path = write_toy_files(tmp_path)
    (tmp_path / "a.csv").unlink()
    with pytest.raises(ConfigError, match="missing sample file"):
        load_config(path)


def test_parse_error_reported(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="parse error"):
        load_config(path)


def test_unknown_keys_rejected(tmp_path):
    path = write_toy_files(tmp_path, fmt="json")
    data = json.loads(path.read_text())
    data["extra"] = 1
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigError, match="unknown config keys"):
        load_config(path)


def test_provider_count_must_match_K(tmp_path):
    path = write_toy_files(tmp_path, fmt="json")
    data = json.loads(path.read_text())
    data["providers"].pop()
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigError, match="providers listed"):
        load_config(path)


def test_provider_ids_must_be_sequential(tmp_path):
    path = write_toy_files(tmp_path, fmt="json")
    data = json.loads(path.read_text())
    data["providers"][1]["id"] = 3
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigError, match="ids must be 1..2"):
        load_config(path)


def test_variants_sorted_on_load(tmp_path):
    path = write_toy_files(tmp_path, fmt="json")
    data = json.loads(path.read_text())
    data["providers"][0]["variants"].reverse()
    path.write_text(json.dumps(data))
    _, profiles = load_config(path)
    costs = [v.cost_per_token for v in profiles[0].variants]
    assert costs == sorted(costs)


def test_load_samples_bad_header(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("reward,length\n0.5,4\n")
    with pytest.raises(ConfigError, match="expected header"):
        load_samples(path)


def test_load_samples_bad_row(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("reward,gen_length\n0.5,abc\n")
    with pytest.raises(ConfigError, match="s.csv:2"):
        load_samples(path)


def test_load_samples_empty(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("reward,gen_length\n")
    with pytest.raises(ConfigError, match="no rows"):
        load_samples(path)
