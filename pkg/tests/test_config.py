# tests/test_config.py

import pytest

from src.core.config import ENV_KEYS, ChainSettings, build_settings, load_settings, write_settings
from src.core.errors import ConfigInvalid
from src.core.hashcore import MAX_TARGET, target_to_hex


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ENV_KEYS.values():
        monkeypatch.delenv(name, raising=False)


def test_defaults():
    settings = build_settings()
    assert (settings.k, settings.ell, settings.rho, settings.mode) == (6, 5, 0.6, "single")
    assert settings.min_edit_fee == 10 * settings.min_relay_fee
    assert settings.difficulty == 2 ** 252


def test_precedence(monkeypatch, tmp_path):
    monkeypatch.setenv("REDACT_K", "3")
    monkeypatch.setenv("REDACT_ELL", "7")
    monkeypatch.setenv("REDACT_RHO", "0.5")
    path = tmp_path / "chain.env"
    path.write_text("ell=9\nrho=0.8\n", encoding="utf-8")

    settings = load_settings(str(path), rho=1.0)
    assert settings.k == 3
    assert settings.ell == 9
    assert settings.rho == 1.0


def test_round_trip(tmp_path):
    path = str(tmp_path / "chain.env")
    settings = build_settings(k=2, ell=4, mode="EXT", difficulty_hex="ff")
    write_settings(settings, path)
    loaded = load_settings(path)
    assert loaded.mode == "ext"
    assert (loaded.k, loaded.ell, loaded.difficulty_hex) == (2, 4, settings.difficulty_hex)


def test_policy_params():
    params = build_settings(k=2, ell=3, rho=0.6).policy_params()
    assert (params.k, params.ell, params.rho) == (2, 3, 0.6)


@pytest.mark.parametrize("overrides", [
    {"k": 0},
    {"ell": -1},
    {"rho": 0.0},
    {"rho": 1.5},
    {"mode": "sidechain"},
    {"difficulty_hex": "xyz"},
    {"min_edit_fee": -5},
])
def test_invalid_values(overrides):
    with pytest.raises(ConfigInvalid):
        build_settings(**overrides)


def test_unknown_key():
    with pytest.raises(ConfigInvalid):
        build_settings({"window": 4})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigInvalid):
        load_settings(str(tmp_path / "absent.env"))


def test_settings_are_frozen():
    settings = ChainSettings(difficulty_hex=target_to_hex(MAX_TARGET))
    with pytest.raises(TypeError):
        settings.k = 9
