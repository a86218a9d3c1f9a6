import pytest

from config.settings import SettingsError, get_settings, load_settings, reset_settings


def test_defaults_come_from_limits_yaml():
    s = get_settings()
    assert s.limits.exhaustive_order == 4096
    assert s.limits.triple_order == 256
    assert s.log_level == "WARNING"


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("PROFDYN_TABLE_ORDER", "64")
    monkeypatch.setenv("PROFDYN_LOG_LEVEL", "debug")
    reset_settings()
    s = get_settings()
    assert s.limits.table_order == 64
    assert s.log_level == "DEBUG"


def test_bad_override_is_a_settings_error(monkeypatch):
    monkeypatch.setenv("PROFDYN_MAX_ORDER", "lots")
    with pytest.raises(SettingsError):
        load_settings()
    monkeypatch.setenv("PROFDYN_MAX_ORDER", "0")
    with pytest.raises(SettingsError):
        load_settings()


def test_missing_file_falls_back_to_defaults(tmp_path):
    s = load_settings(tmp_path / "absent.yaml")
    assert s.limits.crt_product_size == 10 ** 6
