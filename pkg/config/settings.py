# config/settings.py
import os
from functools import lru_cache
from pathlib import Path

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

ROOT = Path(__file__).resolve().parents[1]
LIMITS_PATH = ROOT / "config" / "limits.yaml"

load_dotenv(dotenv_path=ROOT / ".env")


class SettingsError(RuntimeError):
    ...


class Limits(BaseModel):
    max_order: int = Field(2**31 - 1, ge=1)
    table_order: int = Field(65_536, ge=1)
    exhaustive_order: int = Field(4096, ge=1)
    triple_order: int = Field(256, ge=1)
    crt_product_size: int = Field(10**6, ge=1)
    subgroup_order: int = Field(512, ge=1)


class Settings(BaseModel):
    limits: Limits = Limits()
    log_level: str = "WARNING"


# env var -> key under `limits`
_ENV_LIMITS = {
    "PROFDYN_MAX_ORDER": "max_order",
    "PROFDYN_TABLE_ORDER": "table_order",
    "PROFDYN_EXHAUSTIVE_ORDER": "exhaustive_order",
    "PROFDYN_TRIPLE_ORDER": "triple_order",
    "PROFDYN_CRT_PRODUCT_SIZE": "crt_product_size",
    "PROFDYN_SUBGROUP_ORDER": "subgroup_order",
}


def load_config(path: Path = LIMITS_PATH) -> dict:
    if not path.exists():
        return {}
    with open(path, "r") as f:
        return yaml.safe_load(f) or {}


def load_settings(path: Path = LIMITS_PATH) -> Settings:
    cfg = load_config(path)
    limits = dict(cfg.get("limits") or {})
    for env, key in _ENV_LIMITS.items():
        raw = os.getenv(env)
        if raw:
            try:
                limits[key] = int(raw)
            except ValueError:
                raise SettingsError(f"{env} must be an integer, got {raw!r}")
    level = os.getenv("PROFDYN_LOG_LEVEL") or (cfg.get("logging") or {}).get("level", "WARNING")
    try:
        return Settings(limits=Limits(**limits), log_level=str(level).upper())
    except ValidationError as e:
        raise SettingsError(f"invalid limits in {path}: {e}")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return load_settings()


def reset_settings() -> None:
    get_settings.cache_clear()
