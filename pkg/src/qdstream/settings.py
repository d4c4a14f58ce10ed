from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# shipped as package data, so the path holds for editable and regular installs
PACKAGE_CONFIGS = Path(__file__).resolve().parent / "configs"


class Settings(BaseSettings):
    """
    Runtime settings from environment variables / .env.
    Physical parameters live in the key = value config files, not here.
    """

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    config_path: Optional[str] = Field(default=None, alias="QDSTREAM_CONFIG")
    configs_dir: str = Field(default=str(PACKAGE_CONFIGS), alias="QDSTREAM_CONFIGS_DIR")
    output_dir: str = Field(default="outputs", alias="QDSTREAM_OUTPUT_DIR")

    # Monte Carlo
    seed: int = Field(default=20170614, ge=0, lt=2**64, alias="QDSTREAM_SEED")
    workers: int = Field(default=1, ge=1, alias="QDSTREAM_WORKERS")
    chunk_pulses: int = Field(default=65536, ge=1024, alias="QDSTREAM_CHUNK_PULSES")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
