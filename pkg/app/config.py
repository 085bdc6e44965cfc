"""Application configuration using Pydantic Settings."""

from functools import lru_cache

from pydantic import model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="PREFETCH_SIM_",
        extra="ignore",
    )

    app_name: str = "Semantic Prefetch Simulator"
    debug: bool = False
    log_level: str = "INFO"

    # Run store (experiment results)
    database_url: str = "sqlite:///./prefetch_runs.db"

    # Experiment defaults
    default_preset: str = "desk"  # desk, navigational or full

    @model_validator(mode="after")
    def _normalize_log_level(self) -> "Settings":
        """Accept lower-case level names from .env files."""
        self.log_level = self.log_level.upper()
        if self.debug:
            self.log_level = "DEBUG"
        return self


@lru_cache
def get_settings() -> Settings:
    """Get cached application settings."""
    return Settings()


settings = get_settings()
