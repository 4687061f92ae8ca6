"""
Application configuration using Pydantic Settings.
Загружает переменные окружения NLCF_* для CLI и тестов.
"""

from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process-wide defaults.

    Scenario JSON files override the numerical defaults per run; these values
    only apply where a run does not say otherwise.
    """

    model_config = SettingsConfigDict(
        env_prefix="NLCF_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    environment: Literal["development", "production", "testing"] = Field(
        default="development", description="Runtime environment"
    )

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        default="INFO", description="Logging level"
    )

    max_threads: int = Field(
        default=4,
        ge=1,
        description="Upper bound on worker threads and FFT workers",
    )

    # Quadrature
    quad_rel_tol_1d: float = Field(
        default=1e-6, gt=0, description="Default relative tolerance for 1D quadrature"
    )

    quad_rel_tol_2d: float = Field(
        default=1e-4, gt=0, description="Default relative tolerance for 2D quadrature"
    )

    # Flow engine
    cfl: float = Field(
        default=0.4, gt=0, le=1.0, description="CFL factor c_cfl in dt = c h / max|H|"
    )

    redistance_every: int = Field(
        default=5, ge=1, description="Redistance cadence in steps"
    )

    default_window: float = Field(
        default=8.0,
        gt=0,
        description="Half-width of the canonical evaluation window for unbounded shapes",
    )

    weight_cache_size: int = Field(
        default=8, ge=1, description="Number of cell-weight tables kept in memory"
    )

    # Output
    output_dir: Path = Field(default=Path("runs"), description="Root for run outputs")

    @property
    def is_development(self) -> bool:
        """Check if running in development."""
        return self.environment == "development"

    @field_validator("environment", mode="before")
    @classmethod
    def normalize_environment(cls, value: str) -> str:
        """
        Normalize environment value to lowercase and validate allowed options.

        Shell exports often carry different casing (e.g. "Testing").
        """
        if not isinstance(value, str):
            raise ValueError("environment must be a string")
        value_normalized = value.lower()
        allowed = {"development", "production", "testing"}
        if value_normalized not in allowed:
            raise ValueError(f"environment must be one of {allowed}")
        return value_normalized


@lru_cache
def get_settings() -> Settings:
    """
    Получить настройки (с кешированием).

    Returns:
        Settings: process-wide settings
    """
    return Settings()
