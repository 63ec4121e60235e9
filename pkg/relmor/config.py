#!/usr/bin/env python3
"""
Solver and runtime configuration for relmor.

Values come from keyword arguments, then RELMOR_* environment variables,
then an optional .env file.
"""

import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class SolverSettings(BaseSettings):
    """Numerical tolerances and execution settings with validation"""

    model_config = SettingsConfigDict(
        env_prefix="RELMOR_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Matrix-equation kernels
    residual_rel: float = 1e-10
    schur_rel: float = 1e-12
    care_residual_rel: float = 1e-8
    spectrum_conflict_rel: float = 1e-12
    newton_steps: int = 5

    # Rank and identity checks
    rank_rtol: float = 1e-12
    duality_rtol: float = 1e-8
    relerr_duality_rtol: float = 1e-7
    identity_rtol: float = 1e-8
    psd_clip_rel: float = 1e-10
    factor_rtol: float = 1e-12

    # Projections
    projection_atol: float = 1e-8
    breakdown_tol: float = 1e-12

    # Execution
    workers: int = 1
    log_level: str = "INFO"
    benchmark_dir: Optional[Path] = None

    @field_validator(
        "residual_rel", "schur_rel", "care_residual_rel", "spectrum_conflict_rel",
        "rank_rtol", "duality_rtol", "relerr_duality_rtol", "identity_rtol",
        "psd_clip_rel", "factor_rtol", "projection_atol", "breakdown_tol",
    )
    @classmethod
    def check_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"tolerance must be strictly positive, got {v}")
        return v

    @field_validator("workers", "newton_steps")
    @classmethod
    def check_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"count must be at least 1, got {v}")
        return v

    @field_validator("log_level")
    @classmethod
    def check_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in _LOG_LEVELS:
            raise ValueError(f"log_level must be one of {_LOG_LEVELS}, got {v!r}")
        return level


@lru_cache()
def get_settings() -> SolverSettings:
    """Get cached settings instance"""
    settings = SolverSettings()
    logger.debug(f"Loaded solver settings: workers={settings.workers}, residual_rel={settings.residual_rel}")
    return settings
