"""Tunables for coreset builds, read from ``RINGCORE_*`` variables and an optional ``.env``."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Literal, Optional

from dotenv import load_dotenv
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# A missing .env is fine.
load_dotenv(dotenv_path=Path(".env"), override=False)


class Settings(BaseSettings):
    """Budget constants, solver limits and run defaults shared by every module."""

    model_config = SettingsConfigDict(
        env_prefix="RINGCORE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Runtime
    log_level: str = Field(default="INFO")
    threads: int = Field(default=1, ge=1, description="Worker cap for every thread pool.")

    # Sampling budgets (the leading constants hidden by the O-tilde bounds)
    budget_c0: float = Field(default=8.0, gt=0, description="Assignment-preserving ring budget constant.")
    budget_c1: float = Field(default=8.0, gt=0, description="Unconstrained ring budget constant.")
    budget_form: Literal["eps5", "eps3_with_dim"] = Field(default="eps5")

    # Bicriteria
    alpha_budget: Optional[float] = Field(
        default=None, ge=0, description="Override for the composer's alpha; default is 2^(2z+2)."
    )
    beta: float = Field(default=1.0, ge=1.0)
    seed_oversampling: float = Field(default=1.0, ge=1.0)
    swap_candidates: int = Field(default=10, ge=0, description="Swap pool size per center.")

    # Metric backends
    graph_cache_size: int = Field(default=256, ge=1)
    graph_sdim: float = Field(default=4.0, gt=0)
    frechet_sdim_constant: float = Field(default=1.0, gt=0)
    frechet_center_length: Optional[int] = Field(
        default=None, ge=1, description="Center curve complexity; defaults to the longest input curve."
    )

    # Transportation solver
    simplex_max_cells: int = Field(default=512, ge=0)
    mass_tolerance: float = Field(default=1e-6, ge=0)

    # Evaluation
    eval_trials: int = Field(default=200, ge=1)
    eval_threshold: Optional[float] = Field(default=None, gt=0)

    # IO
    http_timeout: float = Field(default=30.0, gt=0)
    out_dir: Path = Field(default_factory=lambda: Path("out"))

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, v: str) -> str:
        return v.strip().upper()

    def alpha_for(self, z: float) -> float:
        """Return the alpha the composer rescales epsilon by."""

        if self.alpha_budget is not None:
            return float(self.alpha_budget)
        return float(2.0 ** (2.0 * z + 2.0))


@lru_cache()
def get_settings() -> Settings:
    """Process-wide settings, built once from the environment."""

    return Settings()


def resolve_settings(settings: Settings | None) -> Settings:
    """Return ``settings`` or the cached process-wide instance."""

    return settings if settings is not None else get_settings()
