"""
Toolkit configuration using Pydantic Settings
"""

from functools import lru_cache
from typing import Literal

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Numerical settings loaded from environment variables"""

    # Separation and residual tolerances
    eps_sep: float = 1e-9
    tol_q: float = 1e-9
    off_quadric_tol: float = 1e-8
    root_merge_tol: float = 1e-7
    tangency_rel_tol: float = 1e-12

    # Quadrature
    quad_rel_tol: float = 1e-11
    quad_min_nodes: int = 16
    quad_max_nodes: int = 2 ** 14

    # ODE integration
    ode_rtol: float = 1e-11
    ode_atol: float = 1e-11
    ode_method: str = "DOP853"

    # Sampling
    default_seed: int = 20240101
    max_redraws: int = 64

    # Logging
    log_level: str = "INFO"
    log_format: Literal["json", "console"] = "json"

    class Config:
        env_prefix = "CONFOCAL_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


settings = get_settings()
