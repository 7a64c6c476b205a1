"""
Laboratory configuration using Pydantic Settings
"""

from functools import lru_cache
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Application
    APP_NAME: str = "PMCM Lab"
    APP_VERSION: str = "0.1.0"
    DEBUG: bool = False

    # File Storage
    SCENARIO_PATH: str = "data/scenarios"
    OUTPUT_PATH: str = "output"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_EVERY: int = 5000  # iterations between solver progress lines

    # Quadrature
    GAUSS_LEGENDRE_DEGREE: int = 8
    PROFILE_PANELS: int = 4  # panels per grid segment in profile integration

    # Radial shooting
    SHOOTING_TOLERANCE: float = 1e-12
    BRACKET_SHRINK: float = 1e-9
    WINDOW_TOLERANCE: float = 1e-12  # ties at jump-window endpoints
    FEASIBILITY_TOLERANCE: float = 1e-12  # relative slack on |gamma| <= r^(n-1)

    # Primal-dual minimizer
    DEFAULT_GRID_STEP: float = 0.02
    DEFAULT_GAP_TOLERANCE: float = 1e-6
    DEFAULT_MAX_ITERATIONS: int = 1_000_000
    POWER_ITERATIONS: int = 20
    DUAL_FLOOR: float = 1e-14
    DIVERGENCE_FACTOR: float = 10.0
    GAP_CHECK_EVERY: int = 50
    JUMP_THRESHOLD: float = 1e-9  # slots below this are read as continuous

    # Measure checks
    NONEXTREMALITY_RESOLUTION: int = 256
    BALL_SAMPLES: int = 64

    # Certificates
    ANALYTIC_TOLERANCE: float = 1e-6
    DISCRETE_TOLERANCE: float = 1e-4
    TEST_BUMPS: int = 20

    # Approximation
    SMOOTHING_RESOLUTION: int = 1024
    SMOOTHING_LEVELS: int = 6
    SMOOTHING_HALVINGS: int = 40

    # Runs
    DEFAULT_SEED: int = 0
    DEFAULT_JOBS: int = 1

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True
    )


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


settings = get_settings()
