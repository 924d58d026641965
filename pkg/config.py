"""Configuration module for the division-of-labor toolkit.

This module provides configuration settings using Pydantic Settings.
Environment variables can be used to override default values.
"""

import os

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings.

    All settings can be overridden via environment variables.
    Example: export RATE_REFRESH_INTERVAL=65536
    """

    # Logging Configuration
    LOG_DIR: str = os.path.join(os.path.dirname(os.path.abspath(__file__)), "logs")
    """Directory for rotating log files"""

    LOG_LEVEL: str = "INFO"
    """Level applied to every module logger"""

    LOG_MAX_BYTES: int = 10 * 1024 * 1024
    """Rotate a log file once it reaches this size (10MB)"""

    LOG_BACKUP_COUNT: int = 5
    """Rotated log files kept per logger"""

    # Engine Configuration
    RATE_REFRESH_INTERVAL: int = 2 ** 20
    """Events between full rebuilds of the Gillespie rate table"""

    RNG_BLOCK_SIZE: int = 4096
    """Variates drawn per refill of a buffered random stream"""

    EVENT_LOG_CAPACITY: int = 1_000_000
    """Ring-buffer size of the optional event log"""

    HITTING_MAX_EVENTS: int = 10_000_000
    """Events allowed in a single hitting-time replicate before giving up"""

    # Exact Analysis Configuration
    EXHAUSTIVE_ABSORBING_LIMIT: int = 20
    """Largest N for which absorbing states are found by brute force"""

    CONFIGURATION_CHAIN_LIMIT: int = 14
    """Largest N for the full 2^N configuration generator"""

    # Dual / Sweep Configuration
    DUAL_BURNIN_FRACTION: float = 0.5
    """Share of the horizon discarded before agreement densities are averaged"""

    DEFAULT_WORKERS: int = 1
    """Worker processes used by sweeps when --workers is not given"""

    OUTPUT_VERSION: str = "1.0.0"
    """Version stamped on the metadata line of every CSV file"""

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8",
                                      case_sensitive=True)


# Global settings instance
settings = Settings()
