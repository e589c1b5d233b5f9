"""
core/settings.py - Process-level settings read from the environment

Only ambient behaviour (logging) is controlled here. Numerical results never
depend on the environment; those live in the run configuration.
"""

import os
from typing import Optional

from dotenv import load_dotenv

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
LOG_FORMATS = ("json", "text")


class Settings:
    """
    Environment-driven settings.

    Reads:
    - PASSIVE_DECOY_LOG_LEVEL: one of DEBUG/INFO/WARNING/ERROR/CRITICAL (default WARNING)
    - PASSIVE_DECOY_LOG_FORMAT: "json" (default) or "text"
    """

    def __init__(self):
        level = os.getenv("PASSIVE_DECOY_LOG_LEVEL", "WARNING").upper().strip()
        self.log_level = level if level in LOG_LEVELS else "WARNING"

        log_format = os.getenv("PASSIVE_DECOY_LOG_FORMAT", "json").lower().strip()
        self.log_format = log_format if log_format in LOG_FORMATS else "json"

    def is_json_logging(self) -> bool:
        """Check if structured JSON logging is enabled."""
        return self.log_format == "json"


# Singleton instance
_settings: Optional[Settings] = None


def get_settings(reload: bool = False) -> Settings:
    """Get the singleton settings instance, loading `.env` on first use."""
    global _settings
    if _settings is None or reload:
        load_dotenv()
        _settings = Settings()
    return _settings
