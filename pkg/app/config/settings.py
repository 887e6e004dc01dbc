"""
Application settings module.
This module contains all configuration settings for the application.
"""
import logging
import os
from typing import List

logger = logging.getLogger(__name__)


def env_int(name: str, default: int) -> int:
    """Read an integer environment variable, falling back to default when unset or malformed."""
    raw = os.environ.get(name, "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r: not an integer, using %s", name, raw, default)
        return default


def env_float(name: str, default: float) -> float:
    """Read a float environment variable, falling back to default when unset or malformed."""
    raw = os.environ.get(name, "").strip()
    if not raw:
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r: not a number, using %s", name, raw, default)
        return default


# Reproducibility settings; RELDEP_SEED is read again at run time by the CLI
DEFAULT_SEED = env_int("RELDEP_SEED", 0)

# Test settings
DEFAULT_ALPHA = env_float("RELDEP_ALPHA", 0.05)
SMALL_M_THRESHOLD = env_int("RELDEP_SMALL_M", 100)

# Experiment settings
DEFAULT_JOBS = env_int("RELDEP_JOBS", 1)
OUTPUT_DIR = os.environ.get("RELDEP_OUTPUT_DIR", "results/")
DEFAULT_TRIALS = 200

# Logging settings
LOG_LEVEL = os.environ.get("RELDEP_LOG_LEVEL", "WARNING")

# API settings
API_HOST = os.environ.get("API_HOST", "0.0.0.0")
API_PORT = env_int("API_PORT", 8000)
ALLOWED_USER_AGENTS: List[str] = [
    agent.strip() for agent in os.environ.get("ALLOWED_USER_AGENTS", "").split(",") if agent.strip()
]

# Application settings
APP_NAME = "reldep"
APP_VERSION = "0.1.0"
