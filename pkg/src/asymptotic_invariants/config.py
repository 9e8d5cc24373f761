"""Configuration management for asymptotic invariants."""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv
from rich.logging import RichHandler

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def get_project_root() -> Path:
    """Get the project root directory."""
    return Path(__file__).parent.parent.parent


def get_data_dir() -> Path:
    """Get the data directory path."""
    return get_project_root() / "data"


def get_field_config(name: str) -> Path:
    """Get the path of a shipped field config, e.g. ``tube_pair``."""
    return get_data_dir() / f"{name}.cfg"


def get_budgets_file() -> Path:
    """Get the budgets.yaml file path."""
    return get_data_dir() / "budgets.yaml"


def _load_env() -> None:
    env_file = get_project_root() / ".env"
    if env_file.exists():
        _ = load_dotenv(env_file)


def get_thread_count() -> int:
    """Get the worker cap from AI_THREADS, falling back to hardware parallelism.

    Returns:
        Number of worker threads to use (at least 1)

    Raises:
        ValueError: If AI_THREADS is set but is not a positive integer
    """
    _load_env()

    raw = os.getenv("AI_THREADS")
    if not raw:
        return os.cpu_count() or 1

    try:
        threads = int(raw)
    except ValueError:
        threads = 0
    if threads < 1:
        msg = f"Invalid AI_THREADS value: {raw!r}"
        raise ValueError(msg)

    return threads


def get_log_level() -> str:
    """Get the log level from ASYMINV_LOG_LEVEL, defaulting to WARNING."""
    _load_env()

    level = (os.getenv("ASYMINV_LOG_LEVEL") or "WARNING").upper()
    if level not in _LOG_LEVELS:
        level = "WARNING"

    return level


def setup_logging(verbose: bool = False) -> None:
    """Route library logging through a rich handler.

    Args:
        verbose: Force DEBUG level regardless of the environment
    """
    root = logging.getLogger()
    root.setLevel("DEBUG" if verbose else get_log_level())

    if not any(isinstance(h, RichHandler) for h in root.handlers):
        root.addHandler(RichHandler(show_path=False, markup=False))
