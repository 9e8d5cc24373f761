"""Tests for configuration management."""

import logging

import pytest
from rich.logging import RichHandler

from asymptotic_invariants import config


def test_get_project_root():
    """Test getting project root directory."""
    root = config.get_project_root()
    assert root.is_dir()
    assert (root / "pyproject.toml").exists()


def test_get_data_dir():
    """Test getting data directory path."""
    data_dir = config.get_data_dir()
    assert data_dir == config.get_project_root() / "data"


def test_get_field_config():
    """Test shipped field configs resolve inside the data directory."""
    path = config.get_field_config("tube_pair")
    assert path == config.get_data_dir() / "tube_pair.cfg"
    assert path.exists()


def test_get_budgets_file():
    """Test getting budgets.yaml file path."""
    budgets_file = config.get_budgets_file()
    assert budgets_file.name == "budgets.yaml"
    assert budgets_file.exists()


def test_thread_count_default(monkeypatch):
    """Test thread count falls back to the core count."""
    monkeypatch.setattr("os.cpu_count", lambda: 6)
    assert config.get_thread_count() == 6


def test_thread_count_unknown_cores(monkeypatch):
    """Test thread count is 1 when the core count is unknown."""
    monkeypatch.setattr("os.cpu_count", lambda: None)
    assert config.get_thread_count() == 1


def test_thread_count_from_env(monkeypatch):
    """Test AI_THREADS caps the worker count."""
    monkeypatch.setenv("AI_THREADS", "3")
    assert config.get_thread_count() == 3


@pytest.mark.parametrize("value", ["zero", "0", "-2", "1.5"])
def test_thread_count_invalid(monkeypatch, value):
    """Test invalid AI_THREADS values are rejected."""
    monkeypatch.setenv("AI_THREADS", value)
    with pytest.raises(ValueError, match="Invalid AI_THREADS"):
        _ = config.get_thread_count()


def test_log_level_default():
    """Test log level defaults to WARNING."""
    assert config.get_log_level() == "WARNING"


def test_log_level_from_env(monkeypatch):
    """Test log level from environment, case-insensitive, unknown values ignored."""
    monkeypatch.setenv("ASYMINV_LOG_LEVEL", "info")
    assert config.get_log_level() == "INFO"

    monkeypatch.setenv("ASYMINV_LOG_LEVEL", "chatty")
    assert config.get_log_level() == "WARNING"


def test_setup_logging_installs_one_handler():
    """Test setup_logging adds a single rich handler and honours verbose."""
    root = logging.getLogger()
    saved = (root.level, list(root.handlers))
    try:
        config.setup_logging(verbose=True)
        config.setup_logging(verbose=True)
        rich_handlers = [h for h in root.handlers if isinstance(h, RichHandler)]
        assert len(rich_handlers) == 1
        assert root.level == logging.DEBUG
    finally:
        root.setLevel(saved[0])
        root.handlers[:] = saved[1]
