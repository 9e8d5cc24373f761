"""Pytest configuration and shared fixtures."""

import pytest

from asymptotic_invariants import curves


@pytest.fixture(autouse=True)
def reset_environment(monkeypatch):
    """Reset environment variables for each test."""
    monkeypatch.delenv("AI_THREADS", raising=False)
    monkeypatch.delenv("ASYMINV_LOG_LEVEL", raising=False)


@pytest.fixture
def hopf():
    """Right-handed Hopf link, 256 points per component."""
    return curves.hopf_link(256)


@pytest.fixture
def unknot():
    """Round unit circle, 256 points."""
    return curves.circle(256)


@pytest.fixture
def trefoil():
    """Trefoil knot, 256 points."""
    return curves.trefoil(256)


@pytest.fixture
def figure_eight():
    """Figure-eight knot, 256 points."""
    return curves.figure_eight(256)
