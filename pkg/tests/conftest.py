"""Shared test configuration."""

import os

import pytest
from hypothesis import HealthCheck, settings

# Simulations are slow compared to hypothesis' default deadline.
settings.register_profile(
    "ci", deadline=None, suppress_health_check=(HealthCheck.too_slow,), max_examples=50
)
settings.register_profile("dev", deadline=None, max_examples=20)
settings.load_profile("ci" if "CI" in os.environ else "dev")


@pytest.fixture(autouse=True)
def single_thread(monkeypatch: pytest.MonkeyPatch) -> None:
    """Runs every test on one thread unless the test sets CHAOSLAB_THREADS itself."""
    monkeypatch.setenv("CHAOSLAB_THREADS", "1")
