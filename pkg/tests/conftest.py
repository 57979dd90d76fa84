"""Shared fixtures for the voxpick test suite."""

import numpy as np
import pytest

from voxpick.pipeline import run
from voxpick.templates import sink_scenario


@pytest.fixture(scope="session")
def sink_bundle():
    """One full sink-scene pipeline run shared across the suite."""
    return run(sink_scenario())


@pytest.fixture
def rng():
    return np.random.default_rng(0)
