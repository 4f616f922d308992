"""Fixtures for the alignment-engine test suite.

The shared instance and corpus builders live in ``helpers``; only fixtures
belong here.
"""

from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
