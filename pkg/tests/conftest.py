from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def rng_factory():
    def _make(seed: int) -> np.random.Generator:
        return np.random.default_rng(seed)

    return _make
