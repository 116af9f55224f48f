import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("bbenc", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("bbenc")


@pytest.fixture(autouse=True)
def _no_phase_cache(monkeypatch):
    # keep solver runs independent of any cache left by the CLI
    monkeypatch.delenv("BBENC_CACHE_DIR", raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
