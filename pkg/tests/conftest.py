import os

import numpy as np
import pytest

from isdsim.levels import load_level_scheme
from isdsim.pulses import TwoColorGate

TARGET_STATE = np.array([1.0, -1j]) / np.sqrt(2.0)


@pytest.fixture(scope="session")
def scheme():
    return load_level_scheme()


@pytest.fixture(scope="session")
def gate():
    return TwoColorGate.not_gate()


@pytest.fixture(scope="session")
def cache_dir():
    """Shared artifact cache; honors ISDSIM_CACHE_DIR so CI can persist it."""
    from isdsim.maps import cache_dir as _cd

    return _cd()
