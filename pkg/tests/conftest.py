from collections import Counter

import numpy as np
import pytest
from hypothesis import strategies as st

from pd_dual.common.config import Settings
from pd_dual.common.objects import Frequencies, Params, Partition

# exact parameter grid, θ < 0 included
PARAMS_GRID = [
    Params.of("0", "1"),
    Params.of("1/2", "1"),
    Params.of("1/3", "2"),
    Params.of("1/2", "-1/4"),
]

# desk-scale Monte-Carlo acceptance
MC_SETTINGS = Settings(z_threshold=4.0, p_floor=1e-4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_atoms():
    return Frequencies.from_atoms(["0.6", "0.4"])


@pytest.fixture
def three_atoms():
    return Frequencies.from_atoms(["0.5", "0.3", "0.2"])


@st.composite
def partitions(draw, max_n=8):
    n = draw(st.integers(min_value=1, max_value=max_n))
    bins = draw(st.lists(st.integers(min_value=0, max_value=n - 1), min_size=n, max_size=n))
    return Partition(Counter(bins).values())
