import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


def quaternions(shape=()):
    """Hypothesis strategy for quaternion arrays with bounded components."""
    return hnp.arrays(np.float64, tuple(shape) + (4,), elements=finite)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
