import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("hamcap", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("hamcap")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
