import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20210907)


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))
