import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pareto_series(rng, n, alpha=2.0, xmin=10.0):
    return xmin * (1.0 - rng.random(n)) ** (-1.0 / (alpha - 1.0))
