import numpy as np
import pytest
from hypothesis import settings

from heisineq.hgroup import HPoint

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_points(rng, m, n=1, scale=1.0):
    return HPoint.from_real(rng.uniform(-scale, scale, (m, 2 * n + 1)))


def H(*c):
    return HPoint.from_real(np.array(c, dtype=float))
