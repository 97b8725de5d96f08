import pathlib

import numpy as np
import pytest

from trajprior.core import Trajectory, TrajectorySet

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def random_trajectory(rng, n_points=None, scale=10.0, tid="t"):
    n = n_points if n_points is not None else int(rng.integers(2, 8))
    return Trajectory(tid, rng.normal(0.0, scale, (n, 2)))


def random_set(rng, m, **kw):
    return TrajectorySet(tuple(random_trajectory(rng, tid=f"t{i}", **kw)
                               for i in range(m)))
