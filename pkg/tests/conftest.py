import numpy as np
import pytest

import conepart as cp


@pytest.fixture(scope="session")
def g3():
    return cp.make_group(3, 1)


@pytest.fixture(scope="session")
def fan3(g3):
    return cp.voronoi_fan(g3, [1.0, 0.0, 0.0])


@pytest.fixture(scope="session")
def ball3():
    return cp.UniformBall(center=np.zeros(3), radius=1.0)


@pytest.fixture(scope="session")
def ball_cloud(ball3):
    # 30000 is divisible by 6, so an exactly balanced labeling exists
    return cp.sample(ball3, 30000, seed=42)
