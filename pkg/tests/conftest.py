import numpy as np
import pytest

from emitpair.em2d import PolMode
from emitpair.scan import Rect, generate_medium
from emitpair.solver import Medium2D, assemble


@pytest.fixture(scope="session")
def fact_free_tm():
    return assemble(Medium2D(1.0, PolMode.TM_SCALAR, np.empty((0, 2)), []))


@pytest.fixture(scope="session")
def fact_free_te():
    return assemble(Medium2D(1.0, PolMode.TE_TENSOR, np.empty((0, 2)), []))


@pytest.fixture(scope="session")
def fact_te_50():
    med = generate_medium(42, 50, Rect(-0.7, -0.7, 1.4, 1.4), 2.0, 0.01,
                          PolMode.TE_TENSOR)
    return assemble(med)


@pytest.fixture(scope="session")
def fact_tm_50():
    med = generate_medium(43, 50, Rect(-0.7, -0.7, 1.4, 1.4), 2.5, 0.01,
                          PolMode.TM_SCALAR)
    return assemble(med)


def random_unit(rng) -> tuple[float, float]:
    v = rng.normal(size=2)
    v /= np.hypot(*v)
    return (float(v[0]), float(v[1]))


def random_point_clear_of(positions, rng, box: float, min_dist: float = 1e-3):
    while True:
        p = rng.uniform(-box, box, 2)
        if positions.shape[0] == 0:
            return (float(p[0]), float(p[1]))
        if np.min(np.hypot(positions[:, 0] - p[0], positions[:, 1] - p[1])) > min_dist:
            return (float(p[0]), float(p[1]))
