import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260818)


@pytest.fixture
def probes(rng):
    """Random probe cloud away from the far tail, shape (200, 3)."""
    p = np.empty((200, 3))
    p[:, 0] = rng.uniform(-2.0, 2.0, 200)
    p[:, 1] = rng.uniform(-2.0, 2.0, 200)
    p[:, 2] = rng.uniform(-4.0, 4.0, 200)
    return p


@pytest.fixture(scope="session")
def small_solver():
    # one coarse grid shared by the reduce tests; setup is the
    # expensive part (AMG hierarchy), the solves are cheap
    from cryamabe.reduce import GridSpec, ReductionSolver

    return ReductionSolver(GridSpec(4.0, 25, 25, 19))
