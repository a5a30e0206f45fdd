import numpy as np
import pytest
from hypothesis import settings

from phasemix import grid as G

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(params=["paper", "periodic"])
def bc(request):
    return request.param


@pytest.fixture
def small_grid(bc):
    return G.Grid(8, 6, 1.0, 0.75, bc)


def random_vector(grid, rng, scale=1.0):
    w = grid.vector()
    w.u[:] = rng.standard_normal(w.u.shape) * scale
    w.v[:] = rng.standard_normal(w.v.shape) * scale
    return G.enforce_bc(grid, w)


def dense_matrix(apply, shape):
    """Columns of a linear map on arrays of ``shape``, by unit probes."""
    n = int(np.prod(shape))
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        cols.append(np.ravel(apply(e.reshape(shape))))
    return np.array(cols).T


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
