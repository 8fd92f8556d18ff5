import numpy as np
import pytest

from negcall import economy
from negcall._accel import HAS_NUMBA
from negcall.pathgen import GridSpec, make_grid

ENGINES = ["numpy"] + (["numba"] if HAS_NUMBA else [])


@pytest.fixture(params=ENGINES)
def engine(request):
    return request.param


@pytest.fixture(scope="session")
def qv_grid():
    return make_grid(GridSpec("uniform_qv", 512, 40.0))


@pytest.fixture(scope="session")
def t_grid():
    return make_grid(GridSpec("uniform_t", 64))


@pytest.fixture(scope="session")
def qv_ensemble(qv_grid):
    return economy.simulate_ensemble(qv_grid, economy.ATM_CALL, 4000, seed=11, nodes=np.arange(qv_grid.n_nodes))
