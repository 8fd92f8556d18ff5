"""Monte Carlo library for a complete economy without free lunch in which a
European call on a traded asset has a negative price.

Set ``NEGCALL_USE_NUMBA=0`` to force the pure-numpy kernels.
"""

__version__ = "0.1.0"

from ._accel import HAS_NUMBA, numba_enabled
from .analytics import (
    bs_delta,
    bs_price,
    digital_delta,
    digital_price,
    hitting_tail,
    normal_cdf,
    qv_time,
    ruin_tail,
)
from .economy import (
    ATM_CALL,
    CLAIMS,
    DIGITAL_CALL,
    UNIT_BOND,
    Claim,
    expected_means,
    simulate_ensemble,
    simulate_exact_law,
    simulate_market_path,
)
from .errors import (
    ConfigError,
    DomainError,
    EmptyEnsembleError,
    GridSpecError,
    MismatchError,
    UnsupportedNotionError,
)
from .pathgen import GridSpec, TimeGrid, make_grid, sample_brownian
from .stats import TestReport

__all__ = [
    "__version__",
    "HAS_NUMBA",
    "numba_enabled",
    "bs_price",
    "bs_delta",
    "digital_price",
    "digital_delta",
    "hitting_tail",
    "normal_cdf",
    "qv_time",
    "ruin_tail",
    "Claim",
    "ATM_CALL",
    "DIGITAL_CALL",
    "UNIT_BOND",
    "CLAIMS",
    "simulate_market_path",
    "simulate_ensemble",
    "simulate_exact_law",
    "expected_means",
    "GridSpec",
    "TimeGrid",
    "make_grid",
    "sample_brownian",
    "TestReport",
    "ConfigError",
    "DomainError",
    "EmptyEnsembleError",
    "GridSpecError",
    "MismatchError",
    "UnsupportedNotionError",
]
