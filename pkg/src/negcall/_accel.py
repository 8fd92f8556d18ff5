"""Engine selection for the hot kernels.

The numba kernels are used when numba imports and ``NEGCALL_USE_NUMBA`` is not
set to a false value (``0``, ``false``, ``no``, ``off``).  Otherwise every kernel
runs through its vectorised numpy twin.  Callers may also pass
``engine="numpy"`` / ``engine="numba"`` explicitly.
"""

from __future__ import annotations

import os

try:
    import numba

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skip probing for TBB, which warns on old installs
        numba.config.THREADING_LAYER = "workqueue"
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

_FALSE = {"0", "false", "no", "off"}

ENGINES = ("numba", "numpy")


def numba_enabled() -> bool:
    flag = os.environ.get("NEGCALL_USE_NUMBA", "1").strip().lower()
    return HAS_NUMBA and flag not in _FALSE


def resolve_engine(engine: str | None = None) -> str:
    if engine is None:
        return "numba" if numba_enabled() else "numpy"
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    if engine == "numba" and not HAS_NUMBA:
        raise RuntimeError("engine='numba' requested but numba is not installed")
    return engine


def set_threads(n: int | None) -> None:
    """Set the numba worker count (no-op for the numpy engine)."""
    if n is None or not HAS_NUMBA:
        return
    import numba

    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)


def get_threads() -> int:
    if not HAS_NUMBA:
        return 1
    import numba

    return numba.get_num_threads()


def max_threads() -> int:
    if not HAS_NUMBA:
        return 1
    import numba

    return int(numba.config.NUMBA_NUM_THREADS)
