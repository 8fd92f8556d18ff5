"""Hot loops behind a single dispatch point.

Both engines consume identically keyed random numbers, so the same
``(seed, path_id)`` yields the same path up to last-bit differences in the
transcendental functions of each backend.
"""

from __future__ import annotations

import numpy as np

from .._accel import resolve_engine
from . import _numpy as _np_engine
from ._common import (
    STREAM_BRIDGE,
    STREAM_BROWNIAN,
    STREAM_HITTING,
    STREAM_MINIMUM,
    STREAM_TERMINAL,
    check_seed,
)

__all__ = [
    "STREAM_BRIDGE",
    "STREAM_BROWNIAN",
    "STREAM_HITTING",
    "STREAM_MINIMUM",
    "STREAM_TERMINAL",
    "check_seed",
    "normals",
    "uniforms",
    "market_paths",
    "hedge_terminal",
]


def _nb():
    from . import _numba

    return _numba


def _ids(path_ids) -> np.ndarray:
    ids = np.atleast_1d(np.asarray(path_ids))
    if ids.size and (ids.min() < 0):
        raise ValueError("path ids must be nonnegative")
    return ids.astype(np.uint64)


def normals(seed, path_ids, stream: int, n: int, engine=None) -> np.ndarray:
    seed = check_seed(seed)
    ids = _ids(path_ids)
    if resolve_engine(engine) == "numba":
        return _nb().normals(np.uint64(seed), ids, np.uint64(stream), int(n))
    return _np_engine.normals(seed, ids, stream, int(n))


def uniforms(seed, path_ids, stream: int, n: int, engine=None) -> np.ndarray:
    seed = check_seed(seed)
    ids = _ids(path_ids)
    if resolve_engine(engine) == "numba":
        return _nb().uniforms(np.uint64(seed), ids, np.uint64(stream), int(n))
    return _np_engine.uniforms(seed, ids, stream, int(n))


def market_paths(seed, path_ids, coeffs, a: float, rec_idx, bridge: bool, engine=None):
    """Simulate S1 and the stopped integral M for many paths.

    ``coeffs`` is the step table from :func:`negcall.economy.step_coefficients`.
    Returns ``(s1_rec, m_rec, mmin_rec, stop)`` where the first three are
    sampled at the node indices ``rec_idx`` and ``stop`` is the stop index per
    path (``-1`` if the level was not reached).
    """
    seed = check_seed(seed)
    ids = _ids(path_ids)
    rec = np.ascontiguousarray(rec_idx, dtype=np.int64)
    args = (
        coeffs["sqrt_dt"],
        coeffs["dt"],
        coeffs["gain"],
        coeffs["var_m"],
        coeffs["advance"],
        float(a),
        rec,
        bool(bridge),
    )
    if resolve_engine(engine) == "numba":
        return _nb().market_paths(np.uint64(seed), ids, *args)
    return _np_engine.market_paths(seed, ids, *args)


def hedge_terminal(seed, path_ids, sqrt_dt, dt, t_left, claim, w0: float, engine=None):
    """Terminal wealth of the discrete delta hedge of ``claim`` and terminal S1."""
    seed = check_seed(seed)
    ids = _ids(path_ids)
    if resolve_engine(engine) == "numba" and claim.kernel_code is not None:
        rem = np.ascontiguousarray(1.0 - np.asarray(t_left, dtype=float))
        return _nb().hedge_terminal(
            np.uint64(seed), ids, sqrt_dt, dt, rem, int(claim.kernel_code), float(claim.strike), float(w0)
        )
    return _np_engine.hedge_terminal(seed, ids, sqrt_dt, dt, np.asarray(t_left, dtype=float), claim.delta_fn, float(w0))
