"""Vectorised numpy engine.

Same arithmetic as the numba kernels, organised across paths instead of along
them.  Path ensembles are processed in chunks so peak memory stays bounded.
"""

from __future__ import annotations

import numpy as np

from . import _common as C

_U64 = np.uint64
_GOLDEN = _U64(C.GOLDEN)
_MIX1 = _U64(C.MIX1)
_MIX2 = _U64(C.MIX2)
_S30, _S27, _S31, _S12 = _U64(30), _U64(27), _U64(31), _U64(12)

# elements per chunk of the (paths x steps) work arrays
CHUNK_ELEMENTS = 1 << 21


def _mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def path_keys(seed: int, path_ids, stream: int) -> np.ndarray:
    ids = np.asarray(path_ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        k0 = _U64(C.mix64(seed ^ C.SEED_SALT))
        k = _mix64(k0 + (ids + _U64(1)) * _GOLDEN)
        return _mix64(k + _U64(((stream + 1) * C.STREAM_GAMMA) & C.MASK64))


def uniforms_from_keys(keys: np.ndarray, n: int, start: int = 0) -> np.ndarray:
    counters = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        b = _mix64(keys[:, None] + counters[None, :] * _GOLDEN)
    return ((b >> _S12).astype(np.float64) + 0.5) * C.TWO_M52


def _horner(c, x):
    acc = np.full_like(x, c[7])
    for coef in c[6::-1]:
        acc = acc * x + coef
    return acc


def ndtri(p: np.ndarray) -> np.ndarray:
    """AS241 inverse normal CDF, same operation order as the scalar kernels."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    z = np.empty_like(p)
    central = np.abs(q) <= 0.425
    qc = q[central]
    rc = 0.180625 - qc * qc
    z[central] = qc * _horner(C.A, rc) / _horner(C.B, rc)
    tail = ~central
    qt = q[tail]
    r = np.sqrt(-np.log(np.where(qt < 0, p[tail], 1.0 - p[tail])))
    near = r <= 5.0
    zt = np.empty_like(r)
    rn = r[near] - 1.6
    zt[near] = _horner(C.CC, rn) / _horner(C.D, rn)
    rf = r[~near] - 5.0
    zt[~near] = _horner(C.E, rf) / _horner(C.F, rf)
    z[tail] = np.where(qt < 0, -zt, zt)
    return z


def normals_from_keys(keys: np.ndarray, n: int) -> np.ndarray:
    return ndtri(uniforms_from_keys(keys, n))


def normals(seed: int, path_ids, stream: int, n: int) -> np.ndarray:
    return normals_from_keys(path_keys(seed, path_ids, stream), n)


def uniforms(seed: int, path_ids, stream: int, n: int) -> np.ndarray:
    return uniforms_from_keys(path_keys(seed, path_ids, stream), n)


def _chunks(n_paths: int, n_steps: int):
    size = max(1, CHUNK_ELEMENTS // max(n_steps, 1))
    for lo in range(0, n_paths, size):
        yield lo, min(lo + size, n_paths)


def market_paths(seed, path_ids, sqrt_dt, dt, gain, var_m, advance, a, rec_idx, bridge):
    ids = np.asarray(path_ids, dtype=np.uint64)
    n_paths, n_steps, n_rec = ids.shape[0], dt.shape[0], rec_idx.shape[0]
    s1_rec = np.empty((n_paths, n_rec))
    m_rec = np.empty((n_paths, n_rec))
    mmin_rec = np.empty((n_paths, n_rec))
    stop = np.empty(n_paths, dtype=np.int64)
    adv = advance.astype(bool)
    safe_var = np.where(adv & (var_m > 0), var_m, 1.0)
    for lo, hi in _chunks(n_paths, n_steps):
        z = normals(seed, ids[lo:hi], C.STREAM_BROWNIAN, n_steps)
        db = sqrt_dt * z
        logs = np.zeros((hi - lo, n_steps + 1))
        np.cumsum(db - 0.5 * dt, axis=1, out=logs[:, 1:])
        inc = np.where(adv, gain * db, 0.0)
        raw = np.zeros((hi - lo, n_steps + 1))
        np.cumsum(inc, axis=1, out=raw[:, 1:])
        prev, nxt = raw[:, :-1], raw[:, 1:]
        event = adv & (nxt >= a)
        if bridge:
            u = uniforms(seed, ids[lo:hi], C.STREAM_BRIDGE, n_steps)
            below = adv & (nxt < a)
            with np.errstate(over="ignore", invalid="ignore"):
                p = np.where(below, np.exp(-2.0 * (a - prev) * (a - nxt) / safe_var), 0.0)
            event |= below & (u < p)
        hit = event.any(axis=1)
        first = np.argmax(event, axis=1) + 1
        st = np.where(hit, first, -1)
        node = np.arange(n_steps + 1)
        stopped_at = hit[:, None] & (node[None, :] >= first[:, None])
        m = np.where(stopped_at, a, raw)
        mmin = np.minimum.accumulate(m, axis=1)
        s1_rec[lo:hi] = np.exp(logs[:, rec_idx])
        m_rec[lo:hi] = m[:, rec_idx]
        mmin_rec[lo:hi] = mmin[:, rec_idx]
        stop[lo:hi] = st
    return s1_rec, m_rec, mmin_rec, stop


def s1_paths(seed, path_ids, sqrt_dt, dt):
    ids = np.asarray(path_ids, dtype=np.uint64)
    z = normals(seed, ids, C.STREAM_BROWNIAN, dt.shape[0])
    logs = np.zeros((ids.shape[0], dt.shape[0] + 1))
    np.cumsum(sqrt_dt * z - 0.5 * dt, axis=1, out=logs[:, 1:])
    return np.exp(logs)


def hedge_terminal(seed, path_ids, sqrt_dt, dt, t_left, delta_fn, w0):
    """Terminal self-financing wealth and terminal S1 of the discrete delta hedge.

    ``delta_fn(t, s)`` is a vectorised hedge ratio evaluated at left nodes.
    """
    ids = np.asarray(path_ids, dtype=np.uint64)
    n_paths, n_steps = ids.shape[0], dt.shape[0]
    wealth = np.empty(n_paths)
    s1_end = np.empty(n_paths)
    for lo, hi in _chunks(n_paths, n_steps):
        s1 = s1_paths(seed, ids[lo:hi], sqrt_dt, dt)
        pos = delta_fn(t_left[None, :], s1[:, :-1])
        flows = np.empty((hi - lo, n_steps + 1))
        flows[:, 0] = w0
        flows[:, 1:] = pos * np.diff(s1, axis=1)
        wealth[lo:hi] = np.cumsum(flows, axis=1)[:, -1]
        s1_end[lo:hi] = s1[:, -1]
    return wealth, s1_end
