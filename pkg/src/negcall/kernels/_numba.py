"""numba engine: one path per ``prange`` iteration, nothing shared between paths.

Each path writes only its own output rows, so results do not depend on the
number of worker threads or on scheduling.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from . import _common as C

_GOLDEN = np.uint64(C.GOLDEN)
_MIX1 = np.uint64(C.MIX1)
_MIX2 = np.uint64(C.MIX2)
_SALT = np.uint64(C.SEED_SALT)
_GAMMA = np.uint64(C.STREAM_GAMMA)
_ONE = np.uint64(1)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S12 = np.uint64(12)
_TWO_M52 = C.TWO_M52
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

_A = np.array(C.A)
_B = np.array(C.B)
_C = np.array(C.CC)
_D = np.array(C.D)
_E = np.array(C.E)
_F = np.array(C.F)

CLAIM_CALL = 0
CLAIM_DIGITAL = 1
CLAIM_CONSTANT = 2


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def path_key(seed, path_id, stream):
    k = _mix64(seed ^ _SALT)
    k = _mix64(k + (path_id + _ONE) * _GOLDEN)
    return _mix64(k + (stream + _ONE) * _GAMMA)


@njit(cache=True, inline="always")
def _uniform(key, counter):
    b = _mix64(key + (counter + _ONE) * _GOLDEN)
    return (float(b >> _S12) + 0.5) * _TWO_M52


@njit(cache=True, inline="always")
def _horner(c, x):
    acc = c[7]
    for i in range(6, -1, -1):
        acc = acc * x + c[i]
    return acc


@njit(cache=True)
def ndtri(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _horner(_A, r) / _horner(_B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        z = _horner(_C, r) / _horner(_D, r)
    else:
        r -= 5.0
        z = _horner(_E, r) / _horner(_F, r)
    return -z if q < 0 else z


@njit(cache=True, inline="always")
def _normal(key, counter):
    return ndtri(_uniform(key, counter))


@njit(cache=True, parallel=True)
def normals(seed, path_ids, stream, n):
    out = np.empty((path_ids.shape[0], n))
    for p in prange(path_ids.shape[0]):
        key = path_key(seed, path_ids[p], stream)
        for k in range(n):
            out[p, k] = _normal(key, np.uint64(k))
    return out


@njit(cache=True, parallel=True)
def uniforms(seed, path_ids, stream, n):
    out = np.empty((path_ids.shape[0], n))
    for p in prange(path_ids.shape[0]):
        key = path_key(seed, path_ids[p], stream)
        for k in range(n):
            out[p, k] = _uniform(key, np.uint64(k))
    return out


@njit(cache=True, parallel=True)
def market_paths(seed, path_ids, sqrt_dt, dt, gain, var_m, advance, a, rec_idx, bridge):
    n_paths = path_ids.shape[0]
    n_steps = dt.shape[0]
    n_rec = rec_idx.shape[0]
    s1_rec = np.empty((n_paths, n_rec))
    m_rec = np.empty((n_paths, n_rec))
    mmin_rec = np.empty((n_paths, n_rec))
    stop = np.empty(n_paths, dtype=np.int64)
    b_stream = np.uint64(C.STREAM_BROWNIAN)
    u_stream = np.uint64(C.STREAM_BRIDGE)
    for p in prange(n_paths):
        kb = path_key(seed, path_ids[p], b_stream)
        ku = path_key(seed, path_ids[p], u_stream)
        logs = 0.0
        m = 0.0
        mmin = 0.0
        st = -1
        r = 0
        if rec_idx[0] == 0:
            s1_rec[p, 0] = 1.0
            m_rec[p, 0] = 0.0
            mmin_rec[p, 0] = 0.0
            r = 1
        for k in range(n_steps):
            z = _normal(kb, np.uint64(k))
            db = sqrt_dt[k] * z
            logs += db - 0.5 * dt[k]
            if st < 0 and advance[k]:
                m_new = m + gain[k] * db
                if m_new >= a:
                    st = k + 1
                    m = a
                else:
                    x = -2.0 * (a - m) * (a - m_new) / var_m[k]
                    # exp(-40) is below the smallest uniform, so no crossing is possible
                    if bridge and x > -40.0 and _uniform(ku, np.uint64(k)) < math.exp(x):
                        st = k + 1
                        m = a
                    else:
                        m = m_new
                if m < mmin:
                    mmin = m
            while r < n_rec and rec_idx[r] == k + 1:
                s1_rec[p, r] = math.exp(logs)
                m_rec[p, r] = m
                mmin_rec[p, r] = mmin
                r += 1
        stop[p] = st
    return s1_rec, m_rec, mmin_rec, stop


@njit(cache=True)
def _ncdf(x):
    return 0.5 * math.erfc(-x * _INV_SQRT2)


@njit(cache=True)
def claim_delta(code, strike, rem, s):
    if code == CLAIM_CONSTANT:
        return 0.0
    sq = math.sqrt(rem)
    d1 = (math.log(s / strike) + 0.5 * rem) / sq
    if code == CLAIM_CALL:
        return _ncdf(d1)
    d2 = d1 - sq
    return math.exp(-0.5 * d2 * d2) * _INV_SQRT2PI / (s * sq)


@njit(cache=True, parallel=True)
def hedge_terminal(seed, path_ids, sqrt_dt, dt, rem_left, code, strike, w0):
    n_paths = path_ids.shape[0]
    n_steps = dt.shape[0]
    wealth = np.empty(n_paths)
    s1_end = np.empty(n_paths)
    b_stream = np.uint64(C.STREAM_BROWNIAN)
    for p in prange(n_paths):
        kb = path_key(seed, path_ids[p], b_stream)
        logs = 0.0
        s = 1.0
        w = w0
        for k in range(n_steps):
            z = _normal(kb, np.uint64(k))
            logs += sqrt_dt[k] * z - 0.5 * dt[k]
            s_new = math.exp(logs)
            w += claim_delta(code, strike, rem_left[k], s) * (s_new - s)
            s = s_new
        wealth[p] = w
        s1_end[p] = s
    return wealth, s1_end
