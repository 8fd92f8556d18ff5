"""Constants and a pure-Python reference of the counter-based generator.

Every random number is a pure function of ``(seed, path_id, stream, counter)``:

    key   = path_key(seed, path_id, stream)
    bits  = mix64(key + (counter + 1) * GOLDEN)          (mod 2**64)
    u     = ((bits >> 12) + 0.5) * 2**-52                 in (0, 1)

which is SplitMix64 evaluated at an arbitrary position of a per-path Weyl
sequence.  Normal ``k`` is the inverse normal CDF of uniform ``k``, evaluated
with Wichura's AS241 rational approximation (relative error about 1e-16).
``u`` is never exactly 0, 1 or 1/2, so normals are finite and nonzero.

The functions here operate on Python ints and are slow; they are the bit-level
oracle the numba and numpy engines are tested against.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
SEED_SALT = 0x6A09E667F3BCC909
STREAM_GAMMA = 0xD1B54A32D192ED03
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
TWO_M52 = 2.0**-52

# stream ids: one independent sequence per (path, purpose)
STREAM_BROWNIAN = 1
STREAM_BRIDGE = 2
STREAM_HITTING = 3
STREAM_MINIMUM = 4
STREAM_TERMINAL = 5


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def path_key(seed: int, path_id: int, stream: int) -> int:
    k = mix64(seed ^ SEED_SALT)
    k = mix64(k + (path_id + 1) * GOLDEN)
    return mix64(k + (stream + 1) * STREAM_GAMMA)


def bits(key: int, counter: int) -> int:
    return mix64(key + (counter + 1) * GOLDEN)


def uniform(key: int, counter: int) -> float:
    return ((bits(key, counter) >> 12) + 0.5) * TWO_M52


# AS241 (PPND16) coefficients, lowest order first
A = (3.387132872796366608, 133.14166789178437745, 1971.5909503065514427, 13731.693765509461125,
     45921.953931549871457, 67265.770927008700853, 33430.575583588128105, 2509.0809287301226727)
B = (1.0, 42.313330701600911252, 687.1870074920579083, 5394.1960214247511077,
     21213.794301586595867, 39307.89580009271061, 28729.085735721942674, 5226.495278852545925)
CC = (1.42343711074968357734, 4.6303378461565452959, 5.7694972214606914055, 3.64784832476320460504,
      1.27045825245236838258, 0.24178072517745061177, 0.0227238449892691845833, 7.7454501427834140764e-4)
D = (1.0, 2.05319162663775882187, 1.6763848301838038494, 0.68976733498510000455,
     0.14810397642748007459, 0.0151986665636164571966, 5.475938084995344946e-4, 1.05075007164441684324e-9)
E = (6.6579046435011037772, 5.4637849111641143699, 1.7848265399172913358, 0.29656057182850489123,
     0.026532189526576123093, 0.0012426609473880784386, 2.71155556874348757815e-5, 2.01033439929228813265e-7)
F = (1.0, 0.59983220655588793769, 0.13692988092273580531, 0.0148753612908506148525,
     7.868691311456132591e-4, 1.8463183175100546818e-5, 1.4215117583164458887e-7, 2.04426310338993978564e-15)


def _horner(c, x):
    acc = c[7]
    for coef in c[6::-1]:
        acc = acc * x + coef
    return acc


def ndtri(p: float) -> float:
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _horner(A, r) / _horner(B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        z = _horner(CC, r) / _horner(D, r)
    else:
        r -= 5.0
        z = _horner(E, r) / _horner(F, r)
    return -z if q < 0 else z


def normal(key: int, counter: int) -> float:
    return ndtri(uniform(key, counter))


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed
