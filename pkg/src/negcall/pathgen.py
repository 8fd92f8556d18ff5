"""Time grids, Brownian increments and exact-law samplers.

Randomness comes from the counter-based generator in :mod:`negcall.kernels`,
so every draw is a pure function of ``(seed, path_id, stream, step)``.
Paths can therefore be produced in any order or on any thread and are
reproduced bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DomainError, GridSpecError, MismatchError
from .kernels import _common

GRID_KINDS = ("uniform_t", "uniform_qv")
DEFAULT_TAU_MAX = 40.0

_DUMP_MAGIC = b"NEGCALL-PATHS-1\n"


@dataclass(frozen=True)
class GridSpec:
    kind: str = "uniform_qv"
    n_steps: int = 4096
    tau_max: float = DEFAULT_TAU_MAX

    def validate(self) -> None:
        if self.kind not in GRID_KINDS:
            raise GridSpecError(f"grid kind must be one of {GRID_KINDS}, got {self.kind!r}")
        if not isinstance(self.n_steps, (int, np.integer)) or self.n_steps < 2:
            raise GridSpecError(f"n_steps must be an integer >= 2, got {self.n_steps!r}")
        if not (self.tau_max > 0 and math.isfinite(self.tau_max)):
            raise GridSpecError(f"tau_max must be positive and finite, got {self.tau_max!r}")


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Grid nodes in calendar time and in quadratic-variation time.

    ``one_minus_t`` is carried separately because ``t`` rounds to 1.0 once
    ``tau`` exceeds about 36.7; the qv coordinate is exact through it.
    The terminal node always has ``t = 1`` and ``tau = inf``.
    """

    kind: str
    t: np.ndarray
    tau: np.ndarray
    one_minus_t: np.ndarray
    dt: np.ndarray
    dtau: np.ndarray
    spec: GridSpec = field(repr=False, default=None)

    @property
    def n_nodes(self) -> int:
        return self.t.shape[0]

    @property
    def n_steps(self) -> int:
        return self.dt.shape[0]

    def node_at(self, t_value: float) -> int:
        """Index of the node whose calendar time equals ``t_value`` (to 1e-12)."""
        idx = int(np.argmin(np.abs(self.t - t_value)))
        if abs(self.t[idx] - t_value) > 1e-12:
            raise GridSpecError(f"t = {t_value} is not a grid node")
        return idx


def make_grid(spec: GridSpec) -> TimeGrid:
    spec.validate()
    n = int(spec.n_steps)
    if spec.kind == "uniform_t":
        k = np.arange(n + 1, dtype=float)
        t = k / n
        omt = (n - k) / n
        with np.errstate(divide="ignore"):
            tau = -np.log(omt)
        dt = np.diff(t)
    else:
        k = np.arange(n + 1, dtype=float)
        tau_nodes = k * spec.tau_max / n
        tau = np.append(tau_nodes, np.inf)
        omt = np.exp(-tau)
        t = np.append(-np.expm1(-tau_nodes), 1.0)
        dtau_nodes = np.diff(tau_nodes)
        dt = np.append(omt[:-2] * -np.expm1(-dtau_nodes), omt[-2])
    dtau = np.diff(tau)
    return TimeGrid(spec.kind, t, tau, omt, dt, dtau, spec)


@dataclass(frozen=True, eq=False)
class BrownianPath:
    increments: np.ndarray
    seed: int
    path_id: int

    def __post_init__(self):
        self.increments.setflags(write=False)


def sample_brownian(grid: TimeGrid, seed: int, path_id: int, engine=None) -> BrownianPath:
    z = kernels.normals(seed, [path_id], kernels.STREAM_BROWNIAN, grid.n_steps, engine=engine)[0]
    return BrownianPath(np.sqrt(grid.dt) * z, int(seed), int(path_id))


def sample_brownian_ensemble(grid: TimeGrid, seed: int, n_paths: int, first_id: int = 0, engine=None) -> np.ndarray:
    """Increments for path ids ``first_id .. first_id + n_paths - 1``, shape (paths, steps)."""
    ids = np.arange(first_id, first_id + n_paths)
    z = kernels.normals(seed, ids, kernels.STREAM_BROWNIAN, grid.n_steps, engine=engine)
    return np.sqrt(grid.dt) * z


def _check_level(a):
    if not (np.isfinite(a) and a > 0):
        raise DomainError(f"level must be positive, got {a}")


def _levy_normals(seed, path_ids) -> np.ndarray:
    ids = np.atleast_1d(np.asarray(path_ids))
    z = kernels.normals(seed, ids, kernels.STREAM_HITTING, 1, engine="numpy")[:, 0]
    # Z == 0 has probability zero; redraw from the next counter on the same key
    for i in np.flatnonzero(z == 0.0):
        key = _common.path_key(int(seed), int(ids[i]), kernels.STREAM_HITTING)
        c = 1
        while z[i] == 0.0:
            z[i] = _common.normal(key, c)
            c += 1
    return z


def sample_hitting_times(a: float, seed: int, path_ids) -> np.ndarray:
    """Exact draws of the first passage time of Brownian motion to ``a``: a^2 / Z^2."""
    _check_level(a)
    z = _levy_normals(seed, path_ids)
    return a * a / (z * z)


def sample_hitting_time(a: float, seed: int, path_id: int) -> float:
    return float(sample_hitting_times(a, seed, [path_id])[0])


def pre_hit_minimum_from_uniform(a: float, u):
    """Inverse transform for the minimum before hitting ``a``: -a (1 - u) / u."""
    u = np.asarray(u, dtype=float)
    out = -a * (1.0 - u) / u
    return float(out) if out.ndim == 0 else out


def sample_pre_hit_minima(a: float, seed: int, path_ids) -> np.ndarray:
    """Exact draws of min_{tau <= T_a} B(tau); P(min < -L) = a / (a + L)."""
    _check_level(a)
    ids = np.atleast_1d(np.asarray(path_ids))
    u = kernels.uniforms(seed, ids, kernels.STREAM_MINIMUM, 1, engine="numpy")[:, 0]
    return pre_hit_minimum_from_uniform(a, u)


def sample_pre_hit_minimum(a: float, seed: int, path_id: int) -> float:
    return float(sample_pre_hit_minima(a, seed, [path_id])[0])


def dump_ensemble(path, spec: GridSpec, seed: int, increments: np.ndarray) -> None:
    """Write Brownian increments as a JSON header line plus little-endian float64 body."""
    increments = np.ascontiguousarray(increments, dtype="<f8")
    if increments.ndim != 2 or increments.shape[1] != make_grid(spec).n_steps:
        raise MismatchError("increments must have shape (n_paths, grid steps)")
    header = {"spec": asdict(spec), "seed": int(seed), "n_paths": int(increments.shape[0])}
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(increments.tobytes())


def load_ensemble(path):
    """Inverse of :func:`dump_ensemble`; returns ``(spec, seed, increments)``."""
    raw = Path(path).read_bytes()
    if not raw.startswith(_DUMP_MAGIC):
        raise ValueError(f"{path}: not a path-ensemble dump")
    rest = raw[len(_DUMP_MAGIC):]
    line, body = rest.split(b"\n", 1)
    header = json.loads(line)
    spec = GridSpec(**header["spec"])
    n_steps = make_grid(spec).n_steps
    data = np.frombuffer(body, dtype="<f8")
    if data.size != header["n_paths"] * n_steps:
        raise ValueError(f"{path}: body length does not match header")
    return spec, header["seed"], data.reshape(header["n_paths"], n_steps).astype(float)
