"""The two-asset market: S1, its replication price C, the stopped integral M, and S2.

Per path, on grid nodes t_k,

    S1(t_{k+1}) = S1(t_k) exp(dB_k - dt_k / 2)             exact GBM, S1(0) = 1
    M_{k+1}     = M_k + (1 - t_k)^(-1/2) dB_k              Ito/Euler, until M reaches a
    S2(t_k)     = C(t_k) + M(t_k) - C(0) - 1               a = C(0) + 1

M is clamped to ``a`` from the first node at or above ``a``.  With the bridge
correction a crossing between two nodes below ``a`` is declared with the
Brownian-bridge probability ``exp(-2 (a - M_k)(a - M_{k+1}) / v_k)``, where
``v_k = dt_k / (1 - t_k)`` is the variance of the Euler increment.  M is never
advanced over a step ending at ``t = 1`` (infinite qv-time); paths that have not
reached ``a`` by then are reported as unstopped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import analytics, kernels
from .errors import ConfigError, EmptyEnsembleError, MismatchError
from .pathgen import BrownianPath, TimeGrid, make_grid
from .stats import column_mean_stderr


@dataclass(frozen=True)
class Claim:
    """A nonnegative claim paying ``payoff_fn(S1(1))`` with price process ``price_fn(t, S1(t))``.

    ``kernel_code`` selects a compiled hedge ratio in the numba engine;
    claims without one hedge through ``delta_fn`` on the numpy engine.
    """

    label: str
    price_fn: Callable
    payoff_fn: Callable
    delta_fn: Optional[Callable] = None
    kernel_code: Optional[int] = None
    strike: float = 1.0

    @property
    def initial_price(self) -> float:
        return float(self.price_fn(0.0, 1.0))

    @property
    def level(self) -> float:
        """Level ``a = C(0) + 1`` at which M is stopped."""
        return self.initial_price + 1.0

    def validate(self, n: int = 257) -> None:
        s = np.exp(np.linspace(-4.0, 4.0, n))
        terminal = np.asarray(self.price_fn(np.ones_like(s), s))
        if not np.array_equal(terminal, np.asarray(self.payoff_fn(s))):
            raise ValueError(f"claim {self.label!r}: price at t = 1 must equal the payoff")
        t = np.linspace(0.0, 1.0, 33)[:, None]
        if np.any(np.asarray(self.price_fn(t, s[None, :])) < 0):
            raise ValueError(f"claim {self.label!r}: price must be nonnegative")


def _call_payoff(s):
    return np.maximum(np.asarray(s, dtype=float) - 1.0, 0.0)


def _digital_payoff(s):
    return (np.asarray(s, dtype=float) > 1.0).astype(float)


def _one(t, s):
    return np.ones(np.broadcast(np.asarray(t), np.asarray(s)).shape)


def _zero(t, s):
    return np.zeros(np.broadcast(np.asarray(t), np.asarray(s)).shape)


ATM_CALL = Claim("atm_call", analytics.bs_price, _call_payoff, analytics.bs_delta, kernel_code=0)
DIGITAL_CALL = Claim("digital_call", analytics.digital_price, _digital_payoff, analytics.digital_delta, kernel_code=1)
UNIT_BOND = Claim("unit_bond", _one, lambda s: np.ones(np.shape(s)), _zero, kernel_code=2)

CLAIMS = {c.label: c for c in (ATM_CALL, DIGITAL_CALL, UNIT_BOND)}


def get_claim(label: str) -> Claim:
    try:
        return CLAIMS[label]
    except KeyError:
        raise ConfigError(f"unknown claim {label!r}; built-ins: {sorted(CLAIMS)}") from None


def step_coefficients(grid: TimeGrid) -> dict:
    """Per-step arrays consumed by the path kernels."""
    gain = 1.0 / np.sqrt(grid.one_minus_t[:-1])
    return {
        "dt": np.ascontiguousarray(grid.dt),
        "sqrt_dt": np.sqrt(grid.dt),
        "gain": gain,
        "var_m": gain * gain * grid.dt,
        "advance": np.isfinite(grid.tau[1:]),
    }


@dataclass(frozen=True, eq=False)
class MarketPath:
    grid: TimeGrid = field(repr=False)
    s1: np.ndarray
    c: np.ndarray
    m: np.ndarray
    s2: np.ndarray
    stop_index: Optional[int]
    d: float
    a: float
    c0: float
    claim: str = "atm_call"
    path_id: int = 0

    @property
    def stopped(self) -> bool:
        return self.stop_index is not None


def simulate_market_path(bp: BrownianPath, grid: TimeGrid, claim: Claim = ATM_CALL, bridge_correction: bool = True) -> MarketPath:
    """Build one market path node by node from the increments in ``bp``."""
    db = np.asarray(bp.increments, dtype=float)
    if db.shape != (grid.n_steps,):
        raise MismatchError(f"path has {db.shape[0]} increments but the grid has {grid.n_steps} steps")
    co = step_coefficients(grid)
    c0 = claim.initial_price
    a = c0 + 1.0
    n = grid.n_steps
    u = None
    if bridge_correction:
        u = kernels.uniforms(bp.seed, [bp.path_id], kernels.STREAM_BRIDGE, n, engine="numpy")[0]

    logs = np.zeros(n + 1)
    m = np.zeros(n + 1)
    stop = None
    for k in range(n):
        logs[k + 1] = logs[k] + (db[k] - 0.5 * co["dt"][k])
        if stop is not None or not co["advance"][k]:
            m[k + 1] = m[k]
            continue
        nxt = m[k] + co["gain"][k] * db[k]
        crossed = nxt >= a
        if not crossed and u is not None:
            crossed = u[k] < math.exp(-2.0 * (a - m[k]) * (a - nxt) / co["var_m"][k])
        if crossed:
            stop = k + 1
            nxt = a
        m[k + 1] = nxt

    s1 = np.exp(logs)
    c = np.asarray(claim.price_fn(grid.t, s1), dtype=float)
    s2 = c + m - c0 - 1.0
    d = float(claim.payoff_fn(s1[-1]))
    return MarketPath(grid, s1, c, m, s2, stop, d, a, c0, claim.label, bp.path_id)


def simulate_terminal_exact(a: float, seed: int, path_id: int):
    """Exact-law ``(T_a, pre-hit minimum, M(1))``; ``M(1) = a`` on every draw.

    The coordinates are drawn independently of each other and of S1.
    """
    from .pathgen import sample_hitting_time, sample_pre_hit_minimum

    return sample_hitting_time(a, seed, path_id), sample_pre_hit_minimum(a, seed, path_id), float(a)


@dataclass(frozen=True, eq=False)
class ExactLawEnsemble:
    claim: str
    a: float
    c0: float
    hitting_time: np.ndarray
    minimum: np.ndarray
    m_terminal: np.ndarray
    s1_terminal: np.ndarray
    d: np.ndarray
    s2_terminal: np.ndarray
    c_terminal: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.d.shape[0]


def simulate_exact_law(claim: Claim, n_paths: int, seed: int, first_id: int = 0) -> ExactLawEnsemble:
    """Exact-law backend: in qv-time M is Brownian motion stopped at ``a``."""
    from .pathgen import sample_hitting_times, sample_pre_hit_minima

    ids = np.arange(first_id, first_id + n_paths)
    c0 = claim.initial_price
    a = c0 + 1.0
    t_a = sample_hitting_times(a, seed, ids)
    mins = sample_pre_hit_minima(a, seed, ids)
    z = kernels.normals(seed, ids, kernels.STREAM_TERMINAL, 1, engine="numpy")[:, 0]
    s1 = np.exp(z - 0.5)
    c1 = np.asarray(claim.price_fn(np.ones_like(s1), s1), dtype=float)
    m1 = np.full(n_paths, a)
    s2 = c1 + m1 - c0 - 1.0
    return ExactLawEnsemble(claim.label, a, c0, t_a, mins, m1, s1, np.asarray(claim.payoff_fn(s1), dtype=float), s2, c1)


def default_record_nodes(grid: TimeGrid, n_record: int = 33) -> np.ndarray:
    last = grid.n_nodes - 1
    idx = np.unique(np.round(np.linspace(0, last, min(n_record, last + 1))).astype(np.int64))
    return np.union1d(idx, [0, last]).astype(np.int64)


@dataclass(frozen=True, eq=False)
class MarketEnsemble:
    """Many paths sampled at the recorded node indices ``nodes``.

    ``m_min`` is the running minimum of M over every grid node up to each
    recorded node, not just over recorded nodes.
    """

    grid: TimeGrid = field(repr=False)
    claim: str
    a: float
    c0: float
    seed: int
    path_ids: np.ndarray
    nodes: np.ndarray
    s1: np.ndarray
    c: np.ndarray
    m: np.ndarray
    m_min: np.ndarray
    s2: np.ndarray
    stop_index: np.ndarray
    d: np.ndarray
    bridge_correction: bool

    @property
    def t(self) -> np.ndarray:
        return self.grid.t[self.nodes]

    @property
    def tau(self) -> np.ndarray:
        return self.grid.tau[self.nodes]

    @property
    def stopped(self) -> np.ndarray:
        return self.stop_index >= 0

    @property
    def n_paths(self) -> int:
        return self.path_ids.shape[0]

    @property
    def unstopped_fraction(self) -> float:
        return float(np.count_nonzero(~self.stopped)) / self.n_paths

    def qv_horizon(self) -> float:
        """Largest finite qv-time on the grid, the truncation point of M."""
        tau = self.grid.tau
        return float(tau[np.isfinite(tau)][-1])


def simulate_ensemble(
    grid: TimeGrid,
    claim: Claim = ATM_CALL,
    n_paths: int = 10_000,
    seed: int = 0,
    bridge_correction: bool = True,
    nodes=None,
    first_id: int = 0,
    engine=None,
) -> MarketEnsemble:
    if n_paths < 1:
        raise EmptyEnsembleError("n_paths must be positive")
    nodes = default_record_nodes(grid) if nodes is None else np.unique(np.asarray(nodes, dtype=np.int64))
    nodes = np.union1d(nodes, [grid.n_nodes - 1]).astype(np.int64)
    if nodes[0] < 0 or nodes[-1] >= grid.n_nodes:
        raise MismatchError("recorded nodes outside the grid")
    ids = np.arange(first_id, first_id + n_paths, dtype=np.int64)
    c0 = claim.initial_price
    a = c0 + 1.0
    s1, m, mmin, stop = kernels.market_paths(seed, ids, step_coefficients(grid), a, nodes, bridge_correction, engine=engine)
    t = np.broadcast_to(grid.t[nodes], s1.shape)
    c = np.asarray(claim.price_fn(t, s1), dtype=float)
    s2 = c + m - c0 - 1.0
    d = np.asarray(claim.payoff_fn(s1[:, -1]), dtype=float)
    return MarketEnsemble(grid, claim.label, a, c0, int(seed), ids, nodes, s1, c, m, mmin, s2, stop, d, bool(bridge_correction))


@dataclass(frozen=True)
class NodeMeans:
    t: np.ndarray
    tau: np.ndarray
    n: int
    s1: np.ndarray
    s1_se: np.ndarray
    m: np.ndarray
    m_se: np.ndarray
    s2: np.ndarray
    s2_se: np.ndarray


def _stack_paths(paths):
    paths = list(paths)
    if not paths:
        raise EmptyEnsembleError("expected_means needs at least one path")
    grid = paths[0].grid
    if any(p.grid is not grid and p.s1.shape != paths[0].s1.shape for p in paths):
        raise MismatchError("paths are on different grids")
    return grid.t, grid.tau, np.stack([p.s1 for p in paths]), np.stack([p.m for p in paths]), np.stack([p.s2 for p in paths])


def expected_means(paths) -> NodeMeans:
    """Per-node means and standard errors of S1, M and S2 (exactly rounded sums)."""
    if isinstance(paths, MarketEnsemble):
        if paths.n_paths == 0:
            raise EmptyEnsembleError("empty ensemble")
        t, tau, s1, m, s2 = paths.t, paths.tau, paths.s1, paths.m, paths.s2
    else:
        t, tau, s1, m, s2 = _stack_paths(paths)
    ms1, se1 = column_mean_stderr(s1)
    mm, sem = column_mean_stderr(m)
    ms2, se2 = column_mean_stderr(s2)
    return NodeMeans(np.asarray(t), np.asarray(tau), s1.shape[0], ms1, se1, mm, sem, ms2, se2)


def grid_for_backend(backend: str, n_steps: int, tau_max: float) -> TimeGrid:
    from .pathgen import GridSpec

    kind = {"euler_qv": "uniform_qv", "euler_uniform_t": "uniform_t"}.get(backend)
    if kind is None:
        raise ConfigError(f"backend {backend!r} has no time grid")
    return make_grid(GridSpec(kind, int(n_steps), float(tau_max)))
