"""Self-financing wealth of the trading strategies, and the admissibility tests.

All strategies trade at grid nodes with positions fixed over each step.  The
replicating portfolio of the claim is treated as a traded instrument worth
``C(t)``; used that way, the box and W2 strategies are exactly self-financing
in discrete time.  The delta hedge instead holds ``delta(t_k, S1(t_k))``
shares of S1 and therefore only approximates ``C``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats as sps

from . import analytics, kernels
from .economy import CLAIMS, Claim, ExactLawEnsemble, MarketEnsemble, MarketPath
from .errors import EmptyEnsembleError, GridSpecError, MismatchError, UnsupportedNotionError
from .pathgen import TimeGrid
from .stats import TestReport, clopper_pearson, column_mean_stderr, monotone_means_test

STRATEGY_KINDS = ("box", "delta_hedge", "sell_call", "sell_replication", "hold_s2", "cash", "custom")
NOTIONS = ("constant_bound", "supermartingale", "numeraire_scaled")


class DegenerateVarianceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class StrategySpec:
    label: str
    kind: str
    position_fn: Optional[Callable] = None
    initial_wealth: float = 0.0

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "custom" and self.position_fn is None:
            raise ValueError("custom strategies need a position_fn")


@dataclass(frozen=True, eq=False)
class WealthPath:
    w: np.ndarray
    running_min: np.ndarray
    label: str = ""
    positions: dict = field(default_factory=dict, repr=False)

    @property
    def terminal(self) -> float:
        return float(self.w[-1])

    @classmethod
    def from_series(cls, w, label="", positions=None):
        w = np.asarray(w, dtype=float)
        return cls(w, np.minimum.accumulate(w), label, positions or {})


@dataclass(frozen=True, eq=False)
class WealthEnsemble:
    """Wealth of many paths at common nodes, shape (paths, nodes)."""

    t: np.ndarray
    w: np.ndarray
    running_min: np.ndarray
    label: str = ""

    @property
    def terminal(self) -> np.ndarray:
        return self.w[:, -1]

    @property
    def n_paths(self) -> int:
        return self.w.shape[0]

    @classmethod
    def stack(cls, paths, t=None):
        paths = list(paths)
        if not paths:
            raise EmptyEnsembleError("no wealth paths")
        w = np.stack([p.w for p in paths])
        rmin = np.stack([p.running_min for p in paths])
        t = np.arange(w.shape[1], dtype=float) if t is None else np.asarray(t)
        return cls(t, w, rmin, paths[0].label)


def _claim_of(mp: MarketPath, claim: Optional[Claim]) -> Claim:
    return claim if claim is not None else CLAIMS[mp.claim]


def _steps(x):
    return np.diff(np.asarray(x, dtype=float))


def wealth_box(mp: MarketPath) -> WealthPath:
    """Long S2, short the replicating portfolio, proceeds ``C(0) - S2(0)`` in cash."""
    w = mp.s2 - mp.c + (mp.c0 - mp.s2[0])
    n = mp.s2.shape[0] - 1
    pos = {"s2": np.ones(n), "c": -np.ones(n), "cash": np.full(n, mp.c0 - mp.s2[0])}
    return WealthPath.from_series(w, "box", pos)


def wealth_w1_w2(mp: MarketPath) -> tuple[WealthPath, WealthPath]:
    """W1: short one unit of S2. W2: short the replicating portfolio."""
    n = mp.s2.shape[0] - 1
    w1 = -1.0 - mp.s2
    w2 = mp.c0 - mp.c
    return (
        WealthPath.from_series(w1, "sell_call", {"s2": -np.ones(n), "cash": np.full(n, -1.0)}),
        WealthPath.from_series(w2, "sell_replication", {"c": -np.ones(n), "cash": np.full(n, mp.c0)}),
    )


def _check_hedge_grid(grid: TimeGrid):
    if grid.n_steps < 1 or not grid.t[-2] < 1.0 or not grid.dt[-1] > 1e-12:
        raise GridSpecError("delta hedging needs a grid whose final calendar step is not degenerate")


def hedge_positions(grid: TimeGrid, s1: np.ndarray, claim: Claim) -> np.ndarray:
    """Shares of S1 held over each step: the claim's delta at the left node."""
    if claim.delta_fn is None:
        raise ValueError(f"claim {claim.label!r} exposes no delta")
    return np.asarray(claim.delta_fn(grid.t[:-1], s1[:-1]), dtype=float) * np.ones(grid.n_steps)


def wealth_delta_hedge(mp: MarketPath, claim: Optional[Claim] = None) -> WealthPath:
    """Discrete Black-Scholes-Merton replication started from ``C(0)``."""
    claim = _claim_of(mp, claim)
    _check_hedge_grid(mp.grid)
    h = hedge_positions(mp.grid, mp.s1, claim)
    flows = np.empty(mp.s1.shape[0])
    flows[0] = claim.initial_price
    flows[1:] = h * _steps(mp.s1)
    w = np.cumsum(flows)
    return WealthPath.from_series(w, "delta_hedge", {"s1": h})


def wealth_constant(mp: MarketPath, cash: float = 0.0) -> WealthPath:
    n = mp.s1.shape[0]
    return WealthPath.from_series(np.full(n, float(cash)), "cash", {"cash": np.full(n - 1, float(cash))})


def wealth_hold_s2(mp: MarketPath) -> WealthPath:
    n = mp.s2.shape[0] - 1
    return WealthPath.from_series(mp.s2.copy(), "hold_s2", {"s2": np.ones(n)})


@dataclass(frozen=True)
class PathPrefix:
    """Information available at node k: prices up to and including node k."""

    k: int
    t: np.ndarray
    s1: np.ndarray
    s2: np.ndarray


def wealth_custom(mp: MarketPath, position_fn: Callable, initial_wealth: float = 0.0, label: str = "custom") -> WealthPath:
    """Self-financing wealth for holdings ``position_fn(prefix) -> (shares_s1, shares_s2)``.

    The function only ever sees a read-only prefix, so positions are
    predictable by construction; the remainder sits in the money market.
    """
    n = mp.s1.shape[0] - 1
    t, s1, s2 = (np.array(x, copy=True) for x in (mp.grid.t, mp.s1, mp.s2))
    for arr in (t, s1, s2):
        arr.setflags(write=False)
    h1 = np.empty(n)
    h2 = np.empty(n)
    for k in range(n):
        h1[k], h2[k] = position_fn(PathPrefix(k, t[: k + 1], s1[: k + 1], s2[: k + 1]))
    flows = np.empty(n + 1)
    flows[0] = initial_wealth
    flows[1:] = h1 * _steps(s1) + h2 * _steps(s2)
    return WealthPath.from_series(np.cumsum(flows), label, {"s1": h1, "s2": h2})


def run_strategy(spec: StrategySpec, mp: MarketPath, claim: Optional[Claim] = None) -> WealthPath:
    if spec.kind == "box":
        return wealth_box(mp)
    if spec.kind == "delta_hedge":
        return wealth_delta_hedge(mp, claim)
    if spec.kind == "sell_call":
        return wealth_w1_w2(mp)[0]
    if spec.kind == "sell_replication":
        return wealth_w1_w2(mp)[1]
    if spec.kind == "hold_s2":
        return wealth_hold_s2(mp)
    if spec.kind == "cash":
        return wealth_constant(mp, spec.initial_wealth)
    return wealth_custom(mp, spec.position_fn, spec.initial_wealth, spec.label)


def self_financing_residual(wp: WealthPath, mp: MarketPath) -> float:
    """Largest |dW_k - sum_assets h_k dP_k| over steps; cash earns nothing."""
    prices = {"s1": mp.s1, "s2": mp.s2, "c": mp.c}
    gains = np.zeros(mp.s1.shape[0] - 1)
    for asset, h in wp.positions.items():
        if asset == "cash":
            continue
        gains += h * _steps(prices[asset])
    return float(np.max(np.abs(_steps(wp.w) - gains), initial=0.0))


# ensemble helpers


def box_wealth_ensemble(ens: MarketEnsemble) -> WealthEnsemble:
    """Box wealth at the recorded nodes; between-node minima come from M (W = M)."""
    w = ens.s2 - ens.c + (ens.c0 - ens.s2[:, :1])
    rmin = np.minimum(np.minimum.accumulate(w, axis=1), ens.m_min)
    return WealthEnsemble(ens.t, w, rmin, "box")


def box_wealth_exact(ex: ExactLawEnsemble) -> WealthEnsemble:
    """Box wealth from the exact-law backend at t = 0 and t = 1."""
    n = ex.n_paths
    w = np.column_stack([np.zeros(n), ex.m_terminal])
    rmin = np.column_stack([np.zeros(n), ex.minimum])
    return WealthEnsemble(np.array([0.0, 1.0]), w, rmin, "box")


def w1_w2_ensemble(ens: MarketEnsemble) -> tuple[WealthEnsemble, WealthEnsemble]:
    w1 = -1.0 - ens.s2
    w2 = ens.c0 - ens.c
    return (
        WealthEnsemble(ens.t, w1, np.minimum.accumulate(w1, axis=1), "sell_call"),
        WealthEnsemble(ens.t, w2, np.minimum.accumulate(w2, axis=1), "sell_replication"),
    )


@dataclass(frozen=True)
class HedgeResult:
    n_steps: int
    wealth: np.ndarray
    payoff: np.ndarray

    @property
    def error(self) -> np.ndarray:
        return self.wealth - self.payoff

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.error**2)))


def hedge_ensemble(grid: TimeGrid, claim: Claim, n_paths: int, seed: int, first_id: int = 0, engine=None) -> HedgeResult:
    """Terminal delta-hedge wealth against the payoff on the same paths."""
    _check_hedge_grid(grid)
    ids = np.arange(first_id, first_id + n_paths)
    dt = np.ascontiguousarray(grid.dt)
    wealth, s1_end = kernels.hedge_terminal(seed, ids, np.sqrt(dt), dt, grid.t[:-1], claim, claim.initial_price, engine=engine)
    return HedgeResult(grid.n_steps, wealth, np.asarray(claim.payoff_fn(s1_end), dtype=float))


# admissibility


@dataclass
class AdmissibilityVerdict:
    """Statistical verdict; a non-rejection is 'consistent with', never a proof."""

    notion: str
    rejected: bool
    alpha: float
    n: int
    uniform_lower_bound_rejected: Optional[bool] = None
    supermartingale_rejected: Optional[bool] = None
    evidence: list = field(default_factory=list)

    @property
    def statement(self) -> str:
        if self.rejected:
            return f"{self.notion} admissibility rejected at alpha={self.alpha} (n={self.n})"
        return f"consistent with {self.notion} admissibility at alpha={self.alpha} (n={self.n})"

    def to_dict(self) -> dict:
        return {
            "notion": self.notion,
            "rejected": self.rejected,
            "uniform_lower_bound_rejected": self.uniform_lower_bound_rejected,
            "supermartingale_rejected": self.supermartingale_rejected,
            "alpha": self.alpha,
            "n": self.n,
            "statement": self.statement,
            "evidence": self.evidence,
        }


def _as_ensemble(wealth) -> WealthEnsemble:
    if isinstance(wealth, WealthEnsemble):
        if wealth.n_paths == 0:
            raise EmptyEnsembleError("empty wealth ensemble")
        return wealth
    return WealthEnsemble.stack(wealth)


def classify_admissibility(wealth, notion: str = "constant_bound", alpha: float = 0.01, levels=(1.0, 5.0, 10.0), level_a: Optional[float] = None) -> AdmissibilityVerdict:
    """Try to reject an admissibility notion from sampled wealth.

    ``constant_bound``: rejects when the running minimum falls below ``-L`` for
    the deepest tested ``L`` with a positive one-sided lower confidence bound on
    that probability.  ``level_a`` adds the ruin oracle ``a / (a + L)`` as
    evidence.  ``supermartingale``: rejects when a later node mean exceeds an
    earlier one beyond the Bonferroni-corrected bound.
    """
    if notion == "numeraire_scaled":
        raise UnsupportedNotionError("numeraire-scaled admissibility is not implemented")
    if notion not in NOTIONS:
        raise ValueError(f"unknown notion {notion!r}")
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    ens = _as_ensemble(wealth)
    n = ens.n_paths
    if np.all(ens.w == ens.w[:1, :]) and np.all(ens.running_min == ens.running_min[:1, :]):
        warnings.warn("wealth has zero variance across paths", DegenerateVarianceWarning, stacklevel=2)

    if notion == "constant_bound":
        minima = ens.running_min[:, -1]
        levels = sorted(float(x) for x in levels)
        if not levels:
            raise ValueError("at least one depth level is required")
        evidence = []
        lower = 0.0
        for L in levels:
            hits = int(np.count_nonzero(minima < -L))
            lo, hi = clopper_pearson(hits, n, alpha)
            lower = 0.0 if hits == 0 else float(sps.beta.ppf(alpha, hits, n - hits + 1))
            row = {"depth": L, "hits": hits, "n": n, "p_hat": hits / n, "ci": [lo, hi], "one_sided_lower": lower}
            if level_a is not None:
                row["oracle"] = float(analytics.ruin_tail(level_a, L))
            evidence.append(row)
        q = np.quantile(minima, [0.01, 0.05, 0.5])
        evidence.append({"minimum_quantiles": {"q01": float(q[0]), "q05": float(q[1]), "q50": float(q[2])}})
        rejected = lower > 0.0
        return AdmissibilityVerdict(notion, rejected, alpha, n, uniform_lower_bound_rejected=rejected, evidence=evidence)

    means, ses = column_mean_stderr(ens.w)
    rep = monotone_means_test(-means, ses, alpha, name=f"{ens.label or 'wealth'}_nonincreasing_means")
    rejected = rep.verdict == "fail"
    evidence = [rep.to_dict(), {"node_means": means.tolist(), "node_stderrs": ses.tolist()}]
    return AdmissibilityVerdict(notion, rejected, alpha, n, supermartingale_rejected=rejected, evidence=evidence)


# no dominance


@dataclass(frozen=True)
class DominanceVerdict:
    violation: bool
    a_dominates_b: bool
    b_dominates_a: bool
    cost_a: float
    cost_b: float
    n: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def dominance_check(cost_a: float, terminal_a, cost_b: float, terminal_b, tol: float = 1e-9) -> DominanceVerdict:
    """Flag a pair where one strategy pays off at least as much on every path yet costs less."""
    ta = np.asarray(terminal_a, dtype=float).ravel()
    tb = np.asarray(terminal_b, dtype=float).ravel()
    if ta.shape != tb.shape:
        raise MismatchError("terminal samples must have equal length")
    if ta.size == 0:
        raise EmptyEnsembleError("no terminal samples")
    a_dom = bool(np.all(ta >= tb - tol))
    b_dom = bool(np.all(tb >= ta - tol))
    violation = (a_dom and cost_a < cost_b - tol) or (b_dom and cost_b < cost_a - tol)
    return DominanceVerdict(bool(violation), a_dom, b_dom, float(cost_a), float(cost_b), int(ta.size))


def make_report(name: str, verdict: AdmissibilityVerdict, expect_rejection: bool) -> TestReport:
    ok = verdict.rejected == expect_rejection
    return TestReport(name, float(verdict.rejected), 0.0, float(expect_rejection), 0.0, verdict.alpha, verdict.n, "pass" if ok else "fail", detail=verdict.statement)
