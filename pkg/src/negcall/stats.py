"""Estimators and the small set of hypothesis tests the verification suites use."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import stats as sps

VERDICTS = ("pass", "fail", "inconclusive")

# two-sided level whose critical value is exactly 3 standard deviations
ALPHA_3SIGMA = float(2.0 * sps.norm.sf(3.0))


def z_critical(alpha: float) -> float:
    """Two-sided standard normal critical value."""
    _check_alpha(alpha)
    return float(sps.norm.isf(alpha / 2.0))


def _check_alpha(alpha):
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5), got {alpha}")


def mean_stderr(x) -> tuple[float, float]:
    """Exactly rounded mean and the unbiased standard error of the mean."""
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    mean = math.fsum(x) / n
    if n < 2:
        return mean, math.nan
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def column_mean_stderr(x) -> tuple[np.ndarray, np.ndarray]:
    """:func:`mean_stderr` applied to every column of a (samples, columns) array.

    Sums are exactly rounded, so the result does not depend on sample order.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    pairs = [mean_stderr(x[:, j]) for j in range(x.shape[1])]
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


@dataclass
class TestReport:
    """Outcome of one check.

    Statistical checks pass iff ``|estimate - oracle| <= z(alpha) * stderr``.
    Deterministic checks (``tolerance`` set, ``stderr = 0``) pass iff
    ``|estimate - oracle| <= tolerance``.
    """

    __test__ = False  # not a pytest class

    name: str
    estimate: float
    stderr: float
    oracle: Optional[float]
    z_score: float
    alpha: float
    n: int
    verdict: str
    tolerance: Optional[float] = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["z"] = d.pop("z_score")
        return {k: _json_number(v) for k, v in d.items()}

    def line(self) -> str:
        oracle = "-" if self.oracle is None else f"{self.oracle:.6g}"
        tag = "PASS" if self.passed else self.verdict.upper()
        if self.tolerance is not None:
            return f"[{tag}] {self.name}: value={self.estimate:.6g} target={oracle} tol={self.tolerance:.3g} n={self.n}"
        return f"[{tag}] {self.name}: estimate={self.estimate:.6g} oracle={oracle} stderr={self.stderr:.3g} z={self.z_score:.3g} n={self.n}"


def _json_number(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, (np.floating, np.integer)):
        return _json_number(v.item())
    return v


def mean_test(samples, oracle: float, alpha: float = 0.01, name: str = "mean") -> TestReport:
    """Two-sided z-test of the sample mean against ``oracle``."""
    _check_alpha(alpha)
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("mean_test needs at least two samples")
    mean, se = mean_stderr(x)
    diff = mean - oracle
    if se == 0.0:
        same = abs(diff) <= 1e-12 * max(1.0, abs(oracle))
        z = 0.0 if same else math.copysign(math.inf, diff)
        verdict = "pass" if same else "fail"
    else:
        z = diff / se
        verdict = "pass" if abs(z) <= z_critical(alpha) else "fail"
    return TestReport(name, mean, se, float(oracle), z, alpha, int(x.size), verdict)


def binomial_tail_test(hits: int, n: int, oracle_p: float, alpha: float = 0.01, name: str = "proportion") -> TestReport:
    """Test an observed proportion ``hits / n`` against ``oracle_p``.

    Uses the normal approximation with continuity correction, or the exact
    Clopper-Pearson interval when ``n * oracle_p`` (or its complement) is below 10.
    """
    _check_alpha(alpha)
    hits, n = int(hits), int(n)
    if n < 1 or not 0 <= hits <= n:
        raise ValueError("need 0 <= hits <= n and n >= 1")
    if not 0.0 <= oracle_p <= 1.0:
        raise ValueError("oracle_p must be a probability")
    p_hat = hits / n
    se = math.sqrt(oracle_p * (1.0 - oracle_p) / n)
    diff = p_hat - oracle_p
    if min(n * oracle_p, n * (1.0 - oracle_p)) < 10:
        lo, hi = clopper_pearson(hits, n, alpha)
        verdict = "pass" if lo <= oracle_p <= hi else "fail"
        z = diff / se if se > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
        detail = f"exact interval [{lo:.6g}, {hi:.6g}]"
    else:
        corrected = max(abs(diff) - 0.5 / n, 0.0)
        z = math.copysign(corrected / se, diff)
        verdict = "pass" if abs(z) <= z_critical(alpha) else "fail"
        detail = "normal approximation, continuity corrected"
    return TestReport(name, p_hat, se, float(oracle_p), z, alpha, n, verdict, detail=detail)


def clopper_pearson(hits: int, n: int, alpha: float) -> tuple[float, float]:
    lo = 0.0 if hits == 0 else float(sps.beta.ppf(alpha / 2, hits, n - hits + 1))
    hi = 1.0 if hits == n else float(sps.beta.ppf(1 - alpha / 2, hits + 1, n - hits))
    return lo, hi


def monotone_means_test(node_means, node_stderrs, alpha: float = 0.01, name: str = "monotone_means") -> TestReport:
    """Test that node means are nondecreasing.

    Fails if for some pair i < j the drop ``mean_i - mean_j`` exceeds the
    one-sided two-sample bound at level ``alpha / n_pairs`` (Bonferroni).
    Node means from one ensemble are positively correlated, so the
    independent-sample variance used here makes the test conservative.
    """
    _check_alpha(alpha)
    mu = np.asarray(node_means, dtype=float)
    se = np.asarray(node_stderrs, dtype=float)
    k = mu.size
    if k < 2 or se.shape != mu.shape:
        raise ValueError("need at least two nodes with matching standard errors")
    i, j = np.triu_indices(k, 1)
    drop = mu[i] - mu[j]
    pooled = np.sqrt(se[i] ** 2 + se[j] ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = np.where(pooled > 0, drop / pooled, np.where(drop > 1e-12, np.inf, 0.0))
    n_pairs = drop.size
    crit = float(sps.norm.isf(alpha / n_pairs))
    w = int(np.argmax(stat))
    verdict = "fail" if stat[w] > crit else "pass"
    detail = f"worst pair ({i[w]}, {j[w]}), critical {crit:.4g} over {n_pairs} pairs"
    return TestReport(name, float(drop[w]), float(pooled[w]), None, float(stat[w]), alpha, k, verdict, detail=detail)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n: int


def loglog_slope(xs, ys) -> SlopeFit:
    """Least-squares slope of log y on log x with its standard error."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 3 or x.shape != y.shape:
        raise ValueError("need at least three (x, y) points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit requires positive values")
    lx, ly = np.log(x), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    slope = float(np.sum((lx - mx) * (ly - my)) / sxx)
    intercept = float(my - slope * mx)
    resid = ly - (intercept + slope * lx)
    stderr = math.sqrt(float(np.sum(resid**2)) / (x.size - 2) / sxx)
    return SlopeFit(slope, stderr, intercept, int(x.size))


def exact_check(name: str, max_error: float, tolerance: float, n: int, alpha: float = 0.01, detail: str = "") -> TestReport:
    """Report for a deterministic identity: passes iff ``max_error <= tolerance``."""
    ok = bool(max_error <= tolerance)
    return TestReport(name, float(max_error), 0.0, 0.0, 0.0, alpha, int(n), "pass" if ok else "fail", tolerance, detail)


def interval_check(name: str, value: float, lo: float, hi: float, stderr: float = 0.0, n: int = 0, alpha: float = 0.01, detail: str = "") -> TestReport:
    """Report for a value that must fall inside ``[lo, hi]``."""
    ok = bool(lo <= value <= hi)
    mid = 0.5 * (lo + hi)
    return TestReport(name, float(value), float(stderr), mid, 0.0, alpha, int(n), "pass" if ok else "fail", 0.5 * (hi - lo), detail)
