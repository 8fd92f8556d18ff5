import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from negcall import stats as S


def test_alpha_3sigma():
    assert S.z_critical(S.ALPHA_3SIGMA) == pytest.approx(3.0, abs=1e-12)
    assert S.z_critical(0.01) == pytest.approx(2.5758293035489, abs=1e-10)
    with pytest.raises(ValueError):
        S.z_critical(0.5)


def test_mean_stderr_unbiased():
    x = np.array([1.0, 2.0, 4.0, 7.0])
    m, se = S.mean_stderr(x)
    assert m == 3.5
    assert se == pytest.approx(np.std(x, ddof=1) / 2, abs=1e-15)


def test_mean_test_constant_samples():
    rep = S.mean_test(np.full(10, 2.5), 2.5)
    assert rep.passed and rep.z_score == 0.0
    bad = S.mean_test(np.full(10, 2.5), 3.0)
    assert not bad.passed and math.isinf(bad.z_score)
    with pytest.raises(ValueError):
        S.mean_test([1.0], 1.0)


def test_mean_test_verdict_rule():
    x = np.random.default_rng(1).normal(0.1, 1.0, 1000)
    rep = S.mean_test(x, 0.0, 0.05)
    assert rep.passed == (abs(rep.estimate - rep.oracle) <= S.z_critical(0.05) * rep.stderr)


def test_mean_test_permutation_invariant():
    x = np.random.default_rng(2).standard_cauchy(5000)
    a = S.mean_test(x, 0.0)
    b = S.mean_test(x[::-1].copy(), 0.0)
    assert a.to_dict() == b.to_dict()


def test_stderr_scales_as_root_n():
    rng = np.random.default_rng(3)
    x = rng.normal(size=40_000)
    se_n = S.mean_stderr(x[:10_000])[1]
    se_4n = S.mean_stderr(x)[1]
    assert se_n / se_4n == pytest.approx(2.0, rel=0.05)


def test_binomial_examples():
    assert S.binomial_tail_test(500, 1000, 0.5).passed
    p = 1.3829249 / 6.3829249
    assert p == pytest.approx(0.21667, abs=1e-5)
    assert S.binomial_tail_test(round(p * 10_000), 10_000, p).passed
    assert not S.binomial_tail_test(300, 1000, 0.5).passed
    # exact interval branch
    small = S.binomial_tail_test(3, 10_000, 0.0005)
    assert "exact" in small.detail and small.passed
    assert not S.binomial_tail_test(30, 10_000, 0.0005).passed
    assert S.binomial_tail_test(0, 100, 0.0).passed
    with pytest.raises(ValueError):
        S.binomial_tail_test(11, 10, 0.5)


def test_binomial_false_rejection_rate():
    # calibration: rejections at alpha = 0.05 stay near 5%
    rng = np.random.default_rng(4)
    hits = rng.binomial(2000, 0.3, size=4000)
    rate = np.mean([not S.binomial_tail_test(h, 2000, 0.3, 0.05).passed for h in hits])
    assert 0.03 < rate < 0.065


def test_clopper_pearson_against_beta():
    lo, hi = S.clopper_pearson(7, 50, 0.05)
    assert lo == pytest.approx(sps.beta.ppf(0.025, 7, 44))
    assert hi == pytest.approx(sps.beta.ppf(0.975, 8, 43))
    assert S.clopper_pearson(0, 50, 0.05)[0] == 0.0
    assert S.clopper_pearson(50, 50, 0.05)[1] == 1.0


def test_monotone_means():
    se = np.full(5, 0.01)
    assert S.monotone_means_test(np.zeros(5), se).passed
    assert S.monotone_means_test([-1, -1, -1, -1, 0.3829], se).passed
    assert not S.monotone_means_test(np.linspace(0, -1, 5), np.full(5, 1e-6)).passed
    # node with zero stderr
    assert S.monotone_means_test([-1.0, -1.0], [0.0, 0.0]).passed
    assert not S.monotone_means_test([-1.0, -2.0], [0.0, 0.0]).passed
    with pytest.raises(ValueError):
        S.monotone_means_test([1.0], [0.1])


def test_monotone_bonferroni_is_conservative():
    rng = np.random.default_rng(6)
    fails = 0
    for _ in range(300):
        mu = rng.normal(0, 0.1, 8)
        fails += not S.monotone_means_test(mu, np.full(8, 0.1), 0.05).passed
    assert fails / 300 <= 0.05 + 0.03


def test_loglog_slope():
    x = np.array([64, 128, 256, 512, 1024])
    fit = S.loglog_slope(x, 3.0 / np.sqrt(x))
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.stderr < 1e-12
    assert S.loglog_slope(x, np.full(5, 2.0)).slope == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        S.loglog_slope([1, 2], [1, 2])
    with pytest.raises(ValueError):
        S.loglog_slope([1, 2, 3], [1, 0, 2])


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 5))
def test_loglog_recovers_power(p, c):
    x = np.array([2.0, 4.0, 8.0, 16.0])
    assert S.loglog_slope(x, c * x**p).slope == pytest.approx(p, abs=1e-9)


def test_report_json_schema():
    rep = S.mean_test(np.full(4, 1.0), 2.0)
    d = rep.to_dict()
    assert {"name", "estimate", "stderr", "oracle", "z", "alpha", "n", "verdict"} <= set(d)
    assert d["z"] == "-inf"
    json.dumps(d, allow_nan=False)


def test_exact_and_interval_checks():
    assert S.exact_check("x", 1e-13, 1e-12, 5).passed
    assert not S.exact_check("x", 2e-12, 1e-12, 5).passed
    assert S.interval_check("s", -0.5, -0.65, -0.35).passed
    assert not S.interval_check("s", -0.3, -0.65, -0.35).passed
    assert "tol=" in S.exact_check("x", 0.0, 1e-9, 1).line()
