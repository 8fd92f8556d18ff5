import math

import numpy as np
import pytest

from negcall import analytics as an
from negcall import economy as ec
from negcall.errors import ConfigError, EmptyEnsembleError, MismatchError
from negcall.pathgen import BrownianPath, GridSpec, make_grid, sample_brownian
from negcall.stats import ALPHA_3SIGMA, binomial_tail_test, mean_test

C0 = an.bs_price(0.0, 1.0)


def check_invariants(mp):
    assert np.all(mp.s1 > 0)
    assert mp.s2[0] == -1.0
    assert np.all(mp.c >= 0)
    assert np.all(mp.m <= mp.a)
    assert np.max(np.abs(mp.s2 - (mp.c + mp.m - mp.a))) <= 1e-12
    if mp.stopped:
        k = mp.stop_index
        assert np.all(mp.m[k:] == mp.a)
        assert np.all(mp.m[:k] < mp.a)
        assert abs(mp.s2[-1] - mp.d) <= 1e-9
    else:
        assert np.all(mp.m < mp.a)


@pytest.mark.parametrize("claim", list(ec.CLAIMS.values()), ids=list(ec.CLAIMS))
def test_builtin_claims_valid(claim):
    claim.validate()
    assert claim.level == claim.initial_price + 1.0


def test_level_is_recomputed_per_claim():
    assert ec.ATM_CALL.level == pytest.approx(1.3829249, abs=1e-6)
    assert ec.DIGITAL_CALL.level == pytest.approx(an.normal_cdf(-0.5) + 1.0, abs=1e-15)
    assert ec.UNIT_BOND.level == 2.0


def test_unknown_claim():
    with pytest.raises(ConfigError):
        ec.get_claim("american_put")


def test_claim_validation_catches_bad_terminal():
    bad = ec.Claim("bad", lambda t, s: np.asarray(s) * 0 + 0.5, lambda s: np.zeros(np.shape(s)))
    with pytest.raises(ValueError):
        bad.validate()


@pytest.mark.parametrize("kind,n", [("uniform_qv", 512), ("uniform_t", 64), ("uniform_qv", 2), ("uniform_t", 2)])
@pytest.mark.parametrize("bridge", [True, False])
def test_market_path_invariants(kind, n, bridge):
    g = make_grid(GridSpec(kind, n, 40.0))
    for claim in ec.CLAIMS.values():
        for pid in range(40):
            mp = ec.simulate_market_path(sample_brownian(g, 3, pid), g, claim, bridge)
            check_invariants(mp)


def test_s1_is_exact_gbm():
    g = make_grid(GridSpec("uniform_t", 16))
    bp = sample_brownian(g, 1, 0)
    mp = ec.simulate_market_path(bp, g)
    expected = np.exp(np.concatenate([[0.0], np.cumsum(bp.increments - 0.5 * g.dt)]))
    np.testing.assert_allclose(mp.s1, expected, rtol=1e-14)


def test_shared_driver_before_stop():
    # M uses the same increments as S1
    g = make_grid(GridSpec("uniform_qv", 64, 5.0))
    bp = sample_brownian(g, 2, 1)
    mp = ec.simulate_market_path(bp, g, bridge_correction=False)
    k = mp.stop_index if mp.stopped else g.n_steps - 1
    expected = np.concatenate([[0.0], np.cumsum(bp.increments / np.sqrt(g.one_minus_t[:-1]))])[:k]
    np.testing.assert_allclose(mp.m[:k], expected, rtol=0, atol=1e-12)


def test_mismatched_path_and_grid():
    g = make_grid(GridSpec("uniform_t", 8))
    with pytest.raises(MismatchError):
        ec.simulate_market_path(BrownianPath(np.zeros(5), 0, 0), g)


def test_m_not_advanced_across_infinite_qv_step():
    g = make_grid(GridSpec("uniform_qv", 4, 0.5))
    # tiny increments: never reaches a, but a huge last increment must not count
    inc = np.array([0.0, 0.0, 0.0, 0.0, 50.0])
    mp = ec.simulate_market_path(BrownianPath(inc, 0, 0), g, bridge_correction=False)
    assert not mp.stopped and mp.m[-1] == 0.0


def test_reference_path_matches_ensemble(engine, qv_grid):
    nodes = np.arange(qv_grid.n_nodes)
    ens = ec.simulate_ensemble(qv_grid, ec.ATM_CALL, 30, seed=8, nodes=nodes, engine=engine)
    for i in range(30):
        mp = ec.simulate_market_path(sample_brownian(qv_grid, 8, i), qv_grid)
        assert (mp.stop_index if mp.stopped else -1) == ens.stop_index[i]
        np.testing.assert_allclose(ens.s1[i], mp.s1, rtol=1e-13)
        np.testing.assert_allclose(ens.m[i], mp.m, rtol=0, atol=1e-12)
        np.testing.assert_allclose(ens.s2[i], mp.s2, rtol=0, atol=1e-12)
        assert ens.m_min[i, -1] == pytest.approx(mp.m.min(), abs=1e-12)


def test_engines_agree_on_ensembles(qv_grid):
    kw = dict(claim=ec.DIGITAL_CALL, n_paths=500, seed=4)
    a = ec.simulate_ensemble(qv_grid, engine="numpy", **kw)
    b = ec.simulate_ensemble(qv_grid, engine="numba", **kw)
    assert np.array_equal(a.stop_index, b.stop_index)
    np.testing.assert_allclose(a.s2, b.s2, rtol=0, atol=1e-12)


def test_ensemble_invariants(qv_ensemble):
    ens = qv_ensemble
    assert np.all(ens.s2[:, 0] == -1.0)
    st = ens.stopped
    assert np.max(np.abs(ens.s2[st, -1] - ens.d[st])) <= 1e-9
    assert np.all(ens.m[~st, -1] < ens.a)
    assert np.all(ens.m_min <= ens.m + 0.0)
    assert ens.qv_horizon() == 40.0


def test_bridge_never_decreases_stopped_fraction():
    g = make_grid(GridSpec("uniform_qv", 128, 40.0))
    on = ec.simulate_ensemble(g, n_paths=5000, seed=3, bridge_correction=True)
    off = ec.simulate_ensemble(g, n_paths=5000, seed=3, bridge_correction=False)
    assert np.all(on.stopped >= off.stopped)
    # stopping can only move earlier
    both = off.stopped
    assert np.all(on.stop_index[both] <= off.stop_index[both])


def test_bridge_moves_toward_oracle():
    oracle = 1 - an.hitting_tail(ec.ATM_CALL.level, 40.0)
    errs = {}
    for n in (64, 512):
        g = make_grid(GridSpec("uniform_qv", n, 40.0))
        for bridge in (False, True):
            ens = ec.simulate_ensemble(g, n_paths=20000, seed=12, bridge_correction=bridge, nodes=[0])
            errs[n, bridge] = abs(1 - ens.unstopped_fraction - oracle)
    assert errs[64, False] > errs[512, False]
    assert errs[64, True] < errs[64, False]


def test_unstopped_fraction_and_conditional_mean():
    g = make_grid(GridSpec("uniform_qv", 1024, 40.0))
    ens = ec.simulate_ensemble(g, n_paths=100_000, seed=2024, nodes=[0])
    a = ens.a
    h = an.hitting_tail(a, 40.0)
    un = ~ens.stopped
    assert binomial_tail_test(int(un.sum()), ens.n_paths, h, ALPHA_3SIGMA).passed
    target = -a * (1 - h) / h
    assert target == pytest.approx(-6.61, abs=0.01)
    rep = mean_test(ens.m[un, -1], target, ALPHA_3SIGMA)
    assert rep.passed, rep.line()


def test_interior_means(qv_ensemble):
    means = ec.expected_means(qv_ensemble)
    k = qv_ensemble.nodes.size
    for j in range(1, k - 1, 50):
        assert abs(means.s1[j] - 1) <= 4 * means.s1_se[j]
        assert abs(means.m[j]) <= 4 * means.m_se[j]
        assert abs(means.s2[j] + 1) <= 4 * means.s2_se[j]
    assert means.s2_se[0] == 0.0 and means.s2[0] == -1.0


def test_expected_means_of_path_list_equals_ensemble(t_grid):
    paths = [ec.simulate_market_path(sample_brownian(t_grid, 1, i), t_grid) for i in range(50)]
    ens = ec.simulate_ensemble(t_grid, n_paths=50, seed=1, nodes=np.arange(t_grid.n_nodes))
    a, b = ec.expected_means(paths), ec.expected_means(ens)
    np.testing.assert_allclose(a.s2, b.s2, atol=1e-13)
    with pytest.raises(EmptyEnsembleError):
        ec.expected_means([])


def test_expected_means_order_independent(qv_ensemble):
    x = qv_ensemble.s2
    perm = np.random.default_rng(0).permutation(x.shape[0])
    from negcall.stats import column_mean_stderr

    m1, s1 = column_mean_stderr(x)
    m2, s2 = column_mean_stderr(x[perm])
    assert np.max(np.abs(m1 - m2)) <= 1e-10 and np.max(np.abs(s1 - s2)) <= 1e-10


def test_exact_law_backend():
    ex = ec.simulate_exact_law(ec.ATM_CALL, 100_000, seed=9)
    assert np.all(ex.m_terminal == ex.a)
    assert mean_test(ex.s2_terminal, C0, ALPHA_3SIGMA).passed
    assert np.array_equal(ex.s2_terminal, ex.d) or np.max(np.abs(ex.s2_terminal - ex.d)) <= 1e-12
    # median of the pre-hit minimum is -a
    below = np.sum(ex.minimum < -ex.a)
    assert abs(below - ex.n_paths / 2) <= 3 * math.sqrt(ex.n_paths / 4)
    t_a, mn, m1 = ec.simulate_terminal_exact(ex.a, 9, 4)
    assert (t_a, mn, m1) == (ex.hitting_time[4], ex.minimum[4], ex.a)


def test_minimum_mean_is_unstable():
    # E[min] is infinite: the running sample mean keeps drifting down
    ex = ec.simulate_exact_law(ec.ATM_CALL, 400_000, seed=1)
    means = [np.mean(ex.minimum[: 4**k]) for k in (5, 7, 9)]
    assert means[-1] < -5 * ex.a


def test_empty_ensemble():
    with pytest.raises(EmptyEnsembleError):
        ec.simulate_ensemble(make_grid(GridSpec("uniform_t", 4)), n_paths=0)


def test_grid_for_backend():
    assert ec.grid_for_backend("euler_qv", 16, 3.0).kind == "uniform_qv"
    assert ec.grid_for_backend("euler_uniform_t", 16, 3.0).kind == "uniform_t"
