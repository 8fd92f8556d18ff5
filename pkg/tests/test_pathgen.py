import math

import numpy as np
import pytest
from scipy import special

from negcall import analytics as an
from negcall import pathgen as pg
from negcall.errors import DomainError, GridSpecError, MismatchError
from negcall.stats import ALPHA_3SIGMA, binomial_tail_test

A = 2 * an.normal_cdf(0.5)


@pytest.mark.parametrize(
    "spec",
    [pg.GridSpec("weird"), pg.GridSpec("uniform_t", 1), pg.GridSpec("uniform_qv", 8, 0.0), pg.GridSpec("uniform_qv", 8, np.inf), pg.GridSpec("uniform_t", 4.5)],
)
def test_invalid_specs(spec):
    with pytest.raises(GridSpecError):
        pg.make_grid(spec)


def test_uniform_t_grid():
    g = pg.make_grid(pg.GridSpec("uniform_t", 4))
    assert np.array_equal(g.t, [0, 0.25, 0.5, 0.75, 1.0])
    assert g.tau[-1] == np.inf and g.tau[0] == 0
    assert math.fsum(g.dt) == 1.0
    assert g.node_at(0.5) == 2
    with pytest.raises(GridSpecError):
        g.node_at(0.3)


def test_uniform_qv_grid_example():
    g = pg.make_grid(pg.GridSpec("uniform_qv", 2, 2.0))
    assert np.array_equal(g.tau[:3], [0, 1, 2]) and g.tau[3] == np.inf
    np.testing.assert_allclose(g.t, [0, 1 - math.exp(-1), 1 - math.exp(-2), 1], rtol=0, atol=1e-15)
    assert g.n_steps == 3


@pytest.mark.parametrize("spec", [pg.GridSpec("uniform_t", 64), pg.GridSpec("uniform_qv", 4096, 40.0), pg.GridSpec("uniform_qv", 7, 3.0)])
def test_grid_invariants(spec):
    g = pg.make_grid(spec)
    assert g.t[0] == 0 and g.t[-1] == 1 and g.tau[-1] == np.inf
    assert np.all(np.diff(g.tau) > 0)
    assert np.all(np.diff(g.t) >= 0)
    assert np.all(g.dt > 0)
    interior = slice(1, -1)
    # tau is exact through one_minus_t even where t itself has rounded to 1
    assert np.max(np.abs(g.tau[interior] + np.log(g.one_minus_t[interior]))) <= 1e-12
    assert abs(math.fsum(g.dt) - 1.0) <= 1e-12
    t_ok = g.one_minus_t[interior] > 1e-4
    assert np.max(np.abs(g.tau[interior][t_ok] - an.qv_time(g.t[interior][t_ok]))) <= 1e-12


def test_qv_grid_calendar_time_rounds_to_one():
    g = pg.make_grid(pg.GridSpec("uniform_qv", 4096, 40.0))
    # float64 cannot separate these t values from 1; the grid carries 1 - t instead
    assert g.t[-2] == 1.0
    assert g.one_minus_t[-2] == pytest.approx(math.exp(-40.0), rel=1e-12)


def test_dyadic_refinement():
    coarse = pg.make_grid(pg.GridSpec("uniform_qv", 64, 40.0))
    fine = pg.make_grid(pg.GridSpec("uniform_qv", 128, 40.0))
    # every coarse node, terminal node included, is a fine node
    assert np.array_equal(fine.tau[:-1:2], coarse.tau[:-1])
    assert np.array_equal(fine.one_minus_t[:-1:2], coarse.one_minus_t[:-1])
    assert set(coarse.t.tolist()) <= set(fine.t.tolist())
    assert fine.tau[-1] == coarse.tau[-1] == np.inf


def test_brownian_determinism_and_immutability(engine):
    g = pg.make_grid(pg.GridSpec("uniform_qv", 256))
    a = pg.sample_brownian(g, 99, 5, engine=engine)
    b = pg.sample_brownian(g, 99, 5, engine=engine)
    assert a.increments.tobytes() == b.increments.tobytes()
    assert a.increments.shape == (g.n_steps,)
    with pytest.raises(ValueError):
        a.increments[0] = 1.0


def test_brownian_engines_agree():
    g = pg.make_grid(pg.GridSpec("uniform_t", 128))
    x = pg.sample_brownian_ensemble(g, 1, 64, engine="numpy")
    y = pg.sample_brownian_ensemble(g, 1, 64, engine="numba")
    np.testing.assert_allclose(x, y, rtol=0, atol=1e-15)


def test_brownian_moments():
    g = pg.make_grid(pg.GridSpec("uniform_qv", 8, 40.0))
    n = 100_000
    db = pg.sample_brownian_ensemble(g, 31, n)
    for k in (0, 3, g.n_steps - 1):
        dt = g.dt[k]
        assert abs(db[:, k].mean()) <= 3 * math.sqrt(dt / n)
        # sample variance / dt ~ chi^2_{n-1}/(n-1), sd sqrt(2/(n-1))
        assert abs(db[:, k].var(ddof=1) / dt - 1) <= 3 * math.sqrt(2 / (n - 1))
    assert abs(np.corrcoef(db[:-1, 0], db[1:, 0])[0, 1]) <= 3 / math.sqrt(n)


def test_hitting_times_match_tail():
    ids = np.arange(100_000)
    t_a = pg.sample_hitting_times(A, 5, ids)
    assert np.all(np.isfinite(t_a) & (t_a > 0))
    for tau in (1.0, 10.0, 40.0):
        rep = binomial_tail_test(int(np.sum(t_a > tau)), ids.size, an.hitting_tail(A, tau), ALPHA_3SIGMA)
        assert rep.passed, rep.line()
    med = A**2 / special.ndtri(0.75) ** 2
    # median of a continuous law: the count below it is Binomial(n, 1/2)
    below = np.sum(t_a < med)
    assert abs(below - ids.size / 2) <= 3 * math.sqrt(ids.size / 4)
    assert pg.sample_hitting_time(A, 5, 12) == t_a[12]


def test_pre_hit_minima_match_ruin():
    ids = np.arange(100_000)
    m = pg.sample_pre_hit_minima(A, 6, ids)
    assert np.all(m <= 0)
    for L in (1.0, 5.0, 10.0):
        rep = binomial_tail_test(int(np.sum(m < -L)), ids.size, an.ruin_tail(A, L), ALPHA_3SIGMA)
        assert rep.passed, rep.line()
    assert pg.pre_hit_minimum_from_uniform(A, 1.0) == 0.0
    assert pg.pre_hit_minimum_from_uniform(A, 0.5) == -A
    assert pg.sample_pre_hit_minimum(A, 6, 3) == m[3]


def test_samplers_reject_bad_level():
    with pytest.raises(DomainError):
        pg.sample_hitting_time(0.0, 1, 0)
    with pytest.raises(DomainError):
        pg.sample_pre_hit_minimum(-1.0, 1, 0)


def test_levy_zero_redraw(monkeypatch):
    real = pg.kernels.normals

    def fake(seed, ids, stream, n, engine=None):
        out = real(seed, ids, stream, n, engine=engine)
        out[0, 0] = 0.0
        return out

    monkeypatch.setattr(pg.kernels, "normals", fake)
    t = pg.sample_hitting_times(A, 1, [0, 1])
    assert np.all(np.isfinite(t))


def test_dump_round_trip(tmp_path):
    spec = pg.GridSpec("uniform_qv", 32, 10.0)
    inc = pg.sample_brownian_ensemble(pg.make_grid(spec), 7, 5)
    f = tmp_path / "paths.bin"
    pg.dump_ensemble(f, spec, 7, inc)
    spec2, seed, inc2 = pg.load_ensemble(f)
    assert spec2 == spec and seed == 7
    assert inc2.tobytes() == inc.tobytes()
    with pytest.raises(MismatchError):
        pg.dump_ensemble(f, spec, 7, inc[:, :-1])
    f.write_bytes(f.read_bytes()[:-8])
    with pytest.raises(ValueError):
        pg.load_ensemble(f)
    f.write_bytes(b"garbage")
    with pytest.raises(ValueError):
        pg.load_ensemble(f)
