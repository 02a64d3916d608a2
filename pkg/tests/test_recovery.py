import math

import numpy as np
import pytest
from scipy import stats

from oracles import arcsine_cdf, gamblers_ruin_up
from sigmag.core import CadlagPath, SigmaDecomposition, make_grid
from sigmag.generators import gen_injection, gen_reset
from sigmag.recovery import exit_at_upper, honest_time, recovery_check, supremum_identity_check
from sigmag.rng import stream


def test_honest_time_zero_path(grid):
    z = CadlagPath.zeros(grid)
    assert honest_time(SigmaDecomposition(z, z, z, z, z)) == grid.horizon


def test_honest_time_no_later_zero():
    g = make_grid(1.0, 4)
    X = CadlagPath.continuous(g, [0.0, 1.0, 2.0, 1.0, 3.0])
    z = CadlagPath.zeros(g)
    assert honest_time(SigmaDecomposition(X, X, z, z, z)) == 0.0


def test_honest_time_single_injection(grid):
    # large injection, never absorbed again on [0, 1]
    d = gen_injection(grid, 1, [0.3], [50.0], member=range(10))
    assert np.all(honest_time(d) == grid.times[120])


def test_honest_time_reset_and_batched(grid):
    d = gen_reset(grid, 2, [0.5], member=range(5))
    g = honest_time(d)
    assert g.shape == (5,) and np.all(g >= 0.5)


def test_arcsine_law_small():
    g = make_grid(1.0, 2000)
    d = gen_reset(g, 3, [], member=range(2000))
    X = CadlagPath(g, np.abs(d.X.pre), np.abs(d.X.post))
    z = CadlagPath.zeros(g, (2000,))
    t = honest_time(SigmaDecomposition(X, X, z, z, z), 2 * math.sqrt(g.dt))
    ks = stats.kstest(t, np.vectorize(arcsine_cdf)).statistic
    # coarse grid and small sample: the tight check lives in the acceptance suite
    assert ks < 0.08


def test_exit_boundaries():
    r = stream(0, 0)
    assert not exit_at_upper(0.0, 2.0, 10, r).any()
    assert exit_at_upper(2.0, 2.0, 10, r).all()
    assert exit_at_upper(3.0, 2.0, 10, r).all()


@pytest.mark.parametrize("m", [0.5, 1.0, 1.6])
def test_exit_gamblers_ruin(m):
    up = exit_at_upper(m, 2.0, 20_000, stream(11, 0), dt=0.01)
    p = gamblers_ruin_up(m, 2.0)
    assert abs(up.mean() - p) <= 3 * math.sqrt(p * (1 - p) / up.size)


def test_exit_is_deterministic():
    a = exit_at_upper(1.0, 2.0, 500, stream(4, 7))
    b = exit_at_upper(1.0, 2.0, 500, stream(4, 7))
    assert np.array_equal(a, b)


def test_recovery_small_run_passes_and_threads_match():
    a = recovery_check(2.0, 1.0, 1.0, 30, 400, seed=5)
    b = recovery_check(2.0, 1.0, 1.0, 30, 400, seed=5, threads=4)
    assert a.passed
    assert np.array_equal(a.estimate, b.estimate)
    assert np.all(a.stderr >= 0)
    absorbed = a.target == 2.0
    assert np.all(a.estimate[absorbed] == 2.0)


def test_recovery_inner_doubling_consistent():
    a = recovery_check(2.0, 1.0, 1.0, 20, 1000, seed=8)
    b = recovery_check(2.0, 1.0, 1.0, 20, 2000, seed=8)
    se = np.sqrt(a.stderr ** 2 + b.stderr ** 2)
    ok = (np.abs(a.estimate - b.estimate) <= 3 * se) | (se == 0)
    assert ok.mean() >= 0.9


@pytest.mark.parametrize("kw", [dict(k=0.0), dict(start=0.0), dict(start=3.0), dict(T=-1.0),
                                dict(n_inner=1)])
def test_recovery_invalid(kw):
    args = dict(k=2.0, start=1.0, T=1.0, n_outer=2, n_inner=10)
    args.update(kw)
    with pytest.raises(ValueError):
        recovery_check(**args)


def test_supremum_boundaries():
    rep = supremum_identity_check(2.0, 3.0, 0.0, 5, 50, seed=1)
    assert rep.n_outer == 1 and rep.estimate[0] == 1.0 and rep.oracle[0] == 1.0
    rep = supremum_identity_check(2.0, 0.5, 2.0, 50, 50, seed=1)
    dead = rep.oracle == 0.0
    assert np.all(rep.estimate[dead] == 0.0)


def test_supremum_midpoint():
    rep = supremum_identity_check(2.0, 1.0, 0.0, 1, 20_000, seed=2)
    assert abs(rep.estimate[0] - 0.5) <= 3 * rep.stderr[0]
    assert rep.to_json()["check"] == "supremum"
