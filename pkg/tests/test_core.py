import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigmag.core import (CadlagPath, SigmaDecomposition, TimeGrid, left_point, make_grid,
                         read_csv, stieltjes_integral, total_variation, write_csv)
from sigmag.generators import gen_abs_bm, gen_injection, gen_reset


def test_grid_basic():
    g = make_grid(1.0, 1000)
    assert g.dt == pytest.approx(0.001)
    assert g.dt * g.steps == pytest.approx(g.horizon, rel=1e-15)
    g2 = make_grid(2.0, 1)
    assert g2.dt == 2.0
    assert list(g2.times) == [0.0, 2.0]


@pytest.mark.parametrize("h,n", [(1.0, 0), (0.0, 10), (-1.0, 10), (float("inf"), 3),
                                 (1.0, 2.5), (1.0, True)])
def test_grid_rejects(h, n):
    with pytest.raises(ValueError):
        make_grid(h, n)


def test_grid_index_nearest_and_clipped():
    g = make_grid(1.0, 10)
    assert g.index(0.31) == 3
    assert g.index(-1) == 0 and g.index(5) == 10


def test_path_validation(grid):
    with pytest.raises(ValueError):
        CadlagPath(grid, np.zeros(5), np.zeros(5))
    pre = np.zeros(grid.n_points)
    post = pre.copy()
    post[0] = 1.0
    with pytest.raises(ValueError, match="jump at time 0"):
        CadlagPath(grid, pre, post)
    with pytest.raises(ValueError):
        CadlagPath(grid, np.zeros(grid.n_points), np.zeros(grid.n_points + 1))


def test_path_is_immutable(grid):
    p = CadlagPath.zeros(grid)
    with pytest.raises(ValueError):
        p.post[1] = 3.0


def test_jump_and_increment():
    g = make_grid(3.0, 3)
    p = CadlagPath(g, [0.0, 1.0, 1.5, 3.0], [0.0, 1.0, 2.0, 2.0])
    assert list(p.jump) == [0.0, 0.0, 0.5, -1.0]
    assert list(p.increment) == [0.0, 1.0, 0.5, 1.0]
    assert list(left_point(p)) == [0.0, 0.0, 1.0, 2.0]


def staircase(grid, jumps):
    post = np.zeros(grid.n_points)
    pre = np.zeros(grid.n_points)
    level = 0.0
    for i in range(1, grid.n_points):
        pre[i] = level
        level += jumps.get(i, 0.0)
        post[i] = level
    return CadlagPath(grid, pre, post)


def test_total_variation_examples(grid):
    assert total_variation(CadlagPath.continuous(grid, np.full(grid.n_points, 3.0))) == 0.0
    assert total_variation(staircase(grid, {10: 1.0, 20: 1.0})) == 2.0


def test_total_variation_of_monotone_drift_is_endpoint(fine_grid):
    d = gen_abs_bm(fine_grid, 3, member=range(20))
    tv = total_variation(d.A)
    assert np.allclose(tv, d.A.post[:, -1] - d.A.post[:, 0], rtol=1e-9, atol=1e-12)


@st.composite
def staircase_pairs(draw):
    n = draw(st.integers(2, 30))
    g = make_grid(1.0, n)
    vals = st.floats(-5, 5, allow_nan=False)

    def path():
        jumps = draw(st.dictionaries(st.integers(1, n), vals, max_size=n))
        cont = draw(st.lists(vals, min_size=n, max_size=n))
        post = np.zeros(n + 1)
        pre = np.zeros(n + 1)
        x = 0.0
        for i in range(1, n + 1):
            x += cont[i - 1]
            pre[i] = x
            x += jumps.get(i, 0.0)
            post[i] = x
        return CadlagPath(g, pre, post)

    return path(), path()


@settings(max_examples=200, deadline=None)
@given(staircase_pairs())
def test_total_variation_subadditive(pair):
    p, q = pair
    assert total_variation(p + q) <= total_variation(p) + total_variation(q) + 1e-9
    assert total_variation(p) >= 0


def test_stieltjes_examples(grid):
    d = gen_reset(grid, 1, [0.5])
    I0 = stieltjes_integral(np.zeros(grid.n_points), d.X)
    assert not I0.post.any() and not I0.pre.any()
    A = staircase(grid, {5: 1.0, 9: 2.0})
    I1 = stieltjes_integral(np.ones(grid.n_points), A)
    assert I1.post[-1] == A.post[-1] - A.post[0]
    inj = gen_injection(grid, 4, [0.2, 0.6], [0.5, 0.7])
    h = (inj.X.pre != 0).astype(float)
    I2 = stieltjes_integral(h, inj.V)
    assert not I2.post.any()


def test_stieltjes_length_mismatch(grid):
    with pytest.raises(ValueError):
        stieltjes_integral(np.ones(3), CadlagPath.zeros(grid))


def test_stieltjes_separate_jump_integrand():
    g = make_grid(2.0, 2)
    p = CadlagPath(g, [0.0, 1.0, 2.0], [0.0, 1.0, 5.0])
    I = stieltjes_integral([0.0, 2.0, 3.0], p, h_jump=[0.0, 0.0, 10.0])
    # increments: 2*1 at t1, then 3*1 continuous + 10*3 jump at t2
    assert list(I.post) == [0.0, 2.0, 35.0]
    assert list(I.pre) == [0.0, 2.0, 5.0]


def test_decomposition_check_and_shapes(grid):
    d = gen_reset(grid, 2, [0.3, 0.7], member=range(4))
    d.check()
    assert len(d) == 4 and d[1].batch_shape == ()
    with pytest.raises(TypeError):
        len(d[0])
    bad = SigmaDecomposition(d.X, d.M, d.A, d.C, d.C, d.info)
    with pytest.raises(AssertionError):
        bad.check()


def test_negation_keeps_additivity(grid):
    d = -gen_reset(grid, 2, [0.3])
    assert d.additivity_error() < 1e-12


def test_csv_roundtrip(tmp_path, grid):
    d = gen_reset(grid, 9, [0.25, 0.5])
    f = tmp_path / "m.csv"
    write_csv(d, f)
    cols = read_csv(f)
    assert list(cols) == ["t", "X_pre", "X_post", "M_post", "A_post", "C_post", "V_post"]
    assert len(cols["t"]) == grid.n_points
    assert np.array_equal(cols["X_post"], d.X.post)
    assert np.array_equal(cols["C_post"], d.C.post)
    with pytest.raises(ValueError):
        write_csv(gen_reset(grid, 9, [0.5], member=range(2)), f)


def test_timegrid_is_hashable_value():
    assert TimeGrid(1.0, 10) == make_grid(1, 10)
