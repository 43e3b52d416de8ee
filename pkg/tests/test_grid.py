import math

import numpy as np
import pytest

from affineflow.grid import (
    BoundaryCondition,
    Grid1D,
    Grid2D,
    GridFn,
    abs_ux_minus,
    abs_ux_plus,
    d2_xx,
    d2_xy,
    d_centered_x,
    d_upwind,
    extend,
    grad_norm_minus,
    grad_norm_plus,
    pad,
    read_csv,
    write_csv,
)


def grid2(n, h, lo=0.0):
    return Grid2D(n, n, h, lo, lo)


def test_quadratic_and_bilinear_exactness():
    g = grid2(9, 0.5, -2.0)
    X, Y = g.mesh()
    assert d2_xx(GridFn(g, X**2), 4, 4) == pytest.approx(2.0, abs=1e-12)
    g2 = grid2(9, 0.25, -1.0)
    X, Y = g2.mesh()
    assert d2_xy(GridFn(g2, X * Y), 3, 5) == pytest.approx(1.0, abs=1e-12)


def test_centered_cubic():
    g = Grid1D.interval(21, 0.0, 2.0)  # h = 0.1, x[10] = 1
    u = GridFn(g, g.x**3)
    assert d_centered_x(u, 10) == pytest.approx((1.1**3 - 0.9**3) / 0.2)
    assert d_centered_x(u, 10) == pytest.approx(3.01)


def test_one_sided_examples():
    g = Grid1D.interval(11, -1.0, 1.0)  # h = 0.2, x[5] = 0
    lin = GridFn(g, g.x)
    assert d_upwind(lin, 5) == pytest.approx(1.0)
    assert abs_ux_plus(lin, 5) == pytest.approx(1.0)
    assert abs_ux_minus(lin, 5) == pytest.approx(-1.0)
    ab = GridFn(g, np.abs(g.x))
    assert d_upwind(ab, 5) == pytest.approx(-1.0)
    assert d_upwind(ab, 5, direction="forward") == pytest.approx(-1.0)
    assert abs_ux_plus(ab, 5) == 0.0
    assert abs_ux_minus(ab, 5) == pytest.approx(-1.0)
    const = GridFn(g, np.full(11, 3.0))
    assert d_upwind(const, 5) == 0.0
    assert abs_ux_plus(const, 5) == abs_ux_minus(const, 5) == 0.0
    with pytest.raises(ValueError):
        d_upwind(lin, 5, direction="sideways")


def test_gradient_norms():
    g = grid2(7, 0.3, -1.0)
    X, Y = g.mesh()
    up = GridFn(g, X + Y)
    assert grad_norm_plus(up, 3, 3) == pytest.approx(math.sqrt(2))
    assert grad_norm_minus(up, 3, 3) == pytest.approx(-math.sqrt(2))
    # the upwind norms are even in u: a sign flip leaves both unchanged
    down = GridFn(g, -(X + Y))
    assert grad_norm_plus(down, 3, 3) == pytest.approx(math.sqrt(2))
    assert grad_norm_minus(down, 3, 3) == pytest.approx(-math.sqrt(2))
    const = GridFn(g, np.ones(g.shape))
    assert grad_norm_plus(const, 3, 3) == grad_norm_minus(const, 3, 3) == 0.0


def test_neumann_reflection_and_padding():
    g = Grid1D.interval(6)
    u = GridFn(g, np.arange(6.0))
    bc = BoundaryCondition.neumann()
    assert extend(u, bc, -1) == 1.0
    assert extend(u, bc, -3) == 3.0
    assert extend(u, bc, 7) == 3.0
    with pytest.raises(IndexError):
        extend(u, None, -1)
    P = pad(np.arange(16.0).reshape(4, 4), 2, bc)
    assert P.shape == (8, 8)
    assert P[0, 2] == P[4, 2]  # row -2 mirrors row 2
    with pytest.raises(IndexError):
        pad(np.zeros((3, 3)), 3, bc)


def test_dirichlet_layer():
    g = grid2(20, 0.1)
    vals = GridFn(g, np.random.default_rng(0).random(g.shape))
    bc = BoundaryCondition.dirichlet(vals, 7)
    mask = bc.layer_mask(g)
    assert mask[3, 10] and mask[10, 16] and not mask[10, 10]
    assert mask.sum() == 20 * 20 - 6 * 6
    with pytest.raises(ValueError):
        BoundaryCondition.dirichlet(vals, 0)
    with pytest.raises(ValueError):
        BoundaryCondition("periodic")


def test_gridfn_rejects_nonfinite():
    g = Grid1D.interval(4)
    with pytest.raises(Exception):
        GridFn(g, [0.0, np.nan, 1.0, 2.0])
    with pytest.raises(Exception):
        GridFn(g, [0.0, 1.0])


def test_csv_roundtrip(tmp_path):
    g = Grid2D(5, 4, 0.25, -1.0, 0.5)
    u = GridFn(g, np.random.default_rng(1).standard_normal(g.shape))
    write_csv(u, tmp_path / "u.csv")
    v = read_csv(tmp_path / "u.csv")
    assert v.grid == g
    np.testing.assert_array_equal(u.values, v.values)
