import math

import numpy as np
import pytest

from affineflow.grid import BoundaryCondition, Grid2D, GridFn
from affineflow.nonlinearity import RegularizationParams
from affineflow.problems import ellipse_problem, static_example
from affineflow.schemes import SchemeConfig
from affineflow.solve import (
    Status,
    TimeStepPolicy,
    evolve,
    lipschitz_constant_2d,
    prolong,
    solve_steady,
)

NEU = BoundaryCondition.neumann()


def test_lipschitz_constant_examples():
    assert lipschitz_constant_2d(1.0, 1, RegularizationParams(1, 1)) == 3.0
    h = 1 / 32
    reg = RegularizationParams.default_2d(h)
    expected = 20 * 32 ** (1 / 9) * 32 + 2 * 20 * 32 ** (4 / 9) / (3 / 32) ** 2
    assert lipschitz_constant_2d(h, 3, reg) == pytest.approx(expected)
    assert lipschitz_constant_2d(h, 3, reg) == pytest.approx(20 * h ** (-10 / 9) + 40 / 9 * h ** (-22 / 9))
    assert lipschitz_constant_2d(h, 7, reg) < lipschitz_constant_2d(h, 3, reg)


def test_time_step_policies():
    h = 0.05
    cfg = SchemeConfig.default("elliptic-regularized", h)
    assert TimeStepPolicy("h2").resolve(h, cfg) == h * h / 2
    assert TimeStepPolicy("h2/8").resolve(h, cfg) == h * h / 8
    assert TimeStepPolicy.parse("fixed:0.001").resolve(h, cfg) == 0.001
    assert TimeStepPolicy().resolve(h, cfg) == pytest.approx(1 / lipschitz_constant_2d(h, 3, cfg.reg))
    std = SchemeConfig.default("standard", h)
    assert TimeStepPolicy().resolve(h, std) == pytest.approx(1 / lipschitz_constant_2d(h, 7, std.reg))
    with pytest.raises(ValueError):
        TimeStepPolicy("cfl")
    with pytest.raises(ValueError):
        TimeStepPolicy("fixed")


def test_constant_stays_constant():
    g = Grid2D.square(20, -1.0, 1.0)
    u0 = GridFn(g, np.full(g.shape, 0.7))
    for variant in ("standard", "elliptic-regularized", "filtered"):
        snaps, rep = evolve(u0, None, SchemeConfig.default(variant, g.h), NEU, [0.1, 0.05])
        assert rep.status is Status.FINISHED
        assert [s[0] <= r for s, r in zip(snaps, (0.05, 0.1))] == [True, True]
        for _, u in snaps:
            np.testing.assert_array_equal(u.values, 0.7)


def test_snapshot_rule():
    g = Grid2D.square(16, -1.0, 1.0)
    u0 = GridFn(g, np.zeros(g.shape))
    snaps, rep = evolve(u0, None, SchemeConfig.default("standard", g.h), NEU, [0.0, 0.1, 0.3], dt=0.03)
    times = [s[0] for s in snaps]
    assert times == pytest.approx([0.0, 0.09, 0.3])
    assert rep.iterations == 10


def test_dirichlet_time_dependent_layer_follows_exact():
    prob = ellipse_problem("dirichlet")
    g = prob.grid(24)
    bc = prob.boundary(g)
    snaps, rep = evolve(prob.initial(g), None, SchemeConfig.default("standard", g.h), bc, [0.05])
    t, u = snaps[0]
    mask = bc.layer_mask(g)
    np.testing.assert_allclose(u.values[mask], prob.exact(g, t).values[mask], atol=1e-12)


def test_blow_up_reported():
    g = Grid2D.square(16, -1.0, 1.0)
    X, Y = g.mesh()
    u0 = GridFn(g, np.sin(5 * X) * np.cos(7 * Y))
    snaps, rep = evolve(u0, None, SchemeConfig.default("standard", g.h), NEU, [5000.0], dt=5.0)
    assert rep.status is Status.BLOW_UP
    assert snaps == []


def test_steady_from_exact_converges_immediately():
    prob = static_example("a")
    g = prob.grid(32)
    u, rep = solve_steady(prob.exact(g), prob.rhs(g), SchemeConfig.default("standard", g.h),
                          prob.boundary(g), TimeStepPolicy("h2"))
    assert rep.status is Status.CONVERGED
    assert rep.iterations == 0
    assert np.max(np.abs(u.values - prob.exact(g).values)) == 0.0


def test_steady_max_iters():
    g = Grid2D.square(5, -1.0, 1.0)
    zero = GridFn(g, np.zeros(g.shape))
    bc = BoundaryCondition.dirichlet(zero, 1)
    f = GridFn(g, np.full(g.shape, 1e6))
    _, rep = solve_steady(zero, f, SchemeConfig.default("standard", g.h), bc, TimeStepPolicy("h2"), max_iter=50)
    assert rep.status is Status.MAX_ITERS
    assert rep.iterations == 50


def test_warm_start_saves_iterations():
    prob = static_example("a")
    coarse_g, fine_g = prob.grid(32), prob.grid(64)
    cfg_c = SchemeConfig.default("standard", coarse_g.h)
    bc_c = prob.boundary(coarse_g)
    mask_c = bc_c.layer_mask(coarse_g)
    ex_c = prob.exact(coarse_g)
    uc, _ = solve_steady(GridFn(coarse_g, np.where(mask_c, ex_c.values, 0.0)), prob.rhs(coarse_g), cfg_c, bc_c,
                         TimeStepPolicy("h2"))
    bc = prob.boundary(fine_g)
    mask = bc.layer_mask(fine_g)
    ex = prob.exact(fine_g)
    cfg = SchemeConfig.default("standard", fine_g.h)
    _, cold = solve_steady(GridFn(fine_g, np.where(mask, ex.values, 0.0)), prob.rhs(fine_g), cfg, bc, TimeStepPolicy("h2"))
    warm0 = np.where(mask, ex.values, prolong(uc, fine_g).values)
    _, warm = solve_steady(GridFn(fine_g, warm0), prob.rhs(fine_g), cfg, bc, TimeStepPolicy("h2"))
    assert warm.status is cold.status is Status.CONVERGED
    assert warm.iterations < cold.iterations


def test_prolong():
    g = Grid2D.square(9, -1.0, 1.0)
    X, Y = g.mesh()
    u = GridFn(g, 2 * X - 3 * Y + 1)
    np.testing.assert_allclose(prolong(u, g).values, u.values, atol=1e-14)
    fine = Grid2D.square(17, -1.0, 1.0)
    FX, FY = fine.mesh()
    np.testing.assert_allclose(prolong(u, fine).values, 2 * FX - 3 * FY + 1, atol=1e-12)
    q = GridFn(g, X**2)
    p = prolong(q, fine).values
    # midpoint between nodes x-h and x+h of the coarse grid: average of the squares = x^2 + h^2
    h = g.h
    assert p[0, 1] == pytest.approx(((-1.0) ** 2 + (-1.0 + h) ** 2) / 2)
    assert p[0, 3] == pytest.approx((-1.0 + 1.5 * h) ** 2 + (h / 2) ** 2)
    with pytest.raises(ValueError):
        prolong(u, Grid2D.square(17, -2.0, 2.0))


def test_monotone_euler_map_sample():
    rng = np.random.default_rng(5)
    g = Grid2D.square(12, -1.0, 1.0)
    cfg = SchemeConfig.default("elliptic-regularized", g.h)
    for _ in range(20):
        u = rng.standard_normal(g.shape)
        v = u + rng.random(g.shape)
        dt = TimeStepPolicy().resolve(g.h, cfg)
        su, _ = evolve(GridFn(g, u), None, cfg, NEU, [dt])
        sv, _ = evolve(GridFn(g, v), None, cfg, NEU, [dt])
        assert np.all(sv[0][1].values >= su[0][1].values - 1e-12)
