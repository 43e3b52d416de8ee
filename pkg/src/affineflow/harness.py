"""Experiment drivers shared by the command line and the acceptance suite.

Each driver returns plain data (rows, dictionaries, fields); writing files is
left to :mod:`affineflow.cli`.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import model1d
from .contour import Polyline, axis_ratio, hausdorff, marching_squares
from .grid import GridFn
from .problems import (
    affine_ic,
    affine_transform_field,
    ellipse_problem,
    evolution_ic,
    model1d_cases,
    morphology_ic,
    static_example,
)
from .schemes import SchemeConfig, Variant
from .solve import SolveReport, Status, TimeStepPolicy, evolve, prolong, solve_steady

log = logging.getLogger(__name__)


def default_policy(variant, steady: bool = False, example: Optional[str] = None) -> TimeStepPolicy:
    """Time step used for each kind of run unless overridden.

    Regularized variants always use ``1/C^h``.  Steady solves with the
    unregularized variants use ``h^2/2`` (``h^2/8`` for the filtered scheme on
    example (d)); time-dependent runs use ``1/C^h`` of the wide stencil.
    """
    variant = Variant(variant)
    if variant.regularized or not steady:
        return TimeStepPolicy("lipschitz")
    if variant.filtered and example == "d":
        return TimeStepPolicy("h2/8")
    return TimeStepPolicy("h2")


def observed_order(e_coarse: float, e_fine: float, n_coarse: int, n_fine: int) -> float:
    """``log(e_coarse/e_fine) / log(h_coarse/h_fine)``; for doubling, the log2 ratio."""
    if not (e_coarse > 0 and e_fine > 0):
        return math.nan
    return math.log(e_coarse / e_fine) / math.log((n_fine - 1) / (n_coarse - 1))


# --- steady convergence tables -------------------------------------------------


@dataclass
class ConvergenceRow:
    N: int
    variant: str
    error_linf: float
    observed_order: Optional[float]
    status: str
    iterations: int
    final_residual: float
    dt: float
    dt_policy: str
    wall_time: float = field(default=0.0, compare=False)

    @property
    def divergent(self) -> bool:
        return self.status in (Status.BLOW_UP.value, Status.MAX_ITERS.value)

    CSV_FIELDS = ("N", "variant", "error_linf", "observed_order", "status", "iterations", "final_residual", "dt", "dt_policy")

    def csv_row(self) -> list:
        def num(x):
            if x is None or (isinstance(x, float) and math.isnan(x)):
                return "-"
            return repr(float(x))

        return [self.N, self.variant, num(self.error_linf), num(self.observed_order), self.status,
                self.iterations, num(self.final_residual), num(self.dt), self.dt_policy]


def write_rows(rows: Sequence, path, fields: Sequence[str]) -> None:
    """CSV with the given columns; rows are dataclasses or dicts.  No timings, so reruns are byte-identical."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for r in rows:
            if hasattr(r, "csv_row"):
                w.writerow(r.csv_row())
            else:
                d = r if isinstance(r, dict) else asdict(r)
                w.writerow([repr(d[k]) if isinstance(d[k], float) else d[k] for k in fields])


def _interior_error(u: GridFn, exact: GridFn, mask: np.ndarray) -> float:
    return float(np.max(np.abs(u.values - exact.values)[~mask]))


def convergence_table(
    example: str,
    variants: Iterable[str],
    Ns: Sequence[int],
    policy: Optional[TimeStepPolicy] = None,
    max_iter: int = 1_000_000,
    max_seconds: Optional[float] = None,
    on_row: Optional[Callable[[ConvergenceRow], None]] = None,
) -> list[ConvergenceRow]:
    """Steady solves of a static example over a sequence of grids.

    The coarsest grid starts from zero inside a 7-point Dirichlet layer of
    exact values; finer grids start from the prolonged coarse solution with
    the layer reset.  Errors exclude the layer.  Runs that blow up or run
    out of iterations are reported with ``error_linf = nan``.
    """
    prob = static_example(example)
    rows = []
    for variant in variants:
        variant = Variant(variant).value
        pol = policy or default_policy(variant, steady=True, example=example)
        prev: Optional[GridFn] = None
        prev_row: Optional[ConvergenceRow] = None
        for N in sorted(Ns):
            grid = prob.grid(N)
            bc = prob.boundary(grid)
            exact = prob.exact(grid)
            mask = bc.layer_mask(grid)
            if prev is None:
                start = np.where(mask, exact.values, 0.0)
            else:
                start = np.where(mask, exact.values, prolong(prev, grid).values)
            config = SchemeConfig.default(variant, grid.h)
            u, rep = solve_steady(GridFn(grid, start), prob.rhs(grid), config, bc, pol,
                                  max_iter=max_iter, max_seconds=max_seconds)
            ok = rep.status is Status.CONVERGED
            err = _interior_error(u, exact, mask) if ok else math.nan
            order = None
            if prev_row is not None and ok and not prev_row.divergent:
                order = observed_order(prev_row.error_linf, err, prev_row.N, N)
            row = ConvergenceRow(N, variant, err, order, rep.status.value, rep.iterations,
                                 rep.final_residual, rep.dt, rep.dt_policy, rep.wall_time)
            log.info("%s %s N=%d: %s err=%.4g (%d its, %.1fs)", example, variant, N, row.status, err, rep.iterations, rep.wall_time)
            rows.append(row)
            if on_row:
                on_row(row)
            prev = u if np.all(np.isfinite(u.values)) else None
            prev_row = row
    return rows


# --- time-dependent ellipse ----------------------------------------------------


def ellipse_time_table(
    bc_kind: str,
    variants: Iterable[str],
    Ns: Sequence[int],
    T: float = 0.1,
    policy: Optional[TimeStepPolicy] = None,
    on_row: Optional[Callable[[ConvergenceRow], None]] = None,
) -> list[ConvergenceRow]:
    """Errors over the whole grid against the exact ellipse solution at the snapshot time."""
    prob = ellipse_problem(bc_kind)
    rows = []
    for variant in variants:
        variant = Variant(variant).value
        pol = policy or default_policy(variant, steady=False)
        prev_row = None
        for N in sorted(Ns):
            grid = prob.grid(N)
            bc = prob.boundary(grid)
            config = SchemeConfig.default(variant, grid.h)
            snaps, rep = evolve(prob.initial(grid), None, config, bc, [T], pol)
            ok = rep.status is Status.FINISHED
            err = math.nan
            if ok:
                t, u = snaps[0]
                err = float(np.max(np.abs(u.values - prob.exact(grid, t).values)))
            order = None
            if prev_row is not None and ok and not prev_row.divergent:
                order = observed_order(prev_row.error_linf, err, prev_row.N, N)
            row = ConvergenceRow(N, variant, err, order, rep.status.value, rep.iterations,
                                 rep.final_residual, rep.dt, rep.dt_policy, rep.wall_time)
            rows.append(row)
            if on_row:
                on_row(row)
            prev_row = row
    return rows


def regularization_gap(n: int = 128, times: Sequence[float] = (0.1, 0.3, 0.5, 0.7, 0.9)) -> list[dict]:
    """Sup-norm difference between narrow elliptic runs with and without regularization.

    Ellipse initial data with Neumann conditions on ``[-4, 4]^2``; both runs
    share the time step ``1/C^h`` of the regularized scheme.
    """
    prob = evolution_ic("ellipse")
    grid = prob.grid(n)
    bc = prob.boundary(grid)
    u0 = prob.initial(grid)
    reg_cfg = SchemeConfig.default(Variant.ELLIPTIC_REGULARIZED, grid.h)
    dt = TimeStepPolicy("lipschitz").resolve(grid.h, reg_cfg)
    a, _ = evolve(u0, None, reg_cfg, bc, times, dt=dt)
    b, _ = evolve(u0, None, reg_cfg.with_variant(Variant.ELLIPTIC), bc, times, dt=dt)
    return [
        {"t": ta, "difference": float(np.max(np.abs(ua.values - ub.values)))}
        for (ta, ua), (_, ub) in zip(a, b)
    ]


# --- curve evolution -----------------------------------------------------------


def _evolution_problem(example: str):
    if example in ("ellipse-neumann", "ellipse-dirichlet"):
        return ellipse_problem(example.split("-")[1])
    if example == "morphology":
        return morphology_ic()
    if example == "affine":
        return affine_ic()
    return evolution_ic(example)


def evolution_run(
    example: str,
    variant: str,
    n: int,
    times: Sequence[float],
    policy: Optional[TimeStepPolicy] = None,
) -> tuple[list[tuple[float, GridFn]], list[list[Polyline]], SolveReport]:
    """Evolve an example and extract the zero level set at each snapshot."""
    prob = _evolution_problem(example)
    grid = prob.grid(n)
    bc = prob.boundary(grid)
    config = SchemeConfig.default(variant, grid.h)
    snaps, rep = evolve(prob.initial(grid), None, config, bc, times, policy or default_policy(variant))
    contours = [marching_squares(u, 0.0) for _, u in snaps]
    return snaps, contours, rep


def eccentricity_track(contours: list[list[Polyline]]) -> list[Optional[float]]:
    """Axis ratio of the longest closed zero contour at each snapshot (None if absent)."""
    out = []
    for cs in contours:
        closed = [c for c in cs if c.closed and len(c) >= 8]
        out.append(axis_ratio(max(closed, key=len).points) if closed else None)
    return out


# --- invariance ---------------------------------------------------------------

MORPHOLOGY_MAPS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp": np.exp,
    "cube": lambda x: x**3,
    "identity": lambda x: x,
}

_S = math.sqrt(2) / 2
AFFINE_MAPS = {
    "rot45": (np.array([[_S, _S], [-_S, _S]]), 1.0),
    "shear": (np.array([[1.0, 1.0], [-1.0, 1.0]]), 0.7),
    "rot90": (np.array([[0.0, -1.0], [1.0, 0.0]]), 1.0),
}


def morphology_test(g: str, variant: str, n: int, t: float = 1.0, policy: Optional[TimeStepPolicy] = None) -> dict:
    """``||Phi_t(g o u0) - g o Phi_t(u0)||_inf`` for the capped ellipse on ``[-3, 3]^2``."""
    if g not in MORPHOLOGY_MAPS:
        raise KeyError(f"unknown relabelling {g!r}; expected one of {sorted(MORPHOLOGY_MAPS)}")
    gfun = MORPHOLOGY_MAPS[g]
    prob = morphology_ic()
    grid = prob.grid(n)
    bc = prob.boundary(grid)
    config = SchemeConfig.default(variant, grid.h)
    pol = policy or default_policy(variant)
    u0 = prob.initial(grid)
    a, ra = evolve(GridFn(grid, gfun(u0.values)), None, config, bc, [t], pol)
    b, rb = evolve(u0, None, config, bc, [t], pol)
    status = "ok" if ra.status is rb.status is Status.FINISHED else "blow-up"
    diff = float(np.max(np.abs(a[0][1].values - gfun(b[0][1].values)))) if status == "ok" else math.nan
    return {"test": f"morphology-{g}", "variant": Variant(variant).value, "N": n, "t": a[0][0] if a else t,
            "difference": diff, "status": status, "dt": ra.dt}


def affine_test(kind: str, variant: str, n: int = 256, t: Optional[float] = None,
                policy: Optional[TimeStepPolicy] = None) -> dict:
    """Compare ``Phi_t(u o phi)`` with ``Phi_{t det(A)^(2/3)}(u) o phi``.

    Reports the sup-norm difference over grid points whose image under ``A``
    stays in the domain, and the Hausdorff distance between zero contours.
    """
    if kind not in AFFINE_MAPS:
        raise KeyError(f"unknown affine test {kind!r}; expected one of {sorted(AFFINE_MAPS)}")
    A, t_default = AFFINE_MAPS[kind]
    t = t_default if t is None else t
    prob = affine_ic()
    grid = prob.grid(n)
    bc = prob.boundary(grid)
    config = SchemeConfig.default(variant, grid.h)
    pol = policy or default_policy(variant)
    dt = pol.resolve(grid.h, config)
    u0 = prob.initial(grid)
    det = float(np.linalg.det(A))
    t_scaled = t * abs(det) ** (2 / 3)

    transformed0 = affine_transform_field(u0, A, cap=prob.cap)
    a, ra = evolve(transformed0, None, config, bc, [t], dt=dt)
    b, rb = evolve(u0, None, config, bc, [t_scaled], dt=dt)
    composed = affine_transform_field(b[0][1], A, cap=prob.cap)

    X, Y = grid.mesh()
    PX = A[0, 0] * X + A[0, 1] * Y
    PY = A[1, 0] * X + A[1, 1] * Y
    lo, hi = prob.domain
    tol = 1e-9 * (hi - lo)
    overlap = (PX >= lo - tol) & (PX <= hi + tol) & (PY >= lo - tol) & (PY <= hi + tol)
    diff = float(np.max(np.abs(a[0][1].values - composed.values)[overlap]))
    return {
        "test": f"affine-{kind}",
        "variant": Variant(variant).value,
        "N": n,
        "t": a[0][0],
        "t_scaled": b[0][0],
        "sup_difference": diff,
        "hausdorff": hausdorff(marching_squares(a[0][1]), marching_squares(composed)),
        "dt": dt,
    }


# --- instability demonstrations --------------------------------------------------


def _demo_1d(name: str, divergent_cfg, convergent_cfg, n: int, T: Optional[float], max_iter: int,
             snapshot_times: Sequence[float] = ()) -> dict:
    prob = {p.name: p for p in model1d_cases()}[name]
    grid = prob.grid(n)
    bc = prob.boundary(grid)
    u0 = prob.exact(grid)
    f = prob.rhs(grid)
    out = {"demo": name, "N": n, "runs": []}
    for label, cfg, run_T in (("divergent", divergent_cfg, T), ("convergent", convergent_cfg, None)):
        snaps: list = []
        u, rep = model1d.euler_solve_1d(u0, f, cfg, bc, T=run_T, max_iter=max_iter,
                                        snapshot_times=snapshot_times if label == "divergent" else (),
                                        snapshots=snaps)
        out["runs"].append({
            "role": label,
            "variant": cfg.variant.value,
            "dt_policy": rep.dt_policy,
            "dt": rep.dt,
            "status": rep.status.value,
            "iterations": rep.iterations,
            "initial_residual": rep.residual_history[0][2],
            "final_residual": rep.final_residual,
            "max_departure": float(np.max(np.abs(u.values - u0.values))),
            "diverged": model1d.diverged(rep, u, u0),
            "snapshots": snaps,
        })
    return out


def instability_demo(demo: str, max_iter: Optional[int] = None) -> dict:
    """Run a divergent configuration and its convergent counterpart.

    ``1d-sin``: standard scheme, 256 points, ``dt = h^2/2`` up to ``t = 5``,
    against the elliptic scheme solved to steady state.
    ``1d-x43``: elliptic scheme on ``|x|^(4/3)``, 128 points, with
    ``dt = (h^4/4)^(1/3)`` against ``dt = h^2/2``.
    ``2d-static-d``: standard scheme on example (d), N=32, ``dt = h^2/2`` up
    to ``t = 50``, against the filtered-regularized and elliptic-regularized
    steady solves.
    """
    V1 = model1d.Variant1D
    if demo == "1d-sin":
        n = 256
        h = 2 / (n - 1)
        return _demo_1d(
            "model1d-sin",
            model1d.Scheme1DConfig(V1.STANDARD, dt_policy="h2"),
            model1d.Scheme1DConfig(V1.ELLIPTIC, dt_policy="fixed", dt=h * h / 4),
            n, 5.0, max_iter or 10_000_000, snapshot_times=(0.0, 1.0, 2.0, 5.0),
        )
    if demo == "1d-x43":
        return _demo_1d(
            "model1d-x43",
            model1d.Scheme1DConfig(V1.ELLIPTIC, dt_policy="scaling", scaling_c=4.0),
            model1d.Scheme1DConfig(V1.ELLIPTIC, dt_policy="h2"),
            128, None, max_iter or 200_000,
        )
    if demo == "2d-static-d":
        return _demo_2d_static_d(max_iter or 1_000_000)
    raise KeyError(f"unknown demo {demo!r}; expected 1d-sin, 1d-x43 or 2d-static-d")


def _demo_2d_static_d(max_iter: int, n: int = 32, T: float = 50.0) -> dict:
    prob = static_example("d")
    grid = prob.grid(n)
    bc = prob.boundary(grid)
    exact = prob.exact(grid)
    f = prob.rhs(grid)
    mask = bc.layer_mask(grid)
    out = {"demo": "2d-static-d", "N": n, "runs": []}

    std = SchemeConfig.default(Variant.STANDARD, grid.h)
    snaps, rep = evolve(exact, f, std, bc, [0.0, 15.0, 20.0, T], TimeStepPolicy("h2"))
    u = snaps[-1][1] if snaps else exact
    initial = rep.residual_history[0][2] if rep.residual_history else math.nan
    departure = _interior_error(u, exact, mask)
    out["runs"].append({
        "role": "divergent", "variant": std.variant.value, "dt_policy": rep.dt_policy, "dt": rep.dt,
        "status": rep.status.value, "iterations": rep.iterations, "initial_residual": initial,
        "final_residual": rep.final_residual, "max_departure": departure,
        "diverged": rep.status is Status.BLOW_UP or departure > 0.1 or rep.final_residual > 10 * initial,
        "snapshots": snaps,
    })
    for variant in (Variant.FILTERED_REGULARIZED, Variant.ELLIPTIC_REGULARIZED):
        config = SchemeConfig.default(variant, grid.h)
        u, rep = solve_steady(exact, f, config, bc, TimeStepPolicy("lipschitz"), max_iter=max_iter)
        out["runs"].append({
            "role": "convergent", "variant": variant.value, "dt_policy": rep.dt_policy, "dt": rep.dt,
            "status": rep.status.value, "iterations": rep.iterations,
            "initial_residual": rep.residual_history[0][2], "final_residual": rep.final_residual,
            "max_departure": _interior_error(u, exact, mask),
            "diverged": rep.status is not Status.CONVERGED,
            "snapshots": [],
        })
    return out
