"""The one-dimensional model equation ``F[u] = (u_x^2 u_xx)^(1/3)``.

Standard (centered), elliptic (upwind) and regularized elliptic schemes,
explicit Euler iteration, and the divergence test used by the instability
demonstrations.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .grid import (
    DIRICHLET,
    BoundaryCondition,
    GridFn,
    abs_ux_minus,
    abs_ux_plus,
    d2_xx,
    d_centered_x,
)
from .nonlinearity import A, A_delta_minus, A_delta_plus, A_minus, A_plus, RegularizationParams
from .solve import SolveReport, Status

log = logging.getLogger(__name__)


class Variant1D(str, Enum):
    STANDARD = "standard"
    ELLIPTIC = "elliptic"
    ELLIPTIC_REGULARIZED = "elliptic-regularized"


def lipschitz_constant_1d(h: float, reg: RegularizationParams) -> float:
    """``K/h + 2L/h^2``."""
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    return reg.K / h + 2 * reg.L / (h * h)


@dataclass(frozen=True)
class Scheme1DConfig:
    """Scheme choice and time step rule.

    ``dt_policy`` is one of

    * ``lipschitz``: ``dt = 1/C^h`` with the configured (or default) ``K, L``;
    * ``scaling``: ``dt = (h^4 / scaling_c)^(1/3)``;
    * ``h2``: ``dt = h^2 / 2``;
    * ``fixed``: ``dt`` as given.
    """

    variant: Variant1D = Variant1D.ELLIPTIC
    reg: Optional[RegularizationParams] = None
    dt_policy: str = "lipschitz"
    dt: Optional[float] = None
    scaling_c: float = 2.0

    POLICIES = ("lipschitz", "scaling", "h2", "fixed")

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant1D(self.variant))
        if self.dt_policy not in self.POLICIES:
            raise ValueError(f"unknown dt policy {self.dt_policy!r}; expected one of {self.POLICIES}")
        if self.dt_policy == "fixed" and not (self.dt and self.dt > 0):
            raise ValueError("fixed dt policy needs dt > 0")
        if not self.scaling_c > 0:
            raise ValueError("scaling_c must be positive")

    def regularization(self, h: float) -> RegularizationParams:
        return self.reg if self.reg is not None else RegularizationParams.model_1d(h)

    def resolve_dt(self, h: float) -> float:
        if self.dt_policy == "fixed":
            return float(self.dt)
        if self.dt_policy == "h2":
            return h * h / 2
        if self.dt_policy == "scaling":
            return (h**4 / self.scaling_c) ** (1 / 3)
        return 1.0 / lipschitz_constant_1d(h, self.regularization(h))

    def describe(self) -> str:
        if self.dt_policy == "fixed":
            return f"fixed:{self.dt!r}"
        if self.dt_policy == "scaling":
            return f"scaling:(h^4/{self.scaling_c:g})^(1/3)"
        return self.dt_policy


# --- pointwise route ---------------------------------------------------------


def f1d_standard(u: GridFn, i: int, bc: Optional[BoundaryCondition] = None) -> float:
    return A(d_centered_x(u, i, None, bc), d2_xx(u, i, None, bc))


def f1d_elliptic(u: GridFn, i: int, bc: Optional[BoundaryCondition] = None) -> float:
    q = -d2_xx(u, i, None, bc)
    neg = A_plus(abs_ux_plus(u, i, None, 0, bc), q) + A_minus(abs_ux_minus(u, i, None, 0, bc), q)
    return -neg


def f1d_elliptic_regularized(
    u: GridFn, i: int, reg: RegularizationParams, bc: Optional[BoundaryCondition] = None
) -> float:
    q = -d2_xx(u, i, None, bc)
    neg = A_delta_plus(abs_ux_plus(u, i, None, 0, bc), q, reg) + A_delta_minus(abs_ux_minus(u, i, None, 0, bc), q, reg)
    return -neg


# --- whole-array route -------------------------------------------------------


def operator_1d(values: np.ndarray, h: float, variant, reg: Optional[RegularizationParams] = None) -> np.ndarray:
    """Scheme values at the interior points ``1..n-2`` of ``values``."""
    variant = Variant1D(variant)
    c = values[1:-1]
    w = values[:-2]
    e = values[2:]
    uxx = (e - 2 * c + w) / (h * h)
    if variant is Variant1D.STANDARD:
        return np.cbrt(((e - w) / (2 * h)) ** 2 * uxx)
    fwd = (c - e) / h  # -D+
    bwd = (c - w) / h  # D-
    p_plus = np.maximum(np.maximum(fwd, bwd), 0.0)
    p_minus = np.minimum(np.minimum(fwd, bwd), 0.0)
    q = -uxx
    qp = np.maximum(q, 0.0)
    qm = np.minimum(q, 0.0)
    ap = np.cbrt(p_plus * p_plus * qp)
    am = np.cbrt(p_minus * p_minus * qm)
    if variant is Variant1D.ELLIPTIC_REGULARIZED:
        if reg is None:
            raise ValueError("the regularized scheme needs RegularizationParams")
        ap = np.minimum(ap, np.minimum(reg.K * p_plus, reg.L * qp))
        am = np.maximum(am, np.maximum(reg.K * p_minus, reg.L * qm))
    return -(ap + am)


def _padded(values: np.ndarray, bc: BoundaryCondition) -> tuple[np.ndarray, slice]:
    """Work array on which ``operator_1d`` yields every updated point."""
    if bc.kind == DIRICHLET:
        w = bc.layer_width
        return values[w - 1 : values.size - w + 1], slice(w, values.size - w)
    return np.pad(values, 1, mode="reflect"), slice(0, values.size)


def apply_scheme_1d(u: GridFn, config: Scheme1DConfig, bc: BoundaryCondition) -> np.ndarray:
    """Scheme values on the grid; NaN on a Dirichlet layer."""
    h = u.grid.h
    work, sl = _padded(u.values, bc)
    out = np.full(u.grid.shape, np.nan)
    out[sl] = operator_1d(work, h, config.variant, config.regularization(h))
    return out


def euler_step_1d(values: np.ndarray, f: Optional[np.ndarray], h: float, dt: float,
                  config: Scheme1DConfig, bc: BoundaryCondition) -> tuple[np.ndarray, float]:
    """One step ``u + dt (F[u] - f)``; returns the new array and the sup-norm residual of ``u``."""
    work, sl = _padded(values, bc)
    r = operator_1d(work, h, config.variant, config.regularization(h))
    if f is not None:
        r = r - f[sl]
    out = values.copy()
    out[sl] += dt * r
    return out, float(np.max(np.abs(r))) if r.size else 0.0


def euler_solve_1d(
    u0: GridFn,
    f: Optional[GridFn],
    config: Scheme1DConfig,
    bc: BoundaryCondition,
    T: Optional[float] = None,
    tol: float = 1e-5,
    max_iter: int = 10_000_000,
    max_seconds: Optional[float] = None,
    snapshot_times: Sequence[float] = (),
    snapshots: Optional[list] = None,
) -> tuple[GridFn, SolveReport]:
    """Iterate ``u <- u + dt (F[u] - f)``.

    With ``T`` the run stops at the last step not past ``T``; otherwise it
    stops once the residual of the current state is below ``tol``.  States at
    ``snapshot_times`` are appended to ``snapshots`` as ``(t, GridFn)``.
    """
    h = u0.grid.h
    dt = config.resolve_dt(h)
    report = SolveReport(dt=dt, dt_policy=config.describe())
    fv = None if f is None else f.values
    u = u0.values.copy()
    n_final = None if T is None else int(math.floor(T / dt + 1e-9))
    snap_steps = sorted((int(math.floor(t / dt + 1e-9)), t) for t in snapshot_times)
    stride = max(1, min(max_iter, n_final or max_iter, 200_000) // 400)
    start = time.perf_counter()
    n = 0
    res = math.inf
    while True:
        while snap_steps and snap_steps[0][0] == n:
            snap_steps.pop(0)
            if snapshots is not None:
                snapshots.append((n * dt, GridFn(u0.grid, u, check_finite=False)))
        if n_final is not None and n >= n_final:
            report.status = Status.FINISHED
            _, res = euler_step_1d(u, fv, h, 0.0, config, bc)
            break
        if n >= max_iter or (max_seconds is not None and n % 1024 == 0 and time.perf_counter() - start > max_seconds):
            report.status = Status.MAX_ITERS
            _, res = euler_step_1d(u, fv, h, 0.0, config, bc)
            break
        new, res = euler_step_1d(u, fv, h, dt, config, bc)
        if n % stride == 0:
            report.residual_history.append((n, n * dt, res))
        if not math.isfinite(res) or not np.all(np.isfinite(new)):
            report.status = Status.BLOW_UP
            log.warning("1D blow-up after %d steps", n)
            break
        if n_final is None and res < tol:
            report.status = Status.CONVERGED
            break
        u = new
        n += 1
    report.iterations = n
    report.time = n * dt
    report.final_residual = res
    report.residual_history.append((n, n * dt, res))
    report.wall_time = time.perf_counter() - start
    return GridFn(u0.grid, u, check_finite=False), report


def diverged(report: SolveReport, u: GridFn, exact: Optional[GridFn] = None,
             departure: float = 0.1, growth: float = 10.0) -> bool:
    """Binary divergence test.

    True on blow-up, when the final residual exceeds ``growth`` times the
    initial one, or when ``u`` is further than ``departure`` from ``exact``
    in the sup norm.
    """
    if report.status is Status.BLOW_UP or not np.all(np.isfinite(u.values)):
        return True
    if report.residual_history:
        r0 = report.residual_history[0][2]
        if report.final_residual > growth * max(r0, np.finfo(float).tiny):
            return True
    if exact is not None and np.max(np.abs(u.values - exact.values)) > departure:
        return True
    return False


def max_principle_step(values: np.ndarray, h: float, dt: Optional[float] = None) -> np.ndarray:
    """One elliptic Euler step with ``f = 0`` and Neumann ends, default ``dt = (h^4/2)^(1/3)``."""
    if dt is None:
        dt = (h**4 / 2) ** (1 / 3)
    new, _ = euler_step_1d(np.asarray(values, dtype=float), None, h, dt,
                           Scheme1DConfig(Variant1D.ELLIPTIC), BoundaryCondition.neumann())
    return new


__all__ = [
    "Variant1D",
    "Scheme1DConfig",
    "lipschitz_constant_1d",
    "f1d_standard",
    "f1d_elliptic",
    "f1d_elliptic_regularized",
    "operator_1d",
    "apply_scheme_1d",
    "euler_step_1d",
    "euler_solve_1d",
    "diverged",
    "max_principle_step",
]
