"""Explicit Euler evolution and steady-state solves for the 2D schemes."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from numba import njit
from scipy.interpolate import RegularGridInterpolator

from . import _kernels
from .grid import DIRICHLET, BoundaryCondition, Grid2D, GridFn
from .nonlinearity import RegularizationParams
from .schemes import SchemeConfig, Variant, layout_for
from .stencil import WIDE

log = logging.getLogger(__name__)


class Status(str, Enum):
    CONVERGED = "converged"
    FINISHED = "finished"
    MAX_ITERS = "max-iters"
    BLOW_UP = "blow-up"


@dataclass
class SolveReport:
    iterations: int = 0
    final_residual: float = math.inf
    residual_history: list = field(default_factory=list)
    wall_time: float = 0.0
    status: Status = Status.MAX_ITERS
    dt: float = 0.0
    dt_policy: str = ""
    time: float = 0.0
    error_linf: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = self.status.value
        return d


def lipschitz_constant_2d(h: float, n_theta: int, reg: RegularizationParams) -> float:
    """``K/h + 2L/(h n_theta)^2``."""
    return reg.K / h + 2 * reg.L / (h * n_theta) ** 2


@dataclass(frozen=True)
class TimeStepPolicy:
    """``lipschitz``: ``1/C^h`` of the regularized elliptic scheme (wide stencil
    and default ``K``, ``L`` when the configured variant has none of its own);
    ``h2``: ``h^2/2``; ``h2/8``: ``h^2/8``; ``fixed``: ``dt`` as given."""

    kind: str = "lipschitz"
    dt: Optional[float] = None

    KINDS = ("lipschitz", "h2", "h2/8", "fixed")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown time step policy {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "fixed" and not (self.dt and self.dt > 0):
            raise ValueError("fixed policy needs dt > 0")

    @classmethod
    def parse(cls, text: str) -> "TimeStepPolicy":
        if text.startswith("fixed:"):
            return cls("fixed", float(text.split(":", 1)[1]))
        return cls(text)

    def resolve(self, h: float, config: SchemeConfig) -> float:
        if self.kind == "fixed":
            return self.dt
        if self.kind == "h2":
            return h * h / 2
        if self.kind == "h2/8":
            return h * h / 8
        n_theta = config.stencil.n_theta if config.variant is not Variant.STANDARD else WIDE[0]
        return 1.0 / lipschitz_constant_2d(h, n_theta, config.reg)

    def describe(self) -> str:
        return f"fixed:{self.dt}" if self.kind == "fixed" else self.kind


@njit(cache=True)
def _reflect_fill(U, p):
    ny = U.shape[0] - 2 * p
    nx = U.shape[1] - 2 * p
    for j in range(p, p + ny):
        for k in range(1, p + 1):
            U[j, p - k] = U[j, p + k]
            U[j, p + nx - 1 + k] = U[j, p + nx - 1 - k]
    for k in range(1, p + 1):
        for i in range(U.shape[1]):
            U[p - k, i] = U[p + k, i]
            U[p + ny - 1 + k, i] = U[p + ny - 1 - k, i]


class EulerStepper:
    """Work buffers for repeated Euler sweeps ``u <- u + dt (F[u] - f)``."""

    def __init__(self, u0: GridFn, f: Optional[np.ndarray], config: SchemeConfig, bc: BoundaryCondition, dt: float):
        self.grid = u0.grid
        self.config = config
        self.bc = bc
        self.dt = float(dt)
        self.layout = layout_for(u0.grid, config, bc)
        p = self.layout.pad
        shape = (self.grid.ny + 2 * p, self.grid.nx + 2 * p)
        self.U = np.zeros(shape)
        self.U[self.layout.grid_view] = u0.values
        if p:
            _reflect_fill(self.U, p)
        self.V = self.U.copy()
        self.F = np.zeros(shape)
        self.hint = _kernels.new_hint(shape)
        self.f = np.zeros(shape)
        if f is not None:
            self.f[self.layout.grid_view] = f
        self.regularized, self.K, self.L = (
            (True, float(config.reg.K), float(config.reg.L)) if config.variant.regularized else (False, 0.0, 0.0)
        )
        self.t = 0.0

    def _set_layer(self, A, t):
        if self.bc.kind != DIRICHLET or self.bc.values_at is None:
            return
        vals = self.bc.layer_values(t)
        w = self.bc.layer_width
        A[:w, :] = vals[:w, :]
        A[-w:, :] = vals[-w:, :]
        A[:, :w] = vals[:, :w]
        A[:, -w:] = vals[:, -w:]

    def step(self) -> float:
        """Advance one step; returns the sup-norm residual of the state before it."""
        lay = self.layout
        res = _kernels.euler_sweep(
            self.U, lay.j0, lay.j1, lay.i0, lay.i1, self.grid.h,
            self.config.stencil.offsets, self.hint, self.config.stencil.n_theta,
            self.config.variant.kernel_code, self.regularized, self.K, self.L,
            float(self.config.epsilon), self.f, self.dt, self.F, self.V,
        )
        if not math.isfinite(res):
            return res
        self.t += self.dt
        if lay.pad:
            _reflect_fill(self.V, lay.pad)
        self._set_layer(self.V, self.t)
        self.U, self.V = self.V, self.U
        return res

    def residual(self) -> float:
        """Sup norm of ``F[u] - f`` at the current state without stepping."""
        lay = self.layout
        _kernels.operator_field(
            self.U, lay.j0, lay.j1, lay.i0, lay.i1, self.grid.h,
            self.config.stencil.offsets, self.hint, self.config.stencil.n_theta,
            self.config.variant.kernel_code, self.regularized, self.K, self.L,
            float(self.config.epsilon), self.F,
        )
        r = self.F[lay.inner] - self.f[lay.inner]
        return float(np.max(np.abs(r)))

    @property
    def state(self) -> GridFn:
        return GridFn(self.grid, self.U[self.layout.grid_view].copy(), check_finite=False)


def _history_stride(max_steps: int, points: int = 400) -> int:
    return max(1, max_steps // points)


def evolve(
    u0: GridFn,
    f: Optional[GridFn],
    config: SchemeConfig,
    bc: BoundaryCondition,
    schedule: Sequence[float],
    policy: TimeStepPolicy = TimeStepPolicy(),
    dt: Optional[float] = None,
) -> tuple[list[tuple[float, GridFn]], SolveReport]:
    """Explicit Euler from ``u0`` with snapshots at the last step not past each time.

    Returns ``[(t_actual, u), ...]`` in schedule order and a report.  On NaN or
    Inf the run stops with status ``blow-up`` and the snapshots taken so far.
    """
    times = sorted(float(t) for t in schedule)
    if not times or times[0] < 0:
        raise ValueError("schedule must contain nonnegative times")
    described = policy.describe() if dt is None else f"fixed:{dt!r}"
    dt = float(dt) if dt is not None else policy.resolve(u0.grid.h, config)
    stepper = EulerStepper(u0, None if f is None else f.values, config, bc, dt)
    # step count for each requested time, tolerant to rounding of t/dt
    targets = [int(math.floor(t / dt + 1e-9)) for t in times]
    report = SolveReport(dt=dt, dt_policy=described)
    stride = _history_stride(targets[-1])
    snapshots = []
    start = time.perf_counter()
    n = 0
    res = math.nan
    for target in targets:
        while n < target:
            res = stepper.step()
            if not math.isfinite(res):
                report.status = Status.BLOW_UP
                break
            if n % stride == 0:
                report.residual_history.append((n, n * dt, res))
            n += 1
        if report.status is Status.BLOW_UP:
            log.warning("blow-up after %d steps (t=%.4g)", n, n * dt)
            break
        snapshots.append((n * dt, stepper.state))
    else:
        report.status = Status.FINISHED
    report.iterations = n
    report.time = n * dt
    report.final_residual = res if report.status is Status.BLOW_UP else stepper.residual()
    report.wall_time = time.perf_counter() - start
    return snapshots, report


def solve_steady(
    u0: GridFn,
    f: GridFn,
    config: SchemeConfig,
    bc: BoundaryCondition,
    policy: TimeStepPolicy = TimeStepPolicy(),
    max_iter: int = 1_000_000,
    max_seconds: Optional[float] = None,
    dt: Optional[float] = None,
) -> tuple[GridFn, SolveReport]:
    """Iterate to a steady state of ``u_t = F[u] - f`` (sup-norm residual below ``config.tol``)."""
    described = policy.describe() if dt is None else f"fixed:{dt!r}"
    dt = float(dt) if dt is not None else policy.resolve(u0.grid.h, config)
    stepper = EulerStepper(u0, f.values, config, bc, dt)
    report = SolveReport(dt=dt, dt_policy=described)
    stride = _history_stride(min(max_iter, 200_000))
    start = time.perf_counter()
    n = 0
    res = math.inf
    while True:
        if n >= max_iter or (max_seconds is not None and n % 256 == 0 and time.perf_counter() - start > max_seconds):
            report.status = Status.MAX_ITERS
            res = stepper.residual()
            break
        res = stepper.step()
        if not math.isfinite(res):
            report.status = Status.BLOW_UP
            break
        if n % stride == 0:
            report.residual_history.append((n, n * dt, res))
        if res < config.tol:
            # the residual belongs to the state before the step: undo it
            stepper.U, stepper.V = stepper.V, stepper.U
            stepper.t -= dt
            report.status = Status.CONVERGED
            break
        n += 1
    report.iterations = n
    report.time = n * dt
    report.final_residual = res
    report.residual_history.append((n, n * dt, res))
    report.wall_time = time.perf_counter() - start
    return stepper.state, report


def prolong(coarse: GridFn, fine_grid: Grid2D) -> GridFn:
    """Bilinear interpolation of ``coarse`` onto the points of ``fine_grid``."""
    cg = coarse.grid
    ce, fe = np.array(cg.extent), np.array(fine_grid.extent)
    if not np.allclose(ce, fe, atol=1e-9 * max(1.0, np.abs(ce).max())):
        raise ValueError(f"domain mismatch: coarse {tuple(ce)} vs fine {tuple(fe)}")
    interp = RegularGridInterpolator((cg.y, cg.x), coarse.values, method="linear", bounds_error=False, fill_value=None)
    X, Y = fine_grid.mesh()
    pts = np.column_stack([np.clip(Y.ravel(), ce[2], ce[3]), np.clip(X.ravel(), ce[0], ce[1])])
    return GridFn(fine_grid, interp(pts).reshape(fine_grid.shape))
