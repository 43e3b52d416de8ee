"""Closed-form solutions, manufactured right-hand sides and initial data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grid import BoundaryCondition, Grid1D, Grid2D, GridFn

PI = math.pi


def ellipse_solution(a: float, b: float, x, y, t=0.0):
    """``t + 3/4 ((b/a) x^2 + (a/b) y^2)^(2/3)``, an exact solution for all time."""
    if not (a > 0 and b > 0):
        raise ValueError("ellipse axes must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = (b / a) * x * x + (a / b) * y * y
    out = t + 0.75 * np.cbrt(s * s)
    return float(out) if np.ndim(out) == 0 else out


def ellipse_neumann(a: float, b: float, x, y, t=0.0):
    """Shifted ellipse solution capped at zero: ``min(u - 1, 0)``."""
    return np.minimum(ellipse_solution(a, b, x, y, t) - 1.0, 0.0)


# --- static examples ---------------------------------------------------------


def _r2(x, y):
    return x * x + y * y


STATIC = {
    "a": (
        lambda x, y: _r2(x, y),
        lambda x, y: 2 * np.cbrt(_r2(x, y)),
    ),
    "b": (
        lambda x, y: np.exp(_r2(x, y)),
        lambda x, y: 2 * np.cbrt(np.exp(3 * _r2(x, y)) * _r2(x, y)),
    ),
    # r^(4/3): the radial profile whose operator value is the constant 4/3
    "c": (
        lambda x, y: np.cbrt(_r2(x, y) ** 2),
        lambda x, y: np.full(np.broadcast(x, y).shape, 4.0 / 3.0),
    ),
    "d": (
        lambda x, y: np.sin(2 * PI * x) * np.sin(2 * PI * y) / 4,
        lambda x, y: PI ** (4 / 3)
        / 2
        * np.cbrt(-(2 + np.cos(4 * PI * x) + np.cos(4 * PI * y)) * np.sin(2 * PI * x) * np.sin(2 * PI * y)),
    ),
}


@dataclass
class ProblemSpec:
    """A registered experiment: domain, data and boundary treatment.

    ``u_exact`` takes ``(x, y)`` or ``(x, y, t)`` when ``time_dependent``;
    ``u0`` defaults to ``u_exact`` at ``t = 0``.
    """

    name: str
    dimension: int
    domain: tuple[float, float]
    bc_kind: str
    u_exact: Optional[Callable] = None
    f_rhs: Optional[Callable] = None
    u0: Optional[Callable] = None
    layer_width: int = 7
    time_dependent: bool = False
    cap: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.u_exact is None and self.u0 is None:
            raise ValueError(f"problem {self.name!r} needs u_exact or u0")

    def grid(self, n: int):
        lo, hi = self.domain
        return Grid1D.interval(n, lo, hi) if self.dimension == 1 else Grid2D.square(n, lo, hi)

    def _eval(self, fn, grid, *extra):
        if self.dimension == 1:
            return GridFn(grid, fn(grid.x, *extra))
        X, Y = grid.mesh()
        return GridFn(grid, np.broadcast_to(fn(X, Y, *extra), grid.shape))

    def exact(self, grid, t: float = 0.0) -> GridFn:
        if self.u_exact is None:
            raise ValueError(f"problem {self.name!r} has no exact solution")
        return self._eval(self.u_exact, grid, t) if self.time_dependent else self._eval(self.u_exact, grid)

    def initial(self, grid) -> GridFn:
        if self.u0 is not None:
            return self._eval(self.u0, grid)
        return self.exact(grid, 0.0)

    def rhs(self, grid) -> Optional[GridFn]:
        return None if self.f_rhs is None else self._eval(self.f_rhs, grid)

    def boundary(self, grid, layer_width: Optional[int] = None) -> BoundaryCondition:
        if self.bc_kind == "neumann":
            return BoundaryCondition.neumann()
        w = self.layer_width if layer_width is None else layer_width
        values = self.exact(grid, 0.0)
        values_at = None
        if self.time_dependent and self.meta.get("shift_in_time"):
            # u(x, t) = u(x, 0) + t: avoid re-evaluating the closed form every step
            base = values.values
            values_at = lambda t: base + t  # noqa: E731
        elif self.time_dependent:
            values_at = lambda t: self.exact(grid, t).values  # noqa: E731
        return BoundaryCondition.dirichlet(values, w, values_at)


def static_example(tag: str) -> ProblemSpec:
    """Manufactured steady problems on ``[-1, 1]^2`` with a 7-point Dirichlet layer."""
    if tag not in STATIC:
        raise KeyError(f"unknown static example {tag!r}; expected one of {sorted(STATIC)}")
    u, f = STATIC[tag]
    return ProblemSpec(f"static-{tag}", 2, (-1.0, 1.0), "dirichlet", u_exact=u, f_rhs=f)


def _fan(x, y):
    c1p = (x + 0.5) ** 2 + 5 * (y + 0.25) ** 2 - 0.5
    c1m = (x - 0.5) ** 2 + 5 * (y - 0.25) ** 2 - 0.5
    c2p = 5 * (x + 0.25) ** 2 + (y - 0.25) ** 2 - 0.5
    c2m = 5 * (x - 0.25) ** 2 + (y + 0.25) ** 2 - 0.5
    return np.minimum.reduce([c1p, c1m, c2p, c2m, np.ones(np.broadcast(x, y).shape)])


EVOLUTION_IC = {
    "ellipse": ((-4.0, 4.0), lambda x, y: np.minimum((x / 2) ** 2 + y**2 - 1, 1.0)),
    "diamond": ((-2.0, 2.0), lambda x, y: np.minimum(np.abs(x) + np.abs(y) - 1, 1.0)),
    "flat_diamond": ((-2.0, 2.0), lambda x, y: np.minimum(np.abs(x) + 2 * np.abs(y) - 1, 1.0)),
    "fan": ((-2.0, 2.0), _fan),
}


def evolution_ic(tag: str) -> ProblemSpec:
    """Curve-evolution initial data (capped at 1) with Neumann conditions."""
    if tag not in EVOLUTION_IC:
        raise KeyError(f"unknown evolution example {tag!r}; expected one of {sorted(EVOLUTION_IC)}")
    domain, u0 = EVOLUTION_IC[tag]
    return ProblemSpec(f"evolution-{tag}", 2, domain, "neumann", u0=u0, cap=1.0)


def ellipse_problem(bc_kind: str, a: float = 2.0, b: float = 1.0, domain=(-3.0, 3.0)) -> ProblemSpec:
    """Time-dependent shrinking ellipse; Neumann uses the capped form."""
    if bc_kind == "neumann":
        return ProblemSpec(
            "ellipse-neumann", 2, domain, "neumann",
            u_exact=lambda x, y, t: ellipse_neumann(a, b, x, y, t), time_dependent=True, cap=0.0,
            meta={"a": a, "b": b},
        )
    if bc_kind == "dirichlet":
        return ProblemSpec(
            "ellipse-dirichlet", 2, domain, "dirichlet",
            u_exact=lambda x, y, t: ellipse_solution(a, b, x, y, t), time_dependent=True,
            meta={"a": a, "b": b, "shift_in_time": True},
        )
    raise ValueError(f"unknown boundary kind {bc_kind!r}")


def morphology_ic() -> ProblemSpec:
    return ProblemSpec(
        "morphology", 2, (-3.0, 3.0), "neumann",
        u0=lambda x, y: np.minimum((x / 2) ** 2 + y**2 - 1, 0.0), cap=0.0,
    )


def affine_ic(cap: float = 1.0) -> ProblemSpec:
    return ProblemSpec(
        "affine", 2, (-5.0, 5.0), "neumann",
        u0=lambda x, y: np.minimum((x / 2) ** 2 + y**2 - 1, cap), cap=cap,
    )


# --- 1D model problems -------------------------------------------------------


def x43_rhs(C: float = 1.0) -> float:
    """Operator value ``(u_x^2 u_xx)^(1/3)`` for ``u = C |x|^(4/3)``: ``4 C / 3^(4/3)``."""
    return 4.0 * C / 3.0 ** (4.0 / 3.0)


def model1d_cases(C: float = 1.0) -> list[ProblemSpec]:
    sin_u = lambda x: np.sin(2 * PI * x)  # noqa: E731
    sin_f = lambda x: np.cbrt((2 * PI * np.cos(2 * PI * x)) ** 2 * (-4 * PI**2 * np.sin(2 * PI * x)))  # noqa: E731
    x43_u = lambda x: C * np.cbrt(np.asarray(x, dtype=float) ** 4)  # noqa: E731
    x43_f = lambda x: np.full(np.shape(x), x43_rhs(C))  # noqa: E731
    return [
        ProblemSpec("model1d-sin", 1, (-1.0, 1.0), "dirichlet", u_exact=sin_u, f_rhs=sin_f, layer_width=1),
        ProblemSpec("model1d-x43", 1, (-1.0, 1.0), "dirichlet", u_exact=x43_u, f_rhs=x43_f, layer_width=1,
                    meta={"C": C}),
    ]


# --- affine composition ------------------------------------------------------


def affine_transform_field(u: GridFn, A, b=(0.0, 0.0), cap: Optional[float] = None) -> GridFn:
    """Sample ``x -> u(A x + b)`` on ``u``'s grid by bilinear interpolation.

    Points mapped outside the grid take ``cap`` (default: ``u.max()``).  When
    every mapped point lands on a grid node the samples are copied exactly.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape != (2, 2) or abs(np.linalg.det(A)) < 1e-14:
        raise ValueError("A must be a nonsingular 2x2 matrix")
    g = u.grid
    fill = float(u.values.max()) if cap is None else float(cap)
    X, Y = g.mesh()
    PX = A[0, 0] * X + A[0, 1] * Y + b[0]
    PY = A[1, 0] * X + A[1, 1] * Y + b[1]
    fi = (PX - g.x0) / g.h
    fj = (PY - g.y0) / g.h
    ri, rj = np.rint(fi), np.rint(fj)
    if np.all(np.abs(fi - ri) < 1e-9) and np.all(np.abs(fj - rj) < 1e-9):
        ii, jj = ri.astype(int), rj.astype(int)
        inside = (ii >= 0) & (ii < g.nx) & (jj >= 0) & (jj < g.ny)
        out = np.full(g.shape, fill)
        out[inside] = u.values[jj[inside], ii[inside]]
        return GridFn(g, out)
    interp = RegularGridInterpolator((g.y, g.x), u.values, method="linear", bounds_error=False, fill_value=fill)
    vals = interp(np.column_stack([PY.ravel(), PX.ravel()])).reshape(g.shape)
    return GridFn(g, vals)


REGISTRY: dict[str, Callable[[], ProblemSpec]] = {
    **{f"static-{k}": (lambda k=k: static_example(k)) for k in STATIC},
    **{f"evolution-{k}": (lambda k=k: evolution_ic(k)) for k in EVOLUTION_IC},
    "ellipse-neumann": lambda: ellipse_problem("neumann"),
    "ellipse-dirichlet": lambda: ellipse_problem("dirichlet"),
    "model1d-sin": lambda: model1d_cases()[0],
    "model1d-x43": lambda: model1d_cases()[1],
    "morphology": morphology_ic,
    "affine": affine_ic,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown example {name!r}; known: {sorted(REGISTRY)}") from None
