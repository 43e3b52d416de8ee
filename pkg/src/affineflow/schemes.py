"""Finite difference operators for ``F[u] = |grad u| k[u]^(1/3)`` in 2D.

Two routes are provided.  The pointwise functions (``f2d_*``) are written
directly in terms of :mod:`affineflow.grid` differences and
:mod:`affineflow.nonlinearity`; :func:`apply_scheme` evaluates a whole field
with the compiled kernels.  Tests check one against the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from . import _kernels
from .grid import (
    DIRICHLET,
    BoundaryCondition,
    Grid2D,
    GridFn,
    d2_xx,
    d2_xy,
    d2_yy,
    d_centered_x,
    d_centered_y,
    grad_norm_minus,
    grad_norm_plus,
    pad,
)
from .nonlinearity import (
    A,
    A_delta_minus,
    A_delta_plus,
    A_minus,
    A_plus,
    RegularizationParams,
)
from .stencil import NARROW, WIDE, StencilSet, build_stencil, delta1_median


class Variant(str, Enum):
    STANDARD = "standard"
    ELLIPTIC = "elliptic"
    ELLIPTIC_REGULARIZED = "elliptic-regularized"
    FILTERED = "filtered"
    FILTERED_REGULARIZED = "filtered-regularized"

    @property
    def regularized(self) -> bool:
        return self in (Variant.ELLIPTIC_REGULARIZED, Variant.FILTERED_REGULARIZED)

    @property
    def filtered(self) -> bool:
        return self in (Variant.FILTERED, Variant.FILTERED_REGULARIZED)

    @property
    def kernel_code(self) -> int:
        if self is Variant.STANDARD:
            return _kernels.STANDARD
        if self.filtered:
            return _kernels.FILTERED
        return _kernels.ELLIPTIC


@dataclass(frozen=True)
class SchemeConfig:
    variant: Variant
    stencil: StencilSet
    reg: RegularizationParams
    epsilon: float
    tol: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant.filtered and not self.epsilon > 0:
            raise ValueError("filtered variants need epsilon > 0")

    @classmethod
    def default(
        cls,
        variant,
        h: float,
        n_theta: Optional[int] = None,
        n_S: Optional[int] = None,
        epsilon: Optional[float] = None,
        reg: Optional[RegularizationParams] = None,
        tol: float = 1e-5,
    ) -> "SchemeConfig":
        """Defaults: narrow stencil for elliptic variants, wide for the others,
        ``K = 20 h^(-1/9)``, ``L = 20 h^(-4/9)``, ``epsilon = sqrt(h) + dtheta/10``."""
        variant = Variant(variant)
        if n_theta is None:
            n_theta, n_S_default = NARROW if variant in (Variant.ELLIPTIC, Variant.ELLIPTIC_REGULARIZED) else WIDE
            n_S = n_S or n_S_default
        stencil = build_stencil(n_theta, n_S)
        if epsilon is None:
            epsilon = math.sqrt(h) + stencil.dtheta / 10
        if reg is None:
            reg = RegularizationParams.default_2d(h)
        return cls(variant, stencil, reg, epsilon, tol)

    def with_variant(self, variant) -> "SchemeConfig":
        return replace(self, variant=Variant(variant))

    @property
    def width(self) -> int:
        """Largest index offset the operator reads."""
        if self.variant is Variant.STANDARD:
            return 1
        return max(1, self.stencil.width)


# --- pointwise route ---------------------------------------------------------


def f2d_standard(u: GridFn, i: int, j: int, bc=None) -> float:
    ux = d_centered_x(u, i, j, bc)
    uy = d_centered_y(u, i, j, bc)
    arg = d2_xx(u, i, j, bc) * uy**2 - 2 * ux * uy * d2_xy(u, i, j, bc) + d2_yy(u, i, j, bc) * ux**2
    return float(np.cbrt(arg))


def f2d_elliptic(u: GridFn, i: int, j: int, stencil: StencilSet, bc=None) -> float:
    q = -delta1_median(u, i, j, stencil, bc)
    neg = A_plus(grad_norm_plus(u, i, j, bc), q) + A_minus(grad_norm_minus(u, i, j, bc), q)
    return -neg


def f2d_elliptic_regularized(u: GridFn, i: int, j: int, stencil: StencilSet, reg: RegularizationParams, bc=None) -> float:
    q = -delta1_median(u, i, j, stencil, bc)
    neg = A_delta_plus(grad_norm_plus(u, i, j, bc), q, reg) + A_delta_minus(grad_norm_minus(u, i, j, bc), q, reg)
    return -neg


def filter_blend(a: float, b: float, epsilon: float) -> float:
    """Equal to ``a`` when ``|a - b| < epsilon``, to ``b`` far from the diagonal,
    linear in the Euclidean distance ``d`` to the strip in between (width ``10 epsilon``)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    gap = abs(a - b)
    if gap < epsilon:
        return a
    rho = 10 * epsilon
    d = (gap - epsilon) / math.sqrt(2)
    if d <= rho:
        return ((rho - d) * a + d * b) / rho
    return b


def f2d_filtered(u: GridFn, i: int, j: int, config: SchemeConfig, bc=None) -> float:
    if not config.variant.filtered:
        raise ValueError(f"f2d_filtered needs a filtered variant, got {config.variant.value}")
    a = f2d_standard(u, i, j, bc)
    if config.variant.regularized:
        b = f2d_elliptic_regularized(u, i, j, config.stencil, config.reg, bc)
    else:
        b = f2d_elliptic(u, i, j, config.stencil, bc)
    return filter_blend(a, b, config.epsilon)


def f2d(u: GridFn, i: int, j: int, config: SchemeConfig, bc=None) -> float:
    """Pointwise operator for any configured variant."""
    v = config.variant
    if v is Variant.STANDARD:
        return f2d_standard(u, i, j, bc)
    if v is Variant.ELLIPTIC:
        return f2d_elliptic(u, i, j, config.stencil, bc)
    if v is Variant.ELLIPTIC_REGULARIZED:
        return f2d_elliptic_regularized(u, i, j, config.stencil, config.reg, bc)
    return f2d_filtered(u, i, j, config, bc)


# --- whole-field route -------------------------------------------------------


@dataclass
class FieldLayout:
    """Where a scheme is evaluated inside the (possibly padded) work array."""

    pad: int
    j0: int
    j1: int
    i0: int
    i1: int

    @property
    def inner(self) -> tuple[slice, slice]:
        return slice(self.j0, self.j1), slice(self.i0, self.i1)

    @property
    def grid_view(self) -> tuple[slice, slice]:
        p = self.pad
        return slice(p, -p if p else None), slice(p, -p if p else None)


def layout_for(grid: Grid2D, config: SchemeConfig, bc: BoundaryCondition) -> FieldLayout:
    w = config.width
    if bc.kind == DIRICHLET:
        lw = bc.layer_width
        if lw < w:
            raise IndexError(f"Dirichlet layer of {lw} points is narrower than the stencil width {w}")
        return FieldLayout(0, lw, grid.ny - lw, lw, grid.nx - lw)
    if w > min(grid.nx, grid.ny) - 1:
        raise IndexError(f"stencil width {w} exceeds the grid")
    return FieldLayout(w, w, w + grid.ny, w, w + grid.nx)


def _reg_args(config: SchemeConfig):
    if config.variant.regularized:
        return True, float(config.reg.K), float(config.reg.L)
    return False, 0.0, 0.0


def apply_scheme(u: GridFn, config: SchemeConfig, bc: BoundaryCondition) -> np.ndarray:
    """``F[u]`` at every grid point where the scheme is evaluated.

    Points in a Dirichlet layer are returned as NaN.
    """
    layout = layout_for(u.grid, config, bc)
    U = pad(u.values, layout.pad, bc) if layout.pad else np.ascontiguousarray(u.values)
    out = np.full(U.shape, np.nan)
    regularized, K, L = _reg_args(config)
    _kernels.operator_field(
        U, layout.j0, layout.j1, layout.i0, layout.i1, u.grid.h,
        config.stencil.offsets, _kernels.new_hint(U.shape), config.stencil.n_theta, config.variant.kernel_code,
        regularized, K, L, float(config.epsilon), out,
    )
    return out[layout.grid_view]


def apply_delta1(u: GridFn, stencil: StencilSet, bc: BoundaryCondition) -> np.ndarray:
    """Median 1-Laplacian over the whole grid (Neumann) or the interior (Dirichlet)."""
    config = SchemeConfig(Variant.ELLIPTIC, stencil, RegularizationParams(1.0, 1.0), 1.0)
    layout = layout_for(u.grid, config, bc)
    U = pad(u.values, layout.pad, bc) if layout.pad else np.ascontiguousarray(u.values)
    out = np.full(U.shape, np.nan)
    _kernels.delta1_field(U, layout.j0, layout.j1, layout.i0, layout.i1, u.grid.h, stencil.offsets, _kernels.new_hint(U.shape), stencil.n_theta, out)
    return out[layout.grid_view]
