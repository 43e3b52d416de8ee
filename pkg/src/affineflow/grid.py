"""Uniform grids, grid functions, boundary handling and elementary differences.

Grid functions on a 2D grid are stored as C-ordered ``(ny, nx)`` arrays, so the
flat index of point ``(i, j)`` is ``j * nx + i``.  Pointwise difference
operators take ``(i, j)`` with ``i`` along x and ``j`` along y; in 1D ``j`` is
omitted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


class BlowUpError(FloatingPointError):
    """Raised when a computation produces NaN or Inf."""


@dataclass(frozen=True)
class Grid1D:
    nx: int
    h: float
    x0: float = 0.0

    def __post_init__(self):
        if self.nx < 3:
            raise ValueError(f"nx must be >= 3, got {self.nx}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")

    @classmethod
    def interval(cls, n: int, lo: float = -1.0, hi: float = 1.0) -> "Grid1D":
        """``n`` points spanning ``[lo, hi]`` including both endpoints."""
        return cls(n, (hi - lo) / (n - 1), lo)

    @property
    def shape(self) -> tuple[int]:
        return (self.nx,)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    h: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"need nx, ny >= 3, got {self.nx}, {self.ny}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")

    @classmethod
    def square(cls, n: int, lo: float = -1.0, hi: float = 1.0) -> "Grid2D":
        """``n x n`` points on ``[lo, hi]^2`` including the boundary."""
        h = (hi - lo) / (n - 1)
        return cls(n, n, h, lo, lo)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.ny)

    @property
    def extent(self) -> tuple[float, float, float, float]:
        return (
            self.x0,
            self.x0 + self.h * (self.nx - 1),
            self.y0,
            self.y0 + self.h * (self.ny - 1),
        )

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``X, Y`` of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y, indexing="xy")


Grid = Union[Grid1D, Grid2D]


class GridFn:
    """Real values sampled on a grid.

    ``values`` is copied into a float array of shape ``grid.shape``; a flat
    array of length ``nx * ny`` is reshaped row-major.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values, check_finite: bool = True):
        arr = np.array(values, dtype=float)
        if arr.size != math.prod(grid.shape):
            raise ValueError(
                f"expected {math.prod(grid.shape)} values for grid {grid.shape}, got {arr.size}"
            )
        arr = arr.reshape(grid.shape)
        if check_finite and not np.all(np.isfinite(arr)):
            raise BlowUpError("grid function has non-finite values")
        self.grid = grid
        self.values = arr

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> "GridFn":
        if isinstance(grid, Grid1D):
            return cls(grid, fn(grid.x))
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(fn(X, Y), grid.shape))

    def copy(self) -> "GridFn":
        return GridFn(self.grid, self.values.copy(), check_finite=False)

    def __repr__(self):
        return f"GridFn({self.grid!r}, min={self.values.min():.4g}, max={self.values.max():.4g})"


@dataclass(frozen=True)
class BoundaryCondition:
    """Boundary treatment shared by every scheme.

    ``dirichlet``: a layer of ``layer_width`` points along each edge holds
    prescribed values and is never updated.  ``values_at`` optionally gives
    time-dependent layer data as a callable ``t -> array``.

    ``neumann``: indices outside the grid are mirrored across the boundary
    point (index ``-k`` reads ``k``), the even extension realizing a zero
    normal derivative.
    """

    kind: str
    layer_width: int = 0
    boundary_values: Optional[GridFn] = None
    values_at: Optional[Callable[[float], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == DIRICHLET:
            if self.layer_width < 1:
                raise ValueError("Dirichlet layer width must be >= 1")
            if self.boundary_values is None:
                raise ValueError("Dirichlet condition needs boundary values")
            if not np.all(np.isfinite(self.boundary_values.values)):
                raise ValueError("Dirichlet boundary values must be finite")
        elif self.kind != NEUMANN:
            raise ValueError(f"unknown boundary kind {self.kind!r}")

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls(NEUMANN)

    @classmethod
    def dirichlet(cls, values: GridFn, layer_width: int = 7, values_at=None) -> "BoundaryCondition":
        return cls(DIRICHLET, layer_width, values, values_at)

    def layer_mask(self, grid: Grid) -> np.ndarray:
        """Boolean mask of points held fixed (all False for Neumann)."""
        mask = np.zeros(grid.shape, dtype=bool)
        if self.kind == DIRICHLET:
            w = self.layer_width
            if isinstance(grid, Grid1D):
                mask[:w] = mask[-w:] = True
            else:
                mask[:w, :] = mask[-w:, :] = True
                mask[:, :w] = mask[:, -w:] = True
        return mask

    def layer_values(self, t: float = 0.0) -> np.ndarray:
        if self.values_at is not None:
            return np.asarray(self.values_at(t), dtype=float)
        return self.boundary_values.values


def _reflect(k: int, n: int) -> int:
    if k < 0:
        k = -k
    elif k >= n:
        k = 2 * (n - 1) - k
    if not 0 <= k < n:
        raise IndexError(f"reflected index {k} still outside grid of size {n}")
    return k


def extend(u: GridFn, bc: Optional[BoundaryCondition], i: int, j: Optional[int] = None) -> float:
    """Value of ``u`` at ``(i, j)``, which may lie outside the grid.

    Inside the grid the stored value is returned (for a Dirichlet layer these
    are the prescribed values).  Outside, Neumann reflects; Dirichlet and no
    boundary condition raise ``IndexError``.
    """
    shape = u.grid.shape
    idx = (i,) if j is None else (j, i)
    inside = all(0 <= k < n for k, n in zip(idx, shape))
    if inside:
        return float(u.values[idx])
    if bc is None or bc.kind != NEUMANN:
        raise IndexError(f"index {idx[::-1]} outside grid {shape[::-1]} without reflection")
    mirrored = tuple(_reflect(k, n) for k, n in zip(idx, shape))
    return float(u.values[mirrored])


def pad(values: np.ndarray, width: int, bc: Optional[BoundaryCondition]) -> np.ndarray:
    """Pad a field by ``width`` points on every side using the Neumann mirror."""
    if width == 0:
        return values
    if bc is None or bc.kind != NEUMANN:
        raise IndexError("padding requires a Neumann boundary condition")
    if width > min(values.shape) - 1:
        raise IndexError(f"stencil width {width} exceeds the grid")
    return np.pad(values, width, mode="reflect")


# --- pointwise differences ---------------------------------------------------


def _at(u, bc, i, j, di=0, dj=0):
    if j is None:
        return extend(u, bc, i + di)
    return extend(u, bc, i + di, j + dj)


def _step(axis: int) -> tuple[int, int]:
    if axis == 0:
        return 1, 0
    if axis == 1:
        return 0, 1
    raise ValueError(f"axis must be 0 (x) or 1 (y), got {axis}")


def d_centered_x(u: GridFn, i: int, j: Optional[int] = None, bc=None) -> float:
    h = u.grid.h
    return (_at(u, bc, i, j, 1) - _at(u, bc, i, j, -1)) / (2 * h)


def d_centered_y(u: GridFn, i: int, j: int, bc=None) -> float:
    h = u.grid.h
    return (_at(u, bc, i, j, 0, 1) - _at(u, bc, i, j, 0, -1)) / (2 * h)


def d2_xx(u: GridFn, i: int, j: Optional[int] = None, bc=None) -> float:
    h = u.grid.h
    return (_at(u, bc, i, j, 1) - 2 * _at(u, bc, i, j) + _at(u, bc, i, j, -1)) / h**2


def d2_yy(u: GridFn, i: int, j: int, bc=None) -> float:
    h = u.grid.h
    return (_at(u, bc, i, j, 0, 1) - 2 * _at(u, bc, i, j) + _at(u, bc, i, j, 0, -1)) / h**2


def d2_xy(u: GridFn, i: int, j: int, bc=None) -> float:
    h = u.grid.h
    return (
        _at(u, bc, i, j, 1, 1)
        + _at(u, bc, i, j, -1, -1)
        - _at(u, bc, i, j, 1, -1)
        - _at(u, bc, i, j, -1, 1)
    ) / (4 * h**2)


def d_upwind(u: GridFn, i: int, j: Optional[int] = None, axis: int = 0, direction: str = "backward", bc=None) -> float:
    """One-sided difference: ``backward`` gives ``D-``, ``forward`` gives ``-D+``.

    Both are written as ``(u(x) - u(neighbour)) / h`` and are elliptic.
    """
    di, dj = _step(axis)
    if direction == "backward":
        di, dj = -di, -dj
    elif direction != "forward":
        raise ValueError(f"direction must be 'backward' or 'forward', got {direction!r}")
    return (_at(u, bc, i, j) - _at(u, bc, i, j, di, dj)) / u.grid.h


def _one_sided(u, i, j, axis, bc):
    return d_upwind(u, i, j, axis, "forward", bc), d_upwind(u, i, j, axis, "backward", bc)


def abs_ux_plus(u: GridFn, i: int, j: Optional[int] = None, axis: int = 0, bc=None) -> float:
    """``max(-D+u, D-u, 0)``, nonnegative."""
    return max(*_one_sided(u, i, j, axis, bc), 0.0)


def abs_ux_minus(u: GridFn, i: int, j: Optional[int] = None, axis: int = 0, bc=None) -> float:
    """``min(-D+u, D-u, 0)``, the nonpositive companion of :func:`abs_ux_plus`."""
    return min(*_one_sided(u, i, j, axis, bc), 0.0)


def grad_norm_plus(u: GridFn, i: int, j: int, bc=None) -> float:
    return math.hypot(abs_ux_plus(u, i, j, 0, bc), abs_ux_plus(u, i, j, 1, bc))


def grad_norm_minus(u: GridFn, i: int, j: int, bc=None) -> float:
    """Nonpositive upwind approximation of ``-|grad u|``."""
    return -math.hypot(abs_ux_minus(u, i, j, 0, bc), abs_ux_minus(u, i, j, 1, bc))


# --- serialization -----------------------------------------------------------


def write_csv(u: GridFn, path) -> None:
    """Header ``# nx,ny,h,x0,y0`` then one comma-separated row per ``j``."""
    g = u.grid
    vals = u.values.reshape(1, -1) if isinstance(g, Grid1D) else u.values
    ny = getattr(g, "ny", 1)
    y0 = getattr(g, "y0", 0.0)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {g.nx},{ny},{g.h!r},{g.x0!r},{y0!r}\n")
        w = csv.writer(fh)
        for row in vals:
            w.writerow([repr(float(v)) for v in row])


def read_csv(path) -> GridFn:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing '# nx,ny,h,x0,y0' header")
        nx, ny, h, x0, y0 = header[1:].strip().split(",")
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    nx, ny = int(nx), int(ny)
    if ny == 1:
        return GridFn(Grid1D(nx, float(h), float(x0)), rows[0])
    return GridFn(Grid2D(nx, ny, float(h), float(x0), float(y0)), rows)


def write_triples(u: GridFn, path) -> None:
    """One ``x,y,value`` line per grid point."""
    g = u.grid
    if isinstance(g, Grid1D):
        X, Y = g.x, np.zeros(g.nx)
    else:
        X, Y = g.mesh()
    data = np.column_stack([np.ravel(X), np.ravel(Y), u.values.ravel()])
    np.savetxt(Path(path), data, delimiter=",", header="x,y,value", comments="", fmt="%.17g")
