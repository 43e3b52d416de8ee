"""Wide stencils and the median discretization of the 1-Laplacian."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .grid import BoundaryCondition, GridFn, extend


def round_half_away(x: float, tol: float = 1e-9) -> int:
    """Nearest integer, ties away from zero.

    Values within ``tol`` of a half-integer count as ties, so that
    ``3 sin(pi/6) = 1.4999999999999998`` rounds to 2 like the exact 1.5.
    """
    return int(math.copysign(math.floor(abs(x) + 0.5 + tol), x))


@dataclass(frozen=True)
class StencilSet:
    """``n_S`` lattice offsets at radius ``n_theta`` cells, one per direction.

    ``offsets[k]`` approximates ``n_theta * (cos(k dtheta), sin(k dtheta))``;
    two directions rounding to the same lattice point are both kept.
    """

    n_theta: int
    n_S: int
    offsets: np.ndarray  # (n_S, 2) int array of (dx, dy) in grid units

    @property
    def dtheta(self) -> float:
        return 2 * math.pi / self.n_S

    @property
    def width(self) -> int:
        return int(np.abs(self.offsets).max())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "angle", "dx", "dy"])
            for k, (dx, dy) in enumerate(self.offsets):
                w.writerow([k, repr(k * self.dtheta), int(dx), int(dy)])


def build_stencil(n_theta: int, n_S: int | None = None) -> StencilSet:
    """Round the first-quadrant directions to the lattice, rotate the rest.

    ``n_S`` defaults to ``8 * n_theta``.
    """
    if n_S is None:
        n_S = 8 * n_theta
    if n_theta < 1:
        raise ValueError(f"n_theta must be >= 1, got {n_theta}")
    if n_S < 4 or n_S % 4:
        raise ValueError(f"n_S must be a positive multiple of 4, got {n_S}")
    dtheta = 2 * math.pi / n_S
    quad = [
        (round_half_away(n_theta * math.cos(k * dtheta)), round_half_away(n_theta * math.sin(k * dtheta)))
        for k in range(n_S // 4)
    ]
    offsets = []
    for rot in range(4):
        for dx, dy in quad:
            for _ in range(rot):
                dx, dy = -dy, dx
            offsets.append((dx, dy))
    offsets = np.array(offsets, dtype=np.int64)

    angles = dtheta * np.arange(n_S)
    ideal = n_theta * np.column_stack([np.cos(angles), np.sin(angles)])
    if np.any(np.abs(offsets - ideal) > 1.0 + 1e-12):
        raise ValueError(f"stencil ({n_theta}, {n_S}) violates the one-cell rounding bound")
    if np.any(np.all(offsets == 0, axis=1)):
        raise ValueError(f"stencil ({n_theta}, {n_S}) contains the centre point")
    return StencilSet(n_theta, n_S, offsets)


NARROW = (3, 24)
WIDE = (7, 56)


def median(values) -> float:
    """Middle order statistic; mean of the two central ones for even length."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    n = v.size
    if n == 0:
        raise ValueError("median of an empty list")
    if n % 2:
        return float(v[n // 2])
    return float(0.5 * (v[n // 2 - 1] + v[n // 2]))


def delta1_median(u: GridFn, i: int, j: int, stencil: StencilSet, bc: BoundaryCondition | None = None) -> float:
    """Median approximation of the 1-Laplacian at grid point ``(i, j)``."""
    samples = [extend(u, bc, i + int(dx), j + int(dy)) for dx, dy in stencil.offsets]
    r = u.grid.h * stencil.n_theta
    return 2.0 * (median(samples) - float(u.values[j, i])) / r**2
