"""Zero level sets of grid functions: marching squares, shape measures.

Cells are squares with corners ``(i, j)``, ``(i+1, j)``, ``(i+1, j+1)``,
``(i, j+1)``.  Crossing points are linearly interpolated along cell edges and
identified by the edge they lie on, so neighbouring cells share them exactly
and segments chain into polylines without any coordinate matching.  In the
two saddle configurations the average of the four corner values decides
which pair of corners is connected through the cell centre.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import directed_hausdorff

from .grid import Grid2D, GridFn

# edges: 0 bottom, 1 right, 2 top, 3 left
_SEGMENTS = {
    1: ((3, 0),),
    2: ((0, 1),),
    3: ((3, 1),),
    4: ((1, 2),),
    6: ((0, 2),),
    7: ((3, 2),),
    8: ((2, 3),),
    9: ((0, 2),),
    11: ((1, 2),),
    12: ((1, 3),),
    13: ((0, 1),),
    14: ((3, 0),),
}
# saddles, keyed by (case, centre above level)
_SADDLES = {
    (5, True): ((0, 1), (2, 3)),
    (5, False): ((3, 0), (1, 2)),
    (10, True): ((3, 0), (1, 2)),
    (10, False): ((0, 1), (2, 3)),
}


@dataclass
class Polyline:
    points: np.ndarray  # (m, 2) array of (x, y)
    closed: bool

    def __len__(self) -> int:
        return len(self.points)

    def closed_points(self) -> np.ndarray:
        """Vertices with the first repeated at the end for closed curves."""
        if self.closed and len(self.points):
            return np.vstack([self.points, self.points[:1]])
        return self.points


def _edge_key(e: int, i: int, j: int) -> tuple:
    if e == 0:
        return ("h", i, j)
    if e == 2:
        return ("h", i, j + 1)
    if e == 3:
        return ("v", i, j)
    return ("v", i + 1, j)


def _edge_point(key: tuple, V: np.ndarray, grid: Grid2D, level: float) -> tuple[float, float]:
    kind, i, j = key
    a = V[j, i]
    if kind == "h":
        b = V[j, i + 1]
        t = 0.5 if b == a else (level - a) / (b - a)
        return grid.x0 + (i + t) * grid.h, grid.y0 + j * grid.h
    b = V[j + 1, i]
    t = 0.5 if b == a else (level - a) / (b - a)
    return grid.x0 + i * grid.h, grid.y0 + (j + t) * grid.h


def marching_squares(u: GridFn, level: float = 0.0) -> list[Polyline]:
    """Polylines of the ``level`` set of ``u``, ordered by their first vertex key.

    A corner counts as above the level when its value is ``>= level``.
    Curves either close or end on the grid boundary.
    """
    grid = u.grid
    V = u.values
    above = V >= level
    case = (
        above[:-1, :-1].astype(np.int8)
        | (above[:-1, 1:].astype(np.int8) << 1)
        | (above[1:, 1:].astype(np.int8) << 2)
        | (above[1:, :-1].astype(np.int8) << 3)
    )
    neighbours: dict[tuple, list[tuple]] = {}
    for j, i in zip(*np.nonzero((case != 0) & (case != 15))):
        c = int(case[j, i])
        if c in (5, 10):
            centre = 0.25 * (V[j, i] + V[j, i + 1] + V[j + 1, i + 1] + V[j + 1, i])
            segs = _SADDLES[(c, bool(centre >= level))]
        else:
            segs = _SEGMENTS[c]
        for e1, e2 in segs:
            k1, k2 = _edge_key(e1, int(i), int(j)), _edge_key(e2, int(i), int(j))
            neighbours.setdefault(k1, []).append(k2)
            neighbours.setdefault(k2, []).append(k1)

    seen: set = set()
    chains = []
    # open chains start at an endpoint (degree 1); the rest are cycles
    starts = sorted(k for k, nb in neighbours.items() if len(nb) == 1) + sorted(neighbours)
    for start in starts:
        if start in seen:
            continue
        # every crossing point lies on one edge shared by at most two cells,
        # so it has at most two neighbours and the walk is unambiguous
        chain = [start]
        seen.add(start)
        cur = start
        while True:
            step = next((k for k in neighbours[cur] if k not in seen), None)
            if step is None:
                break
            chain.append(step)
            seen.add(step)
            cur = step
        closed = len(chain) > 2 and start in neighbours[cur]
        chains.append((chain, closed))

    out = []
    for chain, closed in chains:
        pts = np.array([_edge_point(k, V, grid, level) for k in chain], dtype=float)
        # drop consecutive duplicates produced when the level passes through a node
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(np.diff(pts, axis=0) != 0, axis=1)
        out.append(Polyline(pts[keep], closed))
    return out


def write_polylines(polylines: list[Polyline], path) -> None:
    """CSV with columns ``polyline,closed,x,y``; closed curves repeat their first vertex."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["polyline", "closed", "x", "y"])
        for k, pl in enumerate(polylines):
            for x, y in pl.closed_points():
                w.writerow([k, int(pl.closed), repr(float(x)), repr(float(y))])


def read_polylines(path) -> list[Polyline]:
    rows: dict[int, list] = {}
    flags: dict[int, bool] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            k = int(row["polyline"])
            rows.setdefault(k, []).append((float(row["x"]), float(row["y"])))
            flags[k] = bool(int(row["closed"]))
    out = []
    for k in sorted(rows):
        pts = np.array(rows[k])
        if flags[k] and len(pts) > 1:
            pts = pts[:-1]
        out.append(Polyline(pts, flags[k]))
    return out


def hausdorff(a: list[Polyline], b: list[Polyline]) -> float:
    """Symmetric Hausdorff distance between the vertex sets of two contour sets."""
    pa = np.vstack([p.points for p in a if len(p)]) if any(len(p) for p in a) else np.empty((0, 2))
    pb = np.vstack([p.points for p in b if len(p)]) if any(len(p) for p in b) else np.empty((0, 2))
    if len(pa) == 0 and len(pb) == 0:
        return 0.0
    if len(pa) == 0 or len(pb) == 0:
        return float("inf")
    return max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0])


def polygon_moments(points: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Area, centroid and second central moment matrix of a closed polygon."""
    x, y = points[:, 0], points[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2
    if area == 0:
        raise ValueError("degenerate polygon")
    cx = ((x + xn) * cross).sum() / (6 * area)
    cy = ((y + yn) * cross).sum() / (6 * area)
    ixx = ((x * x + x * xn + xn * xn) * cross).sum() / 12
    iyy = ((y * y + y * yn + yn * yn) * cross).sum() / 12
    ixy = ((x * yn + 2 * x * y + 2 * xn * yn + xn * y) * cross).sum() / 24
    cov = np.array([[ixx, ixy], [ixy, iyy]]) / area - np.outer([cx, cy], [cx, cy])
    return abs(area), np.array([cx, cy]), cov


def axis_ratio(points: np.ndarray) -> float:
    """Major over minor axis of the ellipse with the polygon's second moments."""
    _, _, cov = polygon_moments(points)
    ev = np.linalg.eigvalsh(cov)
    if ev[0] <= 0:
        raise ValueError("polygon has no positive-definite second moment")
    return float(np.sqrt(ev[1] / ev[0]))


def is_convex(points: np.ndarray, tol: float = 1e-12) -> bool:
    """True when all turns of the closed polygon have one sign."""
    d = np.diff(np.vstack([points, points[:2]]), axis=0)
    turns = d[:-1, 0] * d[1:, 1] - d[:-1, 1] * d[1:, 0]
    scale = tol * max(1.0, float(np.abs(turns).max(initial=0.0)))
    return bool(np.all(turns >= -scale) or np.all(turns <= scale))


def solidity(points: np.ndarray) -> float:
    """Polygon area over convex hull area: 1 for convex curves.

    Unlike :func:`is_convex` this ignores grid-scale wiggles of extracted contours.
    """
    area, _, _ = polygon_moments(points)
    return float(area / ConvexHull(points).volume)


def self_intersects(points: np.ndarray, closed: bool = True) -> bool:
    """Brute-force proper-intersection test between non-adjacent edges."""
    pts = np.vstack([points, points[:1]]) if closed else points
    segs = np.stack([pts[:-1], pts[1:]], axis=1)
    m = len(segs)

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    for a in range(m):
        p1, p2 = segs[a]
        for b in range(a + 2, m):
            if closed and a == 0 and b == m - 1:
                continue
            q1, q2 = segs[b]
            d1, d2 = orient(p1, p2, q1), orient(p1, p2, q2)
            d3, d4 = orient(q1, q2, p1), orient(q1, q2, p2)
            if d1 * d2 < 0 and d3 * d4 < 0:
                return True
    return False
