"""Planar polygonal chains and the geometric primitives used by the model.

A closed chain is stored as its ``m = n - 1`` distinct vertices; the closing
edge from the last vertex back to the first is implicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

EPS = 1e-12

Point2 = tuple[float, float]


class GeometryError(ValueError):
    """Invalid geometric input (degenerate chain, coincident points, ...)."""


@dataclass(frozen=True, eq=False)
class PolygonalChain:
    vertices: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        xy = np.array(self.vertices, dtype=float)
        if xy.ndim != 2 or xy.shape[1] != 2:
            raise GeometryError("vertices must be an (m, 2) array")
        if not np.all(np.isfinite(xy)):
            raise GeometryError("vertices must be finite")
        if len(xy) < 3:
            raise GeometryError(f"need at least 3 vertices, got {len(xy)}")
        step = np.roll(xy, -1, axis=0) - xy
        if np.any(np.all(step == 0.0, axis=1)):
            raise GeometryError("consecutive vertices must be distinct")
        xy.setflags(write=False)
        object.__setattr__(self, "vertices", xy)

    def __len__(self):
        return len(self.vertices)

    @property
    def x(self) -> np.ndarray:
        return self.vertices[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.vertices[:, 1]

    def rotate(self, r: int) -> "PolygonalChain":
        """Relabel the start vertex: new vertex i is old vertex (i + r) mod m."""
        return PolygonalChain(np.roll(self.vertices, -r, axis=0), self.normalized)


class LineCoefficients(NamedTuple):
    """Line ``A*x - B*y + C = 0``."""

    A: float
    B: float
    C: float


def edge_lengths(chain: PolygonalChain) -> np.ndarray:
    xy = chain.vertices
    return np.hypot(*(np.roll(xy, -1, axis=0) - xy).T)


def chain_length(chain: PolygonalChain) -> float:
    return float(edge_lengths(chain).sum())


def centroid(chain: PolygonalChain) -> Point2:
    cx, cy = chain.vertices.mean(axis=0)
    return float(cx), float(cy)


def normalize(chain: PolygonalChain) -> PolygonalChain:
    """Shift the vertex mean to the origin and rescale to unit closed length."""
    length = chain_length(chain)
    if not length > 0:
        raise GeometryError("cannot normalize a zero-length chain")
    center = chain.vertices.mean(axis=0)
    return PolygonalChain((chain.vertices - center) / length, normalized=True)


def shoelace_area(chain: PolygonalChain) -> float:
    x, y = chain.x, chain.y
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def line_through(p: Sequence[float], q: Sequence[float]) -> LineCoefficients:
    px, py = float(p[0]), float(p[1])
    qx, qy = float(q[0]), float(q[1])
    if px == qx and py == qy:
        raise GeometryError("line_through needs two distinct points")
    return LineCoefficients(qy - py, qx - px, qx * py - qy * px)


def signed_distance(v: Sequence[float], line: LineCoefficients, inside: bool) -> float:
    """Distance from ``v`` to ``line``; negative for points inside the landmark polygon."""
    A, B, C = line
    d = abs(A * v[0] - B * v[1] + C) / math.hypot(A, B)
    return -d if inside else d


def _point_segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - ax - t * dx, py - ay - t * dy)


def point_in_polygon(v: Sequence[float], polygon) -> bool:
    """Even-odd test; points within ``EPS`` of an edge count as outside."""
    px, py = float(v[0]), float(v[1])
    poly = np.asarray(polygon, dtype=float)
    inside = False
    k = len(poly)
    for i in range(k):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % k]
        if _point_segment_distance(px, py, ax, ay, bx, by) < EPS:
            return False
        if (ay > py) != (by > py):
            xcross = ax + (py - ay) * (bx - ax) / (by - ay)
            if px < xcross:
                inside = not inside
    return inside


def points_in_polygon(points, polygon) -> np.ndarray:
    """Vectorized :func:`point_in_polygon` over an ``(p, 2)`` array."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    poly = np.asarray(polygon, dtype=float)
    a = poly[None, :, :]
    b = np.roll(poly, -1, axis=0)[None, :, :]
    p = pts[:, None, :]
    px, py = p[..., 0], p[..., 1]
    ax, ay, bx, by = a[..., 0], a[..., 1], b[..., 0], b[..., 1]

    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip(((px - ax) * dx + (py - ay) * dy) / L2, 0.0, 1.0)
    t = np.where(L2 == 0, 0.0, t)
    on_edge = (np.hypot(px - ax - t * dx, py - ay - t * dy) < EPS).any(axis=1)

    straddle = (ay > py) != (by > py)
    with np.errstate(invalid="ignore", divide="ignore"):
        xcross = ax + (py - ay) * (bx - ax) / (by - ay)
    crossings = (straddle & (px < xcross)).sum(axis=1)
    return (crossings % 2 == 1) & ~on_edge


def orientation(ax, ay, bx, by, cx, cy) -> int:
    """Sign of the turn a -> b -> c, with |cross| < EPS treated as collinear."""
    cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if cross > EPS:
        return 1
    if cross < -EPS:
        return -1
    return 0


def _on_box(ax, ay, bx, by, cx, cy) -> bool:
    return (min(ax, bx) - EPS <= cx <= max(ax, bx) + EPS
            and min(ay, by) - EPS <= cy <= max(ay, by) + EPS)


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection test (touching counts)."""
    o1 = orientation(*p1, *p2, *q1)
    o2 = orientation(*p1, *p2, *q2)
    o3 = orientation(*q1, *q2, *p1)
    o4 = orientation(*q1, *q2, *p2)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and _on_box(*p1, *p2, *q1):
        return True
    if o2 == 0 and _on_box(*p1, *p2, *q2):
        return True
    if o3 == 0 and _on_box(*q1, *q2, *p1):
        return True
    if o4 == 0 and _on_box(*q1, *q2, *p2):
        return True
    return False


def adjacent_overlap(a, b, c) -> bool:
    """Edges a-b and b-c fold back onto each other beyond the shared vertex b."""
    if orientation(*a, *b, *c) != 0:
        return False
    return (a[0] - b[0]) * (c[0] - b[0]) + (a[1] - b[1]) * (c[1] - b[1]) > 0


def _pairwise_crossings(p1, p2, q1, q2):
    """Broadcast closed-segment intersection over arrays of endpoints."""

    def orient(a, b, c):
        cross = (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (
            b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])
        return np.where(cross > EPS, 1, np.where(cross < -EPS, -1, 0))

    def on_box(a, b, c):
        lo = np.minimum(a, b) - EPS
        hi = np.maximum(a, b) + EPS
        return np.all((lo <= c) & (c <= hi), axis=-1)

    o1 = orient(p1, p2, q1)
    o2 = orient(p1, p2, q2)
    o3 = orient(q1, q2, p1)
    o4 = orient(q1, q2, p2)
    hit = (o1 * o2 < 0) & (o3 * o4 < 0)
    hit |= (o1 == 0) & on_box(p1, p2, q1)
    hit |= (o2 == 0) & on_box(p1, p2, q2)
    hit |= (o3 == 0) & on_box(q1, q2, p1)
    hit |= (o4 == 0) & on_box(q1, q2, p2)
    return hit


def _small_self_intersecting(pts) -> bool:
    k = len(pts)
    for i in range(k):
        a, b, c = pts[i - 1], pts[i], pts[(i + 1) % k]
        if adjacent_overlap(a, b, c):
            return True
    for i in range(k):
        p1, p2 = pts[i], pts[(i + 1) % k]
        # skip j == i + 1 (adjacent) and the wrap pair (0, k - 1)
        for j in range(i + 2, k - (1 if i == 0 else 0)):
            if segments_intersect(p1, p2, pts[j], pts[(j + 1) % k]):
                return True
    return False


def is_self_intersecting(polygon, block: int = 512) -> bool:
    """True iff the closed polygon is not simple.

    Non-adjacent edges may not touch at all; adjacent edges may share only
    their common vertex.
    """
    poly = np.asarray(polygon, dtype=float)
    k = len(poly)
    if k < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    if k <= 24:
        return _small_self_intersecting([tuple(p) for p in poly.tolist()])

    prev = np.roll(poly, 1, axis=0)
    nxt = np.roll(poly, -1, axis=0)
    u = prev - poly
    w = nxt - poly
    cross = u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]
    dot = (u * w).sum(axis=1)
    if np.any((np.abs(cross) <= EPS) & (dot > 0)):
        return True

    idx = np.arange(k)
    for start in range(0, k, block):
        rows = idx[start:start + block]
        p1 = poly[rows][:, None, :]
        p2 = nxt[rows][:, None, :]
        hit = _pairwise_crossings(p1, p2, poly[None, :, :], nxt[None, :, :])
        gap = (idx[None, :] - rows[:, None]) % k
        hit &= (gap >= 2) & (gap <= k - 2)
        if hit.any():
            return True
    return False


def convex_hull(chain: PolygonalChain | np.ndarray) -> list[int]:
    """Indices of strict convex-hull vertices, in chain order (monotone chain)."""
    xy = chain.vertices if isinstance(chain, PolygonalChain) else np.asarray(chain, float)
    order = sorted(range(len(xy)), key=lambda i: (xy[i, 0], xy[i, 1], i))
    # drop duplicate coordinates, keep the first index
    pts = []
    for i in order:
        if pts and xy[pts[-1], 0] == xy[i, 0] and xy[pts[-1], 1] == xy[i, 1]:
            continue
        pts.append(i)
    if len(pts) < 3:
        raise GeometryError("convex hull needs three non-collinear points")

    def cross(o, a, b):
        return ((xy[a, 0] - xy[o, 0]) * (xy[b, 1] - xy[o, 1])
                - (xy[a, 1] - xy[o, 1]) * (xy[b, 0] - xy[o, 0]))

    lower: list[int] = []
    for i in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= EPS:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= EPS:
            upper.pop()
        upper.append(i)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise GeometryError("all points are collinear")
    return sorted(hull)
