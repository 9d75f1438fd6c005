"""Polygon rasterization and small planar-geometry helpers.

Rasterization contract: a pixel is foreground iff its center is inside the
ring set under the even-odd rule, with points exactly on a ring edge always
counting as foreground. Vertices are snapped to a 1/8 px lattice so the
whole test runs in exact integer arithmetic (pixel centers land on the same
lattice), which makes the rasterizer bit-for-bit reproducible and lets a
brute-force oracle match it exactly.

Coordinates are (x, y) with x along columns and y along rows; pixel (r, c)
has its center at integer (c, r), so traced contours that pass through
pixel centers carry integer coordinates.
"""

from __future__ import annotations

import numpy as np

SNAP = 8  # vertex lattice: 1/SNAP px


def snap_points(points: np.ndarray) -> np.ndarray:
    """Snap float vertices to the 1/8 px lattice."""
    pts = np.asarray(points, dtype=np.float64)
    return np.round(pts * SNAP) / SNAP


def _scaled_edges(ring: np.ndarray) -> np.ndarray:
    """Closed-ring edge list in lattice integers, zero-length edges dropped."""
    pts = np.round(np.asarray(ring, dtype=np.float64) * SNAP).astype(np.int64)
    if len(pts) >= 2 and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    if len(pts) == 0:
        return np.empty((0, 4), dtype=np.int64)
    nxt = np.roll(pts, -1, axis=0)
    edges = np.concatenate([pts, nxt], axis=1)
    keep = (edges[:, 0] != edges[:, 2]) | (edges[:, 1] != edges[:, 3])
    return edges[keep]


def rasterize_rings(rings: list[np.ndarray], shape: tuple[int, int]) -> np.ndarray:
    """Even-odd rasterization of a set of closed rings, boundary -> foreground.

    ``rings`` hold (x, y) vertices in pixel units; open rings are closed
    implicitly. Returns a bool H x W mask.
    """
    height, width = shape
    parity = np.zeros((height, width), dtype=bool)
    boundary = np.zeros((height, width), dtype=bool)
    # Pixel-center lattice coordinates.
    ys = np.arange(height, dtype=np.int64) * SNAP
    xs = np.arange(width, dtype=np.int64) * SNAP

    for ring in rings:
        edges = _scaled_edges(ring)
        if len(edges) == 0 and len(ring) > 0:
            # Degenerate point ring: mark the pixel whose center it hits.
            x, y = np.round(np.asarray(ring[0], dtype=np.float64) * SNAP)
            if x % SNAP == 0 and y % SNAP == 0:
                c, r = int(x) // SNAP, int(y) // SNAP
                if 0 <= r < height and 0 <= c < width:
                    boundary[r, c] = True
            continue
        for x1, y1, x2, y2 in edges:
            # Rows whose center y is strictly between the edge's y extent
            # (half-open rule keeps shared vertices from double counting).
            rows = np.nonzero((y1 > ys) != (y2 > ys))[0]
            if rows.size:
                yc = ys[rows][:, None]
                t = (xs[None, :] - x1) * (y2 - y1) - (x2 - x1) * (yc - y1)
                crossed = t < 0 if y2 > y1 else t > 0
                parity[rows, :] ^= crossed
            # Boundary test: zero cross product within the edge bbox.
            rlo, rhi = sorted((y1, y2))
            clo, chi = sorted((x1, x2))
            rsel = np.nonzero((ys >= rlo) & (ys <= rhi))[0]
            csel = np.nonzero((xs >= clo) & (xs <= chi))[0]
            if rsel.size and csel.size:
                yc = ys[rsel][:, None]
                xc = xs[csel][None, :]
                cross = (x2 - x1) * (yc - y1) - (xc - x1) * (y2 - y1)
                sub = boundary[np.ix_(rsel, csel)]
                boundary[np.ix_(rsel, csel)] = sub | (cross == 0)

    return parity | boundary


def signed_area(ring: np.ndarray) -> float:
    """Shoelace signed area of a closed ring in (x, y) pixel coordinates."""
    pts = np.asarray(ring, dtype=np.float64)
    if len(pts) >= 2 and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return float(0.5 * np.sum(x * yn - xn * y))


def point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the segment a-b (vectorized)."""
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        d = np.linalg.norm(p - a, axis=1)
    else:
        t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
        proj = a + t[:, None] * ab
        d = np.linalg.norm(p - proj, axis=1)
    return d if d.size > 1 else d[0]


def points_in_polygon(points: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Plain even-odd crossing test for float points (strict interiors).

    Used for geometry validity checks during generation, where exact
    boundary behavior is irrelevant; the integer rasterizer above is the
    authority for pixel-center queries.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    ring = np.asarray(ring, dtype=np.float64)
    if len(ring) >= 2 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(ring)
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        spans = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (x2 - x1) * (y - y1) / (y2 - y1)
        inside ^= spans & (x < xint)
    return inside if inside.size > 1 else inside[0]


def polygon_min_distance(ring_a: np.ndarray, ring_b: np.ndarray) -> float:
    """Minimum vertex-to-edge distance between two rings (symmetric)."""
    a = np.asarray(ring_a, dtype=np.float64)
    b = np.asarray(ring_b, dtype=np.float64)
    best = np.inf
    for pts, ring in ((a, b), (b, a)):
        n = len(ring)
        for i in range(n):
            d = point_segment_distance(pts, ring[i], ring[(i + 1) % n])
            best = min(best, float(np.min(d)))
    return best
