"""Mask to CAD geometry: border tracing, simplification, SVG/DXF export.

Contours are traced with Moore-neighbor border following over 8-connected
foreground components; polylines run through foreground pixel centers, so
rasterizing them back with the even-odd rule (boundary = foreground)
reproduces the source mask up to boundary-convention differences.

Orientation is stated in the image frame (x right, y down): outer rings
carry positive shoelace area, hole rings negative. Exports scale by
1/px_per_unit and flip the y axis into the CAD frame (y up).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import geometry
from .errors import ValidationError

# Clockwise 8-neighborhood in (row, col) offsets, east first.
_DIRS = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))
_DIR_INDEX = {d: i for i, d in enumerate(_DIRS)}


@dataclass
class HolePoly:
    parent: int
    points: np.ndarray


@dataclass
class PolySet:
    outers: list[np.ndarray] = field(default_factory=list)
    holes: list[HolePoly] = field(default_factory=list)

    def validate(self) -> None:
        for ring in self.all_rings():
            if len(ring) < 4:
                raise ValidationError("polyline must have >= 4 points")
            if not np.array_equal(ring[0], ring[-1]):
                raise ValidationError("polyline must be closed (first == last)")
        for hole in self.holes:
            if not 0 <= hole.parent < len(self.outers):
                raise ValidationError(f"hole parent index {hole.parent} invalid")

    def all_rings(self) -> list[np.ndarray]:
        return list(self.outers) + [h.points for h in self.holes]

    def is_empty(self) -> bool:
        return not self.outers


def _trace_border(fg: np.ndarray, start: tuple[int, int],
                  backtrack: tuple[int, int]) -> list[tuple[int, int]]:
    """Moore-neighbor walk returning one closed border cycle.

    The walk is a deterministic map on (pixel, backtrack) states, so it must
    eventually revisit a state; the contour is the cycle between the two
    visits. This is robust where a plain return-to-start test is not: the
    synthetic initial state (scan-order start pixel with its west neighbor
    as backtrack) may be transient and never recur.

    ``fg`` must be padded so every probed neighbor index is in bounds.
    Pixels may repeat within a cycle on 1-px spurs; that is correct.
    """
    state = (start, backtrack)
    seen = {state: 0}
    path = [start]
    while True:
        p, b = state
        idx = _DIR_INDEX[(b[0] - p[0], b[1] - p[1])]
        found = None
        prev = b
        for k in range(1, 9):
            d = _DIRS[(idx + k) % 8]
            cand = (p[0] + d[0], p[1] + d[1])
            if fg[cand]:
                found = cand
                break
            prev = cand
        if found is None:
            return [start]  # isolated pixel
        state = (found, prev)
        if state in seen:
            return path[seen[state]:]
        seen[state] = len(path)
        path.append(found)


def _to_ring(pixels: list[tuple[int, int]], positive_area: bool) -> np.ndarray:
    """Pixel path -> closed (x, y) ring with the requested area sign."""
    pts = np.array([(c, r) for r, c in pixels], dtype=np.float64)
    area = geometry.signed_area(pts)
    if area != 0.0 and (area > 0) != positive_area:
        pts = pts[::-1]
    ring = np.concatenate([pts, pts[:1]], axis=0)
    while len(ring) < 4:
        ring = np.concatenate([ring, ring[-1:]], axis=0)
    return ring


def trace_contours(mask: np.ndarray) -> PolySet:
    """Trace every foreground component's outer border and its holes."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValidationError("mask must be HxW")
    polyset = PolySet()
    if not mask.any():
        return polyset

    labels, n_comp = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    padded = np.pad(labels, 1)

    for comp in range(1, n_comp + 1):
        fg = padded == comp
        first = tuple(np.argwhere(fg)[0])  # topmost, then leftmost
        backtrack = (first[0], first[1] - 1)
        pixels = _trace_border(fg, first, backtrack)
        ring = _to_ring([(r - 1, c - 1) for r, c in pixels], positive_area=True)
        polyset.outers.append(ring)

    # Holes: background 4-components that do not touch the image border.
    bg_labels, n_bg = ndimage.label(~mask)
    border_ids = set(np.unique(bg_labels[0, :])) | set(np.unique(bg_labels[-1, :])) \
        | set(np.unique(bg_labels[:, 0])) | set(np.unique(bg_labels[:, -1]))
    for bg_id in range(1, n_bg + 1):
        if bg_id in border_ids:
            continue
        top = tuple(np.argwhere(bg_labels == bg_id)[0])
        parent = int(labels[top[0] - 1, top[1]])  # pixel above a hole top is parent fg
        fg = padded == parent
        start = (top[0] - 1 + 1, top[1] + 1)       # parent pixel, padded coords
        backtrack = (top[0] + 1, top[1] + 1)       # the hole pixel below it
        pixels = _trace_border(fg, start, backtrack)
        ring = _to_ring([(r - 1, c - 1) for r, c in pixels], positive_area=False)
        polyset.holes.append(HolePoly(parent=parent - 1, points=ring))

    polyset.validate()
    return polyset


def _dp_open(points: np.ndarray, epsilon: float) -> np.ndarray:
    """Douglas-Peucker on an open chain, keeping both endpoints."""
    n = len(points)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        seg = points[lo + 1:hi]
        d = np.atleast_1d(geometry.point_segment_distance(seg, points[lo], points[hi]))
        imax = int(np.argmax(d))
        if d[imax] > epsilon:
            split = lo + 1 + imax
            keep[split] = True
            stack.append((lo, split))
            stack.append((split, hi))
    return points[keep]


def simplify(polyline: np.ndarray, epsilon: float) -> np.ndarray:
    """Simplify a polyline; closed rings pick two far-apart anchors first.

    Every dropped vertex stays within epsilon of the simplified chain and
    surviving vertices are never moved. epsilon 0 returns the input as is.
    """
    if epsilon < 0:
        raise ValidationError("epsilon must be >= 0")
    pts = np.asarray(polyline, dtype=np.float64)
    if epsilon == 0 or len(pts) < 3:
        return pts.copy()

    closed = bool(np.array_equal(pts[0], pts[-1]))
    if not closed:
        return _dp_open(pts, epsilon)

    ring = pts[:-1]
    if len(ring) <= 3:
        return pts.copy()
    a = int(np.argmax(np.linalg.norm(ring - ring[0], axis=1)))
    b = int(np.argmax(np.linalg.norm(ring - ring[a], axis=1)))
    if a == b:
        return pts.copy()
    lo, hi = min(a, b), max(a, b)
    arc1 = ring[lo:hi + 1]
    arc2 = np.concatenate([ring[hi:], ring[:lo + 1]], axis=0)
    out = np.concatenate([_dp_open(arc1, epsilon)[:-1],
                          _dp_open(arc2, epsilon)[:-1]], axis=0)
    out = np.concatenate([out, out[:1]], axis=0)
    while len(out) < 4:
        out = np.concatenate([out, out[-1:]], axis=0)
    return out


def simplify_polyset(polyset: PolySet, epsilon: float) -> PolySet:
    return PolySet(
        outers=[simplify(r, epsilon) for r in polyset.outers],
        holes=[HolePoly(h.parent, simplify(h.points, epsilon))
               for h in polyset.holes])


def polyset_to_mask(polyset: PolySet, shape: tuple[int, int]) -> np.ndarray:
    """Even-odd rasterization of all rings; the round-trip counterpart."""
    return geometry.rasterize_rings(polyset.all_rings(), shape)


def _cad_xy(point: np.ndarray, px_per_unit: float) -> tuple[float, float]:
    return point[0] / px_per_unit, -point[1] / px_per_unit


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def polyset_to_svg(polyset: PolySet, px_per_unit: float = 1.0) -> str:
    if px_per_unit <= 0:
        raise ValidationError("px_per_unit must be > 0")
    paths = []
    all_pts = []
    for i, outer in enumerate(polyset.outers):
        rings = [outer] + [h.points for h in polyset.holes if h.parent == i]
        parts = []
        for ring in rings:
            body = ring[:-1]
            coords = [_cad_xy(p, px_per_unit) for p in body]
            all_pts.extend(coords)
            d = "M " + " L ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in coords) + " Z"
            parts.append(d)
        paths.append(
            f'  <path fill-rule="evenodd" fill="#d9d9d9" stroke="#000000" '
            f'stroke-width="{_fmt(1.0 / px_per_unit)}" d="{" ".join(parts)}"/>')
    if all_pts:
        xs = [p[0] for p in all_pts]
        ys = [p[1] for p in all_pts]
        pad = max(1.0, 0.02 * max(max(xs) - min(xs), max(ys) - min(ys)))
        view = (min(xs) - pad, min(ys) - pad,
                (max(xs) - min(xs)) + 2 * pad, (max(ys) - min(ys)) + 2 * pad)
    else:
        view = (0.0, 0.0, 1.0, 1.0)
    header = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{_fmt(view[0])} {_fmt(view[1])} {_fmt(view[2])} {_fmt(view[3])}">\n')
    return header + "\n".join(paths) + ("\n" if paths else "") + "</svg>\n"


def _dxf_group(code: int, value: str) -> str:
    return f"{code:>3}\n{value}\n"


def polyset_to_dxf(polyset: PolySet, px_per_unit: float = 1.0) -> str:
    """ASCII R12: one closed POLYLINE entity per ring, VERTEX/SEQEND style."""
    if px_per_unit <= 0:
        raise ValidationError("px_per_unit must be > 0")
    out = []
    out.append(_dxf_group(0, "SECTION"))
    out.append(_dxf_group(2, "HEADER"))
    out.append(_dxf_group(9, "$ACADVER"))
    out.append(_dxf_group(1, "AC1009"))
    out.append(_dxf_group(0, "ENDSEC"))
    out.append(_dxf_group(0, "SECTION"))
    out.append(_dxf_group(2, "ENTITIES"))
    for ring in polyset.all_rings():
        out.append(_dxf_group(0, "POLYLINE"))
        out.append(_dxf_group(8, "0"))
        out.append(_dxf_group(66, "1"))
        out.append(_dxf_group(70, "1"))  # closed polyline
        for p in ring[:-1]:
            x, y = _cad_xy(p, px_per_unit)
            out.append(_dxf_group(0, "VERTEX"))
            out.append(_dxf_group(8, "0"))
            out.append(_dxf_group(10, _fmt(x)))
            out.append(_dxf_group(20, _fmt(y)))
            out.append(_dxf_group(30, _fmt(0.0)))
        out.append(_dxf_group(0, "SEQEND"))
        out.append(_dxf_group(8, "0"))
    out.append(_dxf_group(0, "ENDSEC"))
    out.append(_dxf_group(0, "EOF"))
    return "".join(out)


def export(polyset: PolySet, fmt: str, out: str | Path,
           px_per_unit: float = 1.0) -> Path:
    """Write the polyset as SVG or R12 DXF; returns the written path."""
    if fmt == "svg":
        text = polyset_to_svg(polyset, px_per_unit)
    elif fmt == "dxf":
        text = polyset_to_dxf(polyset, px_per_unit)
    else:
        raise ValidationError(f"unknown export format {fmt!r} (svg or dxf)")
    path = Path(out)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text)
        tmp.replace(path)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}") from exc
    return path
