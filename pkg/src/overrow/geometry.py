"""Small planar-geometry predicates for field layouts.

Polygons are sequences of (x, y) vertices in order, implicitly closed.
"""

from __future__ import annotations

import math


def polygon_area(poly) -> float:
    """Signed shoelace area; positive for counter-clockwise winding."""
    area = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        area += x0 * y1 - x1 * y0
    return 0.5 * area


def _segments_intersect(p, q, r, s) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    def on_segment(a, b, c):
        return (min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
                and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12)

    o1, o2 = orient(p, q, r), orient(p, q, s)
    o3, o4 = orient(r, s, p), orient(r, s, q)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_segment(p, q, r):
        return True
    if o2 == 0 and on_segment(p, q, s):
        return True
    if o3 == 0 and on_segment(r, s, p):
        return True
    if o4 == 0 and on_segment(r, s, q):
        return True
    return False


def polygon_errors(poly) -> list[str]:
    """Validation problems for a polygon: too few vertices, degenerate area,
    repeated consecutive vertices, or self-intersection."""
    errors = []
    if len(poly) < 3:
        return [f"polygon needs >= 3 vertices, got {len(poly)}"]
    n = len(poly)
    for i in range(n):
        if math.dist(poly[i], poly[(i + 1) % n]) < 1e-9:
            errors.append(f"repeated consecutive vertex at index {i}")
    if abs(polygon_area(poly)) < 1e-9:
        errors.append("degenerate polygon (zero area)")
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = poly[j], poly[(j + 1) % n]
            if _segments_intersect(a, b, c, d):
                errors.append(f"self-intersection between edges {i} and {j}")
                return errors
    return errors


def point_in_polygon(x: float, y: float, poly) -> bool:
    """Ray-casting point-in-polygon test; boundary points count as inside."""
    n = len(poly)
    inside = False
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        # boundary check against this edge
        if (min(x0, x1) - 1e-12 <= x <= max(x0, x1) + 1e-12
                and min(y0, y1) - 1e-12 <= y <= max(y0, y1) + 1e-12):
            cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
            if abs(cross) < 1e-12:
                return True
        if (y0 > y) != (y1 > y):
            x_int = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x < x_int:
                inside = not inside
    return inside


def segment_intersects_polygon(p, q, poly) -> bool:
    """True if segment p-q touches the polygon boundary or lies inside it."""
    if point_in_polygon(p[0], p[1], poly) or point_in_polygon(q[0], q[1], poly):
        return True
    n = len(poly)
    for i in range(n):
        if _segments_intersect(p, q, poly[i], poly[(i + 1) % n]):
            return True
    return False


def rect_polygon(x0: float, y0: float, x1: float, y1: float):
    """Axis-aligned rectangle as a CCW polygon."""
    xa, xb = min(x0, x1), max(x0, x1)
    ya, yb = min(y0, y1), max(y0, y1)
    return ((xa, ya), (xb, ya), (xb, yb), (xa, yb))
