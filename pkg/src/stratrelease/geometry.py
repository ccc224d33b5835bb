"""Convex-polygon primitives for the planar oracle and arrangement.

Polygons are lists of (x, y) vertices in counter-clockwise order.  A
polygon may degenerate to a segment or a single point after clipping.
"""

from __future__ import annotations

import math

TOL = 1e-12


def normalized_margin(w, b, z) -> float:
    return (w[0] * z[0] + w[1] * z[1] + b) / math.hypot(w[0], w[1])


def clip(poly: list, w, b, keep_positive: bool = True) -> list:
    """Intersect ``poly`` with the closed halfplane ``w.z + b >= 0`` (or ``<= 0``)."""
    if not poly:
        return []
    sign = 1.0 if keep_positive else -1.0
    norm = math.hypot(w[0], w[1])
    ms = [sign * (w[0] * p[0] + w[1] * p[1] + b) / norm for p in poly]
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        mp, mq = ms[i], ms[(i + 1) % n]
        if mp >= -TOL:
            out.append(p)
        if (mp > TOL and mq < -TOL) or (mp < -TOL and mq > TOL):
            t = mp / (mp - mq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return _dedupe(out)


def _dedupe(poly: list) -> list:
    out = []
    for p in poly:
        if not out or abs(p[0] - out[-1][0]) > TOL or abs(p[1] - out[-1][1]) > TOL:
            out.append(p)
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) <= TOL and abs(out[0][1] - out[-1][1]) <= TOL:
        out.pop()
    return out


def area(poly: list) -> float:
    s = 0.0
    n = len(poly)
    for i in range(n):
        (x0, y0), (x1, y1) = poly[i], poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s / 2.0


def vertex_mean(poly: list) -> tuple:
    n = len(poly)
    return (math.fsum(p[0] for p in poly) / n, math.fsum(p[1] for p in poly) / n)


def contains(poly: list, x) -> bool:
    """Closed containment test for a convex counter-clockwise polygon."""
    n = len(poly)
    if n == 0:
        return False
    if n <= 2 or abs(area(poly)) <= TOL:
        px, _ = nearest_point_l2(poly, x, check_inside=False)
        return math.hypot(px[0] - x[0], px[1] - x[1]) <= TOL
    for i in range(n):
        (x0, y0), (x1, y1) = poly[i], poly[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        cross = ex * (x[1] - y0) - ey * (x[0] - x0)
        if cross < -TOL * math.hypot(ex, ey):
            return False
    return True


def _edges(poly: list):
    n = len(poly)
    if n == 1:
        yield poly[0], poly[0]
        return
    for i in range(n if n > 2 else 1):
        yield poly[i], poly[(i + 1) % n]


def _segment_candidates_l2(p, q, x):
    dx, dy = q[0] - p[0], q[1] - p[1]
    ll = dx * dx + dy * dy
    t = 0.0 if ll == 0 else max(0.0, min(1.0, ((x[0] - p[0]) * dx + (x[1] - p[1]) * dy) / ll))
    return [(p[0] + t * dx, p[1] + t * dy)]


def _segment_candidates_poly(p, q, x, pnorm):
    dx, dy = q[0] - p[0], q[1] - p[1]
    ts = {0.0, 1.0}
    ax, ay = p[0] - x[0], p[1] - x[1]
    if pnorm == 1.0:
        if dx != 0:
            ts.add(-ax / dx)
        if dy != 0:
            ts.add(-ay / dy)
    else:
        if dx - dy != 0:
            ts.add((ay - ax) / (dx - dy))
        if dx + dy != 0:
            ts.add(-(ax + ay) / (dx + dy))
    return [(p[0] + t * dx, p[1] + t * dy) for t in ts if 0.0 <= t <= 1.0]


def _dist(x, z, pnorm: float) -> float:
    a, b = abs(z[0] - x[0]), abs(z[1] - x[1])
    if pnorm == 2.0:
        return math.hypot(a, b)
    if pnorm == 1.0:
        return a + b
    return max(a, b)


def nearest_point(poly: list, x, pnorm: float = 2.0, check_inside: bool = True):
    """Closest point of the convex polygon to ``x`` under the p-norm.

    Returns ``(point, distance)``; ties go to the lexicographically
    smallest point.
    """
    if check_inside and contains(poly, x):
        return (float(x[0]), float(x[1])), 0.0
    best = None
    for p, q in _edges(poly):
        cands = _segment_candidates_l2(p, q, x) if pnorm == 2.0 else _segment_candidates_poly(p, q, x, pnorm)
        for z in cands:
            d = _dist(x, z, pnorm)
            key = (d, z)
            if best is None or d < best[0] - TOL or (abs(d - best[0]) <= TOL and z < best[1]):
                best = key
    return best[1], best[0]


def nearest_point_l2(poly: list, x, check_inside: bool = True):
    return nearest_point(poly, x, 2.0, check_inside)


def on_segment_of(poly: list, z, tol: float = 1e-9) -> bool:
    """Whether ``z`` lies on some edge of ``poly``."""
    for p, q in _edges(poly):
        (c,) = _segment_candidates_l2(p, q, z)
        if math.hypot(c[0] - z[0], c[1] - z[1]) <= tol:
            return True
    return False
