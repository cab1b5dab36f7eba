"""Convex polygons with exact rational vertices.

A polygon may be degenerate: a single point or a segment.  These show up
as subdifferentials of piecewise-linear functions (a point inside a facet,
a segment on an edge, a full polygon at a vertex), so the degenerate cases
are first-class citizens rather than errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .primitives import (
    Pt,
    ZERO,
    convex_hull,
    cross,
    dist_sq,
    dot,
    orient,
    point_seg_dist_sq,
    seg_seg_dist_sq,
    sub,
)


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon, vertices counterclockwise, canonicalized.

    0 vertices = empty set, 1 = point, 2 = segment, >= 3 = full polygon
    with no three consecutive collinear vertices.
    """

    vertices: tuple[Pt, ...]

    @staticmethod
    def from_points(points) -> "ConvexPolygon":
        return ConvexPolygon(tuple(convex_hull(points)))

    @staticmethod
    def empty() -> "ConvexPolygon":
        return ConvexPolygon(())

    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    def is_point(self) -> bool:
        return len(self.vertices) == 1

    def is_segment(self) -> bool:
        return len(self.vertices) == 2

    def area2(self) -> Fraction:
        """Twice the signed area (exact)."""
        v = self.vertices
        if len(v) < 3:
            return ZERO
        s = ZERO
        for i in range(len(v)):
            s += cross(v[i], v[(i + 1) % len(v)])
        return s

    def area(self) -> Fraction:
        return self.area2() / 2

    def contains(self, p: Pt) -> bool:
        """Closed-set membership, exact."""
        v = self.vertices
        if not v:
            return False
        if len(v) == 1:
            return p == v[0]
        if len(v) == 2:
            return point_seg_dist_sq(p, v[0], v[1]) == 0
        for i in range(len(v)):
            if orient(v[i], v[(i + 1) % len(v)], p) < 0:
                return False
        return True

    def clip_halfplane(self, n: Pt, c: Fraction) -> "ConvexPolygon":
        """Intersect with {p : n . p <= c} (one Sutherland-Hodgman pass)."""
        v = self.vertices
        if not v:
            return self
        if len(v) == 1:
            return self if dot(n, v[0]) <= c else ConvexPolygon.empty()
        if len(v) == 2:
            return _clip_segment(v[0], v[1], n, c)
        out: list[Pt] = []
        m = len(v)
        vals = [dot(n, q) - c for q in v]
        for i in range(m):
            a, b = v[i], v[(i + 1) % m]
            fa, fb = vals[i], vals[(i + 1) % m]
            if fa <= 0:
                out.append(a)
            if (fa < 0 < fb) or (fb < 0 < fa):
                t = fa / (fa - fb)
                out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
        return ConvexPolygon.from_points(out) if out else ConvexPolygon.empty()

    def intersect(self, other: "ConvexPolygon") -> "ConvexPolygon":
        """Exact intersection with another convex polygon."""
        if self.is_empty() or other.is_empty():
            return ConvexPolygon.empty()
        if len(other.vertices) < 3:
            # degenerate clip region: fall back to symmetric handling
            if len(self.vertices) >= 3:
                return _clip_by_polygon(other, self)
            # both degenerate: point/segment vs point/segment
            return _degenerate_intersect(self, other)
        return _clip_by_polygon(self, other)

    def intersects(self, other: "ConvexPolygon") -> bool:
        return not self.intersect(other).is_empty()

    def diameter_sq(self) -> Fraction:
        v = self.vertices
        if len(v) <= 1:
            return ZERO
        return max(dist_sq(a, b) for i, a in enumerate(v) for b in v[i + 1:])

    def min_dist_sq(self, other: "ConvexPolygon") -> Fraction:
        """Exact squared distance between two convex sets (0 if they meet)."""
        if self.is_empty() or other.is_empty():
            raise ValueError("distance to empty polygon")
        if self.intersects(other):
            return ZERO
        best = None
        for a, b in _edges_or_self(self):
            for c, d in _edges_or_self(other):
                v = seg_seg_dist_sq(a, b, c, d)
                if best is None or v < best:
                    best = v
        return best

    def bbox(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))


def _edges_or_self(poly: ConvexPolygon):
    v = poly.vertices
    if len(v) == 1:
        yield (v[0], v[0])
    elif len(v) == 2:
        yield (v[0], v[1])
    else:
        for i in range(len(v)):
            yield (v[i], v[(i + 1) % len(v)])


def _clip_segment(a: Pt, b: Pt, n: Pt, c: Fraction) -> ConvexPolygon:
    fa, fb = dot(n, a) - c, dot(n, b) - c
    if fa <= 0 and fb <= 0:
        return ConvexPolygon.from_points([a, b])
    if fa > 0 and fb > 0:
        return ConvexPolygon.empty()
    t = fa / (fa - fb)
    mid = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    keep = a if fa <= 0 else b
    return ConvexPolygon.from_points([keep, mid])


def _clip_by_polygon(subject: ConvexPolygon, clip: ConvexPolygon) -> ConvexPolygon:
    """Clip subject by every edge half-plane of a full-dimensional clip."""
    out = subject
    v = clip.vertices
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        e = sub(b, a)
        n = (e[1], -e[0])  # outward normal of a CCW edge
        out = out.clip_halfplane(n, dot(n, a))
        if out.is_empty():
            break
    return out


def _degenerate_intersect(p: ConvexPolygon, q: ConvexPolygon) -> ConvexPolygon:
    pv, qv = p.vertices, q.vertices
    if len(pv) == 1:
        return p if q.contains(pv[0]) else ConvexPolygon.empty()
    if len(qv) == 1:
        return q if p.contains(qv[0]) else ConvexPolygon.empty()
    # segment vs segment: clip p's segment by q's supporting line slab
    a, b = pv
    c, d = qv
    e = sub(d, c)
    n = (e[1], -e[0])
    cc = dot(n, c)
    seg = _clip_segment(a, b, n, cc)
    if seg.is_empty():
        return seg
    seg = seg.clip_halfplane((-n[0], -n[1]), -cc)
    if seg.is_empty():
        return seg
    # now restrict to q's extent along its own direction
    seg = seg.clip_halfplane((-e[0], -e[1]), -dot(e, c) + 0)
    seg = seg.clip_halfplane(e, dot(e, d))
    return seg


def rect_polygon(cx, cy, hx, hy) -> ConvexPolygon:
    """Axis-aligned rectangle as a polygon."""
    return ConvexPolygon.from_points(
        [(cx - hx, cy - hy), (cx + hx, cy - hy), (cx + hx, cy + hy), (cx - hx, cy + hy)]
    )
