"""Piecewise-linear convex functions as lower hulls of lifted samples.

The function is the largest convex interpolant below the samples.  Facets
are maximal linearity cells (coplanar lifted triangles merged), so the
gradient changes across every facet edge.  Subdifferentials are exact
rational polygons: a point inside a facet, a segment on an edge, a full
polygon at a vertex; at domain-boundary points the theoretically unbounded
set is intersected with the convex hull of the facet gradients and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from ..errors import OutOfDomainError
from . import hull3d
from .polygon import ConvexPolygon
from .primitives import (
    Pt,
    as_rat,
    convex_hull,
    dist_sq,
    dot,
    fmt_rat,
    orient,
    parse_rat,
    point_seg_dist_sq,
    rat_sqrt_or_float,
    sub,
)

Sample = tuple[Pt, Fraction]


@dataclass(frozen=True)
class Facet:
    """Maximal linearity cell: CCW corner indices plus its affine piece."""

    corners: tuple[int, ...]
    gradient: Pt
    offset: Fraction


@dataclass(frozen=True)
class Region:
    """Query region: a convex polygon or a segment neighborhood (stadium)."""

    polygon: ConvexPolygon | None = None
    segment: tuple[Pt, Pt] | None = None
    radius: Fraction | None = None

    @staticmethod
    def from_polygon(poly: ConvexPolygon) -> "Region":
        return Region(polygon=poly)

    @staticmethod
    def segment_neighborhood(a: Pt, b: Pt, radius) -> "Region":
        return Region(segment=(a, b), radius=as_rat(radius))

    def contains_point(self, p: Pt) -> bool:
        if self.polygon is not None:
            return self.polygon.contains(p)
        a, b = self.segment
        return point_seg_dist_sq(p, a, b) <= self.radius * self.radius

    def meets_polygon(self, poly: ConvexPolygon) -> bool:
        if self.polygon is not None:
            return self.polygon.intersects(poly)
        a, b = self.segment
        if poly.contains(a):
            return True
        r2 = self.radius * self.radius
        verts = poly.vertices
        if len(verts) == 1:
            return point_seg_dist_sq(verts[0], a, b) <= r2
        from .primitives import seg_seg_dist_sq

        m = len(verts)
        rng = range(m) if m > 2 else range(1)
        for i in rng:
            c, d = verts[i], verts[(i + 1) % m]
            if seg_seg_dist_sq(a, b, c, d) <= r2:
                return True
        return False

    def inside_polygon(self, domain: ConvexPolygon) -> bool:
        """Is the whole region contained in a convex domain?"""
        if self.polygon is not None:
            return all(domain.contains(v) for v in self.polygon.vertices)
        a, b = self.segment
        r2 = self.radius * self.radius
        dv = domain.vertices
        if len(dv) < 3:
            return False
        for i in range(len(dv)):
            u, w = dv[i], dv[(i + 1) % len(dv)]
            e = sub(w, u)
            n = (e[1], -e[0])  # outward normal
            n2 = dot(n, n)
            for p in (a, b):
                slack = dot(n, u) - dot(n, p)  # >= 0 when p inside
                if slack < 0 or slack * slack < r2 * n2:
                    return False
        return True


class PWLConvexFunction:
    """Lower convex hull of lifted samples, with exact rational data."""

    def __init__(self, samples, facets, gradient_clip=None, eval_planes=None):
        self.samples: tuple[Sample, ...] = tuple(samples)
        self.facets: tuple[Facet, ...] = tuple(facets)
        pts = [p for p, _ in self.samples]
        self.domain = ConvexPolygon.from_points(pts)
        if gradient_clip is None:
            gradient_clip = ConvexPolygon.from_points([f.gradient for f in self.facets])
        self.gradient_clip: ConvexPolygon = gradient_clip
        # planes used for evaluation; facet planes unless overridden
        self._planes = tuple(eval_planes) if eval_planes is not None else tuple(
            (f.gradient, f.offset) for f in self.facets
        )

    # -- basic queries ---------------------------------------------------

    def point(self, i: int) -> Pt:
        return self.samples[i][0]

    def sample_value(self, i: int) -> Fraction:
        return self.samples[i][1]

    @cached_property
    def facet_polygons(self) -> tuple[ConvexPolygon, ...]:
        return tuple(
            ConvexPolygon(tuple(self.point(i) for i in f.corners)) for f in self.facets
        )

    @cached_property
    def complex_vertex_ids(self) -> tuple[int, ...]:
        seen: set[int] = set()
        for f in self.facets:
            seen.update(f.corners)
        return tuple(sorted(seen))

    @cached_property
    def hull_sample_ids(self) -> tuple[int, ...]:
        """Samples interpolated exactly by the hull (value == max of planes)."""
        out = []
        for i, (p, v) in enumerate(self.samples):
            if v == self.value(p):
                out.append(i)
        return tuple(out)

    def in_domain(self, p: Pt) -> bool:
        return self.domain.contains(p)

    def on_boundary(self, p: Pt) -> bool:
        v = self.domain.vertices
        if len(v) < 3:
            return self.domain.contains(p)
        for i in range(len(v)):
            if orient(v[i], v[(i + 1) % len(v)], p) == 0:
                a, b = v[i], v[(i + 1) % len(v)]
                if point_seg_dist_sq(p, a, b) == 0:
                    return True
        return False

    @cached_property
    def _float_planes(self):
        import numpy as np

        arr = np.array([[float(g[0]), float(g[1]), float(b)]
                        for g, b in self._planes])
        return arr

    def value(self, p: Pt) -> Fraction:
        """Exact function value; the hull equals the max of its facet planes.

        Large plane sets go through a float prefilter whose error margin is
        far below the candidate cut, so the result stays exact.
        """
        if not self.in_domain(p):
            raise OutOfDomainError(f"{p} outside domain")
        if len(self._planes) > 64:
            import numpy as np

            arr = self._float_planes
            vals = arr[:, 0] * float(p[0]) + arr[:, 1] * float(p[1]) + arr[:, 2]
            top = float(vals.max())
            cut = top - 1e-6 * (1.0 + abs(top))
            cand = np.nonzero(vals >= cut)[0]
            return max(dot(self._planes[int(k)][0], p) + self._planes[int(k)][1]
                       for k in cand)
        return max(dot(g, p) + b for g, b in self._planes)

    def facet_at(self, p: Pt) -> int:
        """Index of a facet whose closed polygon contains p."""
        if not self.in_domain(p):
            raise OutOfDomainError(f"{p} outside domain")
        best, val = None, None
        for k, f in enumerate(self.facets):
            v = dot(f.gradient, p) + f.offset
            if val is None or v > val:
                best, val = k, v
        return best

    # -- incidence -------------------------------------------------------

    @cached_property
    def _vertex_incidence(self) -> dict[int, tuple[int, ...]]:
        """complex vertex id -> facets whose closed polygon contains it.

        Containment (not corner membership) so T-vertices on a long facet
        edge pick up that facet too.
        """
        polys = self.facet_polygons
        boxes = [poly.bbox() for poly in polys]
        out: dict[int, list[int]] = {i: [] for i in self.complex_vertex_ids}
        for vid in self.complex_vertex_ids:
            p = self.point(vid)
            for k, poly in enumerate(polys):
                x0, y0, x1, y1 = boxes[k]
                if p[0] < x0 or p[0] > x1 or p[1] < y0 or p[1] > y1:
                    continue
                if poly.contains(p):
                    out[vid].append(k)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def edge_adjacency(self) -> dict[tuple[int, int], tuple[Pt, Pt]]:
        """(facet i, facet j) with i<j -> shared boundary segment endpoints."""
        polys = self.facet_polygons
        boxes = [p.bbox() for p in polys]
        out = {}
        n = len(polys)
        for i in range(n):
            xi0, yi0, xi1, yi1 = boxes[i]
            for j in range(i + 1, n):
                xj0, yj0, xj1, yj1 = boxes[j]
                if xj0 > xi1 or xi0 > xj1 or yj0 > yi1 or yi0 > yj1:
                    continue
                inter = polys[i].intersect(polys[j])
                if inter.is_segment():
                    out[(i, j)] = (inter.vertices[0], inter.vertices[1])
        return out

    # -- subdifferentials ------------------------------------------------

    def subdifferential(self, x: Pt) -> ConvexPolygon:
        """Exact subgradient set at x, intersected with the gradient hull."""
        poly, _ = self.subdifferential_flagged(x)
        return poly

    def subdifferential_flagged(self, x: Pt) -> tuple[ConvexPolygon, bool]:
        if not self.in_domain(x):
            raise OutOfDomainError(f"{x} outside domain")
        boundary = self.on_boundary(x)
        fx = self.value(x)
        poly = self.gradient_clip
        for vid in self.complex_vertex_ids:
            v = self.point(vid)
            if v == x:
                continue
            n = sub(v, x)
            poly = poly.clip_halfplane(n, self.sample_value(vid) - fx)
            if poly.is_empty():
                break
        return poly, boundary

    def vertex_cell(self, vid: int) -> ConvexPolygon:
        """Subdifferential at a complex vertex (fast path when interior)."""
        p = self.point(vid)
        if not self.on_boundary(p):
            grads = [self.facets[k].gradient for k in self._vertex_incidence[vid]]
            return ConvexPolygon.from_points(grads)
        return self.subdifferential(p)

    def is_subgradient(self, x: Pt, z: Pt) -> bool:
        """Exact test z in subdifferential at x via the Fenchel identity."""
        fx = self.value(x)
        fstar = max(dot(self.point(i), z) - self.sample_value(i)
                    for i in self.complex_vertex_ids)
        return fx + fstar == dot(x, z)

    def conjugate_value(self, z: Pt) -> Fraction:
        """Exact Legendre transform value sup_x (x.z - f(x))."""
        return max(dot(self.point(i), z) - self.sample_value(i)
                   for i in self.complex_vertex_ids)

    def subdifferential_image(self, region) -> list[ConvexPolygon]:
        """Union (as an overlapping polygon list) of subdifferentials over
        a point set, polygon, or Region."""
        if isinstance(region, (list, tuple)) and region and isinstance(region[0], tuple):
            return [self.subdifferential(p) for p in region]
        if isinstance(region, ConvexPolygon):
            region = Region.from_polygon(region)
        if not region.inside_polygon(self.domain):
            raise OutOfDomainError("region leaves the domain")
        cells: list[ConvexPolygon] = []
        meets = []
        for k, poly in enumerate(self.facet_polygons):
            if region.meets_polygon(poly):
                meets.append(k)
                cells.append(ConvexPolygon((self.facets[k].gradient,)))
        meets_set = set(meets)
        for (i, j), (a, b) in self.edge_adjacency.items():
            if i in meets_set and j in meets_set:
                seg = ConvexPolygon.from_points([a, b])
                if region.meets_polygon(seg):
                    cells.append(ConvexPolygon.from_points(
                        [self.facets[i].gradient, self.facets[j].gradient]))
        for vid in self.complex_vertex_ids:
            if region.contains_point(self.point(vid)):
                cells.append(self.vertex_cell(vid))
        return cells

    def diam_subdifferential_sq(self, region) -> Fraction:
        """Exact squared diameter of the subdifferential image of a region."""
        pts: set[Pt] = set()
        if isinstance(region, ConvexPolygon):
            region = Region.from_polygon(region)
        if not region.inside_polygon(self.domain):
            raise OutOfDomainError("region leaves the domain")
        for k, poly in enumerate(self.facet_polygons):
            if region.meets_polygon(poly):
                pts.add(self.facets[k].gradient)
        for vid in self.complex_vertex_ids:
            if region.contains_point(self.point(vid)):
                pts.update(self.vertex_cell(vid).vertices)
        pl = sorted(pts)
        if len(pl) <= 1:
            return Fraction(0)
        hull = convex_hull(pl)
        return max(dist_sq(a, b) for i, a in enumerate(hull) for b in hull[i + 1:])

    def diam_subdifferential(self, region) -> float:
        d2 = self.diam_subdifferential_sq(region)
        r = rat_sqrt_or_float(d2)
        return float(r)

    # -- restriction to a segment ----------------------------------------

    def segment_profile(self, a: Pt, b: Pt) -> list[tuple[Fraction, Fraction]]:
        """Breakpoints (t, f(a + t (b-a))) of the function on [a, b], t in [0,1].

        Computed as the exact upper envelope of the facet planes restricted
        to the segment.
        """
        if not (self.in_domain(a) and self.in_domain(b)):
            raise OutOfDomainError("segment endpoint outside domain")
        lines = {}
        for g, beta in self._planes:
            alpha = dot(g, a) + beta           # value at t=0
            slope = dot(g, sub(b, a))          # d/dt
            cur = lines.get(slope)
            if cur is None or alpha > cur:
                lines[slope] = alpha
        # upper envelope of v = alpha + slope * t over t in [0,1]
        ordered = sorted(lines.items())        # by slope
        stack: list[tuple[Fraction, Fraction]] = []  # (slope, alpha)
        for s, al in ordered:
            while stack:
                s0, a0 = stack[-1]
                if len(stack) == 1:
                    # keep both lines unless dominated on [0,1] entirely
                    break
                s1, a1 = stack[-2]
                # intersection of (s1,a1) and (s0,a0) must stay left of
                # intersection of (s1,a1) and (s,al), else (s0,a0) is hidden
                t10 = (a0 - a1) / (s1 - s0)
                t1n = (al - a1) / (s1 - s)
                if t10 >= t1n:
                    stack.pop()
                else:
                    break
            stack.append((s, al))
        # breakpoints within [0,1]
        ts = [Fraction(0), Fraction(1)]
        for (s0, a0), (s1, a1) in zip(stack, stack[1:]):
            t = (a0 - a1) / (s1 - s0)
            if 0 < t < 1:
                ts.append(t)
        ts = sorted(set(ts))
        out = []
        for t in ts:
            val = max(al + s * t for s, al in stack)
            out.append((t, val))
        return out

    # -- Legendre transform ----------------------------------------------

    def legendre(self) -> "PWLConvexFunction":
        """Exact conjugate on the hull of the facet gradients.

        Facets of the conjugate are the vertex cells of this function; its
        samples are all facet gradients and vertex-cell corners, with exact
        values sup_x (x.z - f(x)).
        """
        cells: list[tuple[int, ConvexPolygon]] = []
        zpoints: set[Pt] = set(f.gradient for f in self.facets)
        for vid in self.complex_vertex_ids:
            cell = self.vertex_cell(vid)
            cells.append((vid, cell))
            zpoints.update(cell.vertices)
        zlist = sorted(zpoints)
        zindex = {z: i for i, z in enumerate(zlist)}
        samples = [(z, self.conjugate_value(z)) for z in zlist]
        facets = []
        for vid, cell in cells:
            if cell.area2() <= 0:
                continue
            v = self.point(vid)
            facets.append(Facet(
                corners=tuple(zindex[z] for z in cell.vertices),
                gradient=v,
                offset=-self.sample_value(vid),
            ))
        clip = ConvexPolygon.from_points([self.point(i) for i in self.complex_vertex_ids])
        planes = tuple(
            ((self.point(i)), -self.sample_value(i)) for i in self.complex_vertex_ids
        )
        return PWLConvexFunction(samples, facets, gradient_clip=clip, eval_planes=planes)

    # -- transforms --------------------------------------------------------

    def affine_shift(self, g: Pt, c: Fraction) -> "PWLConvexFunction":
        """Return f - (g . x + c); facet geometry is unchanged."""
        samples = [(p, v - dot(g, p) - c) for p, v in self.samples]
        facets = [Facet(f.corners, sub(f.gradient, g), f.offset - c) for f in self.facets]
        return PWLConvexFunction(samples, facets)

    def rigid_transform(self, rot: tuple[Pt, Pt], shift: Pt) -> "PWLConvexFunction":
        """Apply x -> R (x + shift) with an exact rotation/reflection matrix R
        given as rows; gradients transform by the same R."""
        r0, r1 = rot

        def mapped(p: Pt) -> Pt:
            q = (p[0] + shift[0], p[1] + shift[1])
            return (dot(r0, q), dot(r1, q))

        def mapped_grad(g: Pt) -> Pt:
            return (dot(r0, g), dot(r1, g))

        samples = [(mapped(p), v) for p, v in self.samples]
        facets = []
        for f in self.facets:
            g2 = mapped_grad(f.gradient)
            p0 = mapped(self.point(f.corners[0]))
            v0 = self.sample_value(f.corners[0])
            beta = v0 - dot(g2, p0)
            corners = f.corners
            # a reflection flips orientation; re-orient CCW
            pts = [mapped(self.point(i)) for i in corners]
            if len(pts) >= 3 and orient(pts[0], pts[1], pts[2]) < 0:
                corners = tuple(reversed(corners))
            facets.append(Facet(corners, g2, beta))
        return PWLConvexFunction(samples, facets)

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "samples": [[fmt_rat(p[0]), fmt_rat(p[1]), fmt_rat(v)] for p, v in self.samples],
            "facets": [list(f.corners) for f in self.facets],
            "gradients": [[fmt_rat(f.gradient[0]), fmt_rat(f.gradient[1])] for f in self.facets],
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "PWLConvexFunction":
        samples = [((parse_rat(x), parse_rat(y)), parse_rat(v)) for x, y, v in doc["samples"]]
        facets = []
        for corners, grad in zip(doc["facets"], doc["gradients"]):
            g = (parse_rat(grad[0]), parse_rat(grad[1]))
            p0, v0 = samples[corners[0]]
            facets.append(Facet(tuple(corners), g, v0 - dot(g, p0)))
        return PWLConvexFunction(samples, facets)

    def validate(self) -> None:
        """Exhaustive lower-hull and subgradient certificates (exact)."""
        for f in self.facets:
            g, b = f.gradient, f.offset
            for p, v in self.samples:
                assert v >= dot(g, p) + b, "lower-hull certificate failed"
            for i in f.corners:
                p, v = self.samples[i]
                assert v == dot(g, p) + b, "facet corner not interpolated"


def build_pwl(samples) -> PWLConvexFunction:
    """Largest convex function below the samples (exact lower hull).

    samples: iterable of ((x, y), value) with rational-coercible entries.
    Raises AllCollinearError / DuplicatePointError on degenerate input.
    """
    norm: list[Sample] = []
    seen = set()
    for p, v in samples:
        q = ((as_rat(p[0]), as_rat(p[1])), as_rat(v))
        if (q[0], q[1]) in seen:
            continue
        seen.add((q[0], q[1]))
        norm.append(q)
    lifted = [(p[0], p[1], v) for p, v in norm]
    raw = hull3d.lower_hull(lifted)
    facets = [Facet(corners, g, beta) for corners, g, beta in raw]
    return PWLConvexFunction(norm, facets)


def quadratic_grid_samples(half_width, spacing, scale=Fraction(1, 2)) -> list[Sample]:
    """Samples of scale*|x|^2 on a square grid, handy in tests and scenarios."""
    h = as_rat(spacing)
    w = as_rat(half_width)
    s = as_rat(scale)
    n = int(w / h)
    out = []
    for i in range(-n, n + 1):
        for j in range(-n, n + 1):
            p = (i * h, j * h)
            out.append((p, s * (p[0] * p[0] + p[1] * p[1])))
    return out
