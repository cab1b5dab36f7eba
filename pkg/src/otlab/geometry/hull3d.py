"""Exact lower convex hulls of lifted planar samples.

The fast path triangulates with Qhull in floating point and then certifies
every candidate facet exactly (rational plane through its corners must
support all samples, and the facet shadows must tile the base hull).  When
certification fails the slow path enumerates supporting planes by brute
force; it is also what the tests use as an independent oracle.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..errors import AllCollinearError, DuplicatePointError, HullConstructionError
from .primitives import Pt, convex_hull, cross, orient, sub

Lifted = tuple[Fraction, Fraction, Fraction]

BRUTE_FORCE_LIMIT = 64


def plane_through(p: Lifted, q: Lifted, r: Lifted):
    """Exact plane v = gx*x + gy*y + beta through three lifted points.

    Returns None when the base points are collinear (vertical plane).
    """
    dx1, dy1, dv1 = q[0] - p[0], q[1] - p[1], q[2] - p[2]
    dx2, dy2, dv2 = r[0] - p[0], r[1] - p[1], r[2] - p[2]
    det = dx1 * dy2 - dy1 * dx2
    if det == 0:
        return None
    gx = (dv1 * dy2 - dv2 * dy1) / det
    gy = (dx1 * dv2 - dx2 * dv1) / det
    beta = p[2] - gx * p[0] - gy * p[1]
    return gx, gy, beta


def check_input(points: list[Lifted]) -> None:
    seen: dict[Pt, Fraction] = {}
    for x, y, v in points:
        key = (x, y)
        if key in seen and seen[key] != v:
            raise DuplicatePointError(f"base point {key} carries values {seen[key]} and {v}")
        seen[key] = v
    base = list(seen)
    if len(base) < 3:
        raise AllCollinearError("need at least 3 distinct base points")
    a, b = base[0], base[1]
    if all(orient(a, b, c) == 0 for c in base[2:]):
        raise AllCollinearError("all base points lie on one line")


def lower_hull(points: list[Lifted]) -> list[tuple[tuple[int, ...], tuple[Fraction, Fraction], Fraction]]:
    """Facets of the lower hull as (corner indices CCW, gradient, offset).

    Coplanar lifted points are merged into a single polygonal facet, so
    adjacent facets always carry distinct gradients.
    """
    check_input(points)
    flat = _coplanar_facet(points)
    if flat is not None:
        return [flat]
    try:
        facets = _qhull_facets(points)
        if facets is not None:
            return facets
    except Exception:
        pass
    if len(points) > BRUTE_FORCE_LIMIT:
        raise HullConstructionError(
            "float-assisted hull failed exact certification and the input is "
            "too large for brute-force enumeration; rescale the data"
        )
    return brute_force_lower_hull(points)


def _coplanar_facet(points):
    """Single merged facet when every lifted sample shares one plane."""
    n = len(points)
    plane = None
    for j in range(1, n):
        for k in range(j + 1, n):
            plane = plane_through(points[0], points[j], points[k])
            if plane is not None:
                break
        if plane is not None:
            break
    if plane is None:
        raise AllCollinearError("all base points lie on one line")
    gx, gy, beta = plane
    for x, y, v in points:
        if v != gx * x + gy * y + beta:
            return None
    return _merge_group(list(range(n)), points, (gx, gy), beta)


def _merge_group(idxs, points, gradient, beta):
    base = {(points[i][0], points[i][1]): i for i in idxs}
    hull = convex_hull(list(base))
    if len(hull) < 3:
        return None
    return tuple(base[p] for p in hull), gradient, beta


def _qhull_facets(points):
    from scipy.spatial import ConvexHull

    arr = np.array([[float(x), float(y), float(v)] for x, y, v in points], dtype=float)
    if not np.all(np.isfinite(arr)):
        return None
    hull = ConvexHull(arr, qhull_options="Qt")
    down = hull.equations[:, 2] < 1e-9
    tris = [tuple(int(t) for t in s) for s, d in zip(hull.simplices, down) if d]

    planes: dict[tuple, list[int]] = {}
    for tri in tris:
        i, j, k = tri
        pl = plane_through(points[i], points[j], points[k])
        if pl is None:
            continue  # vertical sliver
        planes.setdefault(pl, []).extend(tri)
    # drop float-noise candidates that are not exactly supporting
    planes = {pl: idxs for pl, idxs in planes.items()
              if _is_supporting(points, pl)}
    if not planes:
        return None

    facets = []
    shadow2 = Fraction(0)
    for (gx, gy, beta), idxs in planes.items():
        merged = _merge_group(sorted(set(idxs)), points, (gx, gy), beta)
        if merged is None:
            return None
        facets.append(merged)
        shadow2 += _poly_area2([points[i][:2] for i in merged[0]])
    base_hull = convex_hull([(x, y) for x, y, _ in points])
    if shadow2 != _poly_area2(base_hull):
        return None  # gaps or overlaps: topology was wrong
    facets.sort(key=lambda f: f[0])
    return facets


def _poly_area2(verts) -> Fraction:
    s = Fraction(0)
    for i in range(len(verts)):
        s += cross(verts[i], verts[(i + 1) % len(verts)])
    return s


_FLOAT_CACHE: dict[int, tuple] = {}


def _is_supporting(points, plane) -> bool:
    """Does the plane lie (weakly) below every sample?  Float-filtered with
    exact rechecks near ties, so the answer is exact."""
    key = id(points)
    cached = _FLOAT_CACHE.get(key)
    if cached is None or cached[0] is not points:
        xs = np.array([float(p[0]) for p in points])
        ys = np.array([float(p[1]) for p in points])
        vs = np.array([float(p[2]) for p in points])
        mag = np.abs(vs) + np.abs(xs) + np.abs(ys) + 1.0
        cached = (points, xs, ys, vs, mag)
        _FLOAT_CACHE.clear()
        _FLOAT_CACHE[key] = cached
    _, xs, ys, vs, mag = cached
    gx, gy, beta = plane
    fgx, fgy, fb = float(gx), float(gy), float(beta)
    res = vs - (fgx * xs + fgy * ys + fb)
    tol = 1e-12 * (mag * (abs(fgx) + abs(fgy) + abs(fb) + 1.0))
    if np.all(res > tol):
        return True
    for i in np.nonzero(res <= tol)[0]:
        x, y, v = points[int(i)]
        if v < gx * x + gy * y + beta:
            return False
    return True


def brute_force_lower_hull(points):
    """Enumerate all supporting planes through sample triples (exact).

    Quadratic-to-quartic cost; serves as the oracle for the fast path and
    as the fallback for small awkward inputs.
    """
    n = len(points)
    planes = {}
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                pl = plane_through(points[i], points[j], points[k])
                if pl is None or pl in planes:
                    continue
                gx, gy, beta = pl
                ok = True
                for x, y, v in points:
                    if v < gx * x + gy * y + beta:
                        ok = False
                        break
                if ok:
                    planes[pl] = True
    facets = []
    shadow2 = Fraction(0)
    for gx, gy, beta in planes:
        on = [i for i, (x, y, v) in enumerate(points) if v == gx * x + gy * y + beta]
        merged = _merge_group(on, points, (gx, gy), beta)
        if merged is None:
            continue
        facets.append(merged)
        shadow2 += _poly_area2([points[i][:2] for i in merged[0]])
    base_hull = convex_hull([(x, y) for x, y, _ in points])
    if not facets or shadow2 != _poly_area2(base_hull):
        raise HullConstructionError("brute-force hull failed the tiling certificate")
    facets.sort(key=lambda f: f[0])
    return facets
