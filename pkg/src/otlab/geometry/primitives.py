"""Exact planar primitives over rational coordinates.

Points are pairs of fractions.Fraction; every predicate here is exact
(sign of an integer-free rational determinant), so hull construction and
subgradient certificates never depend on floating-point rounding.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

Rat = Fraction
Pt = tuple[Fraction, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


def as_rat(x) -> Fraction:
    """Coerce ints, strings like '3/4', floats and Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


def pt(x, y) -> Pt:
    return (as_rat(x), as_rat(y))


def sub(a: Pt, b: Pt) -> Pt:
    return (a[0] - b[0], a[1] - b[1])


def add(a: Pt, b: Pt) -> Pt:
    return (a[0] + b[0], a[1] + b[1])


def scale(a: Pt, t: Fraction) -> Pt:
    return (a[0] * t, a[1] * t)


def dot(a: Pt, b: Pt) -> Fraction:
    return a[0] * b[0] + a[1] * b[1]


def cross(a: Pt, b: Pt) -> Fraction:
    return a[0] * b[1] - a[1] * b[0]


def dist_sq(a: Pt, b: Pt) -> Fraction:
    dx, dy = a[0] - b[0], a[1] - b[1]
    return dx * dx + dy * dy


def orient(a: Pt, b: Pt, c: Pt) -> int:
    """Sign of the signed area of triangle abc (+1 = counterclockwise)."""
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def convex_hull(points: Iterable[Pt]) -> list[Pt]:
    """Counterclockwise hull via monotone chain; collinear inputs give a
    deduplicated segment (2 points) or a single point."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list[Pt] = []
    for p in pts:
        while len(lower) >= 2 and orient(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Pt] = []
    for p in reversed(pts):
        while len(upper) >= 2 and orient(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:  # all collinear
        return [pts[0], pts[-1]]
    return hull


def point_seg_dist_sq(p: Pt, a: Pt, b: Pt) -> Fraction:
    """Exact squared distance from p to segment [a, b]."""
    ab = sub(b, a)
    den = dot(ab, ab)
    if den == 0:
        return dist_sq(p, a)
    t = dot(sub(p, a), ab) / den
    if t <= 0:
        return dist_sq(p, a)
    if t >= 1:
        return dist_sq(p, b)
    proj = add(a, scale(ab, t))
    return dist_sq(p, proj)


def segments_intersect(a: Pt, b: Pt, c: Pt, d: Pt) -> bool:
    """Closed-segment intersection test (exact, handles collinear overlap)."""
    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True

    def on_seg(p, q, r):  # r collinear with pq: is r within the box?
        return (min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
                and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))

    if o1 == 0 and on_seg(a, b, c):
        return True
    if o2 == 0 and on_seg(a, b, d):
        return True
    if o3 == 0 and on_seg(c, d, a):
        return True
    if o4 == 0 and on_seg(c, d, b):
        return True
    return False


def seg_seg_dist_sq(a: Pt, b: Pt, c: Pt, d: Pt) -> Fraction:
    if segments_intersect(a, b, c, d):
        return ZERO
    return min(
        point_seg_dist_sq(a, c, d),
        point_seg_dist_sq(b, c, d),
        point_seg_dist_sq(c, a, b),
        point_seg_dist_sq(d, a, b),
    )


def rat_sqrt_or_float(x: Fraction):
    """Exact Fraction square root when one exists, else math.sqrt."""
    if x < 0:
        raise ValueError("negative radicand")
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return math.sqrt(n / d)


def lcm_denominators(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = out * v.denominator // math.gcd(out, v.denominator)
    return out


def fmt_rat(x: Fraction) -> str:
    """Serialize a rational as 'p/q' (or 'p' when integral)."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_rat(s) -> Fraction:
    if isinstance(s, str):
        return Fraction(s)
    return as_rat(s)
