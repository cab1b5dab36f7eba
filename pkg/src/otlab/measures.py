"""Discrete planar measures, lattice generators, and scale-regularity checks.

A measure is regular at scale h when every rectangle with both sides >= h
inside the domain carries enough mass (lower side, mu(R) >= |R|/lambda) or
not too much mass (upper side, nu(R) <= lambda |R|).  Axis-aligned
rectangles are checked exactly over the finite critical family whose edges
pass through atom coordinates offset by an exact half-step; other
orientations are sampled on a configurable angle grid, not exhaustively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Optional

import numpy as np

from .errors import InvalidScaleError
from .geometry.primitives import Pt, as_rat, fmt_rat, parse_rat

Side = Literal["lower", "upper"]


@dataclass(frozen=True)
class Rect:
    """Rectangle with rational center/half-widths; orientation is k*pi/n."""

    center: Pt
    half_width: Fraction
    half_height: Fraction
    angle_num: int = 0
    angle_den: int = 1

    def __post_init__(self):
        if self.half_width <= 0 or self.half_height <= 0:
            raise ValueError("rectangle half-widths must be positive")

    @property
    def angle(self) -> float:
        return math.pi * self.angle_num / self.angle_den

    def is_axis_aligned(self) -> bool:
        return self.angle_num % self.angle_den == 0 or \
            (2 * self.angle_num) % self.angle_den == 0

    def bounds(self):
        """(xmin, ymin, xmax, ymax); exact for axis-aligned rectangles."""
        cx, cy = self.center
        if self.angle_num % self.angle_den == 0:
            hw, hh = self.half_width, self.half_height
        elif (2 * self.angle_num) % self.angle_den == 0:
            hw, hh = self.half_height, self.half_width
        else:
            raise ValueError("bounds of a rotated rectangle are not rational")
        return (cx - hw, cy - hh, cx + hw, cy + hh)

    def contains(self, p: Pt) -> bool:
        """Closed containment; exact when axis-aligned."""
        cx, cy = self.center
        if self.is_axis_aligned():
            x0, y0, x1, y1 = self.bounds()
            return x0 <= p[0] <= x1 and y0 <= p[1] <= y1
        c, s = math.cos(self.angle), math.sin(self.angle)
        dx, dy = float(p[0] - cx), float(p[1] - cy)
        u = c * dx + s * dy
        v = -s * dx + c * dy
        return abs(u) <= float(self.half_width) + 1e-12 and \
            abs(v) <= float(self.half_height) + 1e-12

    def area(self) -> Fraction:
        return 4 * self.half_width * self.half_height

    def to_json_dict(self) -> dict:
        return {
            "center": [fmt_rat(self.center[0]), fmt_rat(self.center[1])],
            "half_width": fmt_rat(self.half_width),
            "half_height": fmt_rat(self.half_height),
            "angle": [self.angle_num, self.angle_den],
        }

    @staticmethod
    def from_json_dict(doc) -> "Rect":
        return Rect(
            (parse_rat(doc["center"][0]), parse_rat(doc["center"][1])),
            parse_rat(doc["half_width"]),
            parse_rat(doc["half_height"]),
            doc.get("angle", [0, 1])[0],
            doc.get("angle", [0, 1])[1],
        )


def rect_from_bounds(x0, y0, x1, y1) -> Rect:
    x0, y0, x1, y1 = as_rat(x0), as_rat(y0), as_rat(x1), as_rat(y1)
    return Rect(((x0 + x1) / 2, (y0 + y1) / 2), (x1 - x0) / 2, (y1 - y0) / 2)


@dataclass
class WeightedPointCloud:
    """Finite nonnegative discrete measure: distinct atoms with positive mass."""

    atoms: list[tuple[Pt, Fraction]]

    def __post_init__(self):
        seen = set()
        for p, m in self.atoms:
            if m <= 0:
                raise ValueError(f"atom {p} has non-positive mass {m}")
            if p in seen:
                raise ValueError(f"duplicate atom {p}")
            seen.add(p)

    def __len__(self):
        return len(self.atoms)

    @property
    def points(self) -> list[Pt]:
        return [p for p, _ in self.atoms]

    @property
    def masses(self) -> list[Fraction]:
        return [m for _, m in self.atoms]

    def total_mass(self) -> Fraction:
        return sum(self.masses, Fraction(0))

    def to_json_dict(self) -> dict:
        return {"atoms": [[fmt_rat(p[0]), fmt_rat(p[1]), fmt_rat(m)]
                          for p, m in self.atoms]}

    @staticmethod
    def from_json_dict(doc) -> "WeightedPointCloud":
        return WeightedPointCloud(
            [((parse_rat(x), parse_rat(y)), parse_rat(m)) for x, y, m in doc["atoms"]]
        )


def cloud(points_masses) -> WeightedPointCloud:
    return WeightedPointCloud(
        [((as_rat(x), as_rat(y)), as_rat(m)) for (x, y), m in points_masses]
    )


def rect_mass(m: WeightedPointCloud, r: Rect) -> Fraction:
    """Total mass inside the closed rectangle (exact for axis-aligned)."""
    return sum((mass for p, mass in m.atoms if r.contains(p)), Fraction(0))


def make_lattice(bbox: Rect, spacing, mass_per_point) -> WeightedPointCloud:
    """Axis-aligned grid with step `spacing` covering bbox, centered so a
    degenerate (single row/column) grid sits on the bbox center line."""
    h = as_rat(spacing)
    if h <= 0:
        raise InvalidScaleError("spacing must be positive")
    mass = as_rat(mass_per_point)
    x0, y0, x1, y1 = bbox.bounds()

    def coords(lo, hi):
        span = hi - lo
        n = int(span / h)
        start = lo + (span - n * h) / 2
        return [start + k * h for k in range(n + 1)]

    atoms = [((x, y), mass) for x in coords(x0, x1) for y in coords(y0, y1)]
    return WeightedPointCloud(atoms)


@dataclass
class RegularityCertificate:
    side: Side
    scale: Fraction
    density_constant: Fraction
    domain: Rect
    holds: bool
    witness: Optional[Rect] = None
    angle_grid: int = 1

    def to_json_dict(self) -> dict:
        doc = {
            "side": self.side,
            "scale": fmt_rat(self.scale),
            "density_constant": fmt_rat(self.density_constant),
            "domain": self.domain.to_json_dict(),
            "holds": self.holds,
            "angle_grid": self.angle_grid,
        }
        if self.witness is not None:
            doc["witness"] = self.witness.to_json_dict()
        return doc


def check_regularity(m: WeightedPointCloud, domain: Rect, h, lam,
                     side: Side = "lower", angle_grid: int = 1) -> RegularityCertificate:
    """Check mu(R) >= |R|/lam (lower) or mu(R) <= lam |R| (upper) over all
    rectangles with both sides >= h inside the domain.

    Axis-aligned rectangles are exact via the critical family; rotated
    orientations k*pi/angle_grid are a sampled approximation.
    """
    h = as_rat(h)
    lam = as_rat(lam)
    if h <= 0:
        raise InvalidScaleError("scale h must be positive")
    if lam <= 0:
        raise InvalidScaleError("density constant must be positive")

    witness = _axis_sweep(m, domain, h, lam, side)
    if witness is None and angle_grid > 1:
        witness = _rotated_sweep(m, domain, h, lam, side, angle_grid)
    return RegularityCertificate(
        side=side, scale=h, density_constant=lam, domain=domain,
        holds=witness is None, witness=witness, angle_grid=angle_grid,
    )


def _critical_coords(values: list[Fraction], lo: Fraction, hi: Fraction,
                     h: Fraction) -> list[Fraction]:
    """Candidate edge positions: atom coordinates offset by an exact
    half-step, clipped to the domain, plus the domain edges."""
    eps = h / 2
    cands = {lo, hi}
    if lo + h <= hi:
        cands.update((lo + h, hi - h))
    for v in values:
        for c in (v - eps, v, v + eps):
            if lo <= c <= hi:
                cands.add(c)
    return sorted(cands)


def _axis_sweep(m, domain, h, lam, side) -> Optional[Rect]:
    """Exact integer sweep over the critical axis-aligned family.

    For each admissible x-interval the y-search is a running-max scan, so
    the cost is O(nx^2 * ny) exact integer operations instead of O(n^4).
    """
    import bisect

    x0, y0, x1, y1 = domain.bounds()
    if x1 - x0 < h or y1 - y0 < h:
        return None  # no admissible rectangle fits
    inside = [(p, mass) for p, mass in m.atoms
              if x0 <= p[0] <= x1 and y0 <= p[1] <= y1]
    xs = _critical_coords(sorted({p[0] for p, _ in inside}), x0, x1, h)
    ys = _critical_coords(sorted({p[1] for p, _ in inside}), y0, y1, h)
    nx, ny = len(xs), len(ys)

    sm = _lcm([mass.denominator for _, mass in inside] or [1])
    dy = _lcm([c.denominator for c in ys] or [1])
    yi = [int(c * dy) for c in ys]
    lam_n, lam_d = lam.numerator, lam.denominator

    # per-column integer masses bucketed at y-coordinate slots
    cols: dict[int, list[int]] = {}
    for p, mass in inside:
        i = bisect.bisect_left(xs, p[0])
        cols.setdefault(i, [0] * ny)
        j = bisect.bisect_left(ys, p[1])
        cols[i][j] += int(mass * sm)

    lower = side == "lower"
    for ax in range(nx):
        acc = [0] * ny
        for bx in range(ax, nx):
            col = cols.get(bx)
            if col is not None:
                for j in range(ny):
                    acc[j] += col[j]
            w = xs[bx] - xs[ax]
            if w < h:
                continue
            # closed-interval mass in y: P[j] = sum of acc[0..j]
            # violation (lower): exists ay<=by, ys[by]-ys[ay]>=h with
            #   lam * mass < w * (ys[by]-ys[ay])
            # scale to integers: A[j] = lam_n*dy*w_d*sm_mass_terms ...
            wn, wd = w.numerator, w.denominator
            ca = lam_n * wd * dy   # multiplies mass integers
            cb = wn * lam_d * sm   # multiplies y integers
            if not lower:
                ca, cb = lam_n * wn * sm, lam_d * wd * dy
                # upper: mass > lam*w*dy  <->  cb*mass_int > ca*y_span ...
            P = 0
            pref = [0] * (ny + 1)
            for j in range(ny):
                P += acc[j]
                pref[j + 1] = P
            best = None
            best_idx = -1
            hit = None
            for by in range(ny):
                # extend candidate starts: ay with ys[by]-ys[ay] >= h
                ay = bisect.bisect_right(yi, math.floor((ys[by] - h) * dy)) - 1
                while best_idx < ay:
                    best_idx += 1
                    if lower:
                        cand = ca * pref[best_idx] - cb * yi[best_idx]
                        if best is None or cand > best[0]:
                            best = (cand, best_idx)
                    else:
                        cand = cb * pref[best_idx] - ca * yi[best_idx]
                        if best is None or cand < best[0]:
                            best = (cand, best_idx)
                if best is None:
                    continue
                if lower:
                    # lam*(P[by]-P[ay-1]) < w*(ys[by]-ys[ay])
                    val = ca * pref[by + 1] - cb * yi[by]
                    if val < best[0]:
                        ay0 = best[1]
                        hit = (ay0, by)
                        break
                else:
                    val = cb * pref[by + 1] - ca * yi[by]
                    if val > best[0]:
                        ay0 = best[1]
                        hit = (ay0, by)
                        break
            if hit is not None:
                ay0, by0 = hit
                return rect_from_bounds(xs[ax], ys[ay0], xs[bx], ys[by0])
    return None


def _lcm(dens) -> int:
    out = 1
    for d in dens:
        out = out * d // math.gcd(out, d)
    return out


def _rotated_sweep(m, domain, h, lam, side, angle_grid) -> Optional[Rect]:
    """Sampled sweep in rotated frames (float arithmetic, documented as
    approximate).  The rotated rectangle must fit inside the domain."""
    x0, y0, x1, y1 = (float(v) for v in domain.bounds())
    pts = np.array([[float(p[0]), float(p[1])] for p, _ in m.atoms])
    mass = np.array([float(mm) for _, mm in m.atoms])
    hf, lamf = float(h), float(lam)
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    for k in range(1, angle_grid):
        th = math.pi * k / angle_grid
        c, s = math.cos(th), math.sin(th)
        rot = np.array([[c, s], [-s, c]])
        q = pts @ rot.T
        dom_q = corners @ rot.T
        witness = _axis_sweep_float(q, mass, dom_q, hf, lamf, side, corners, rot)
        if witness is not None:
            cx, cy = witness[0]
            return Rect((as_rat(cx), as_rat(cy)), as_rat(witness[1]),
                        as_rat(witness[2]), k, angle_grid)
    return None


def _axis_sweep_float(q, mass, dom_q, h, lam, side, corners, rot):
    """Axis-aligned sweep in the rotated frame; returns (center, hw, hh)."""
    if len(q) == 0:
        return None
    tol = 1e-9

    def coords(vals, lo, hi):
        cs = {lo, hi}
        for v in vals:
            for c in (v - h / 2, v, v + h / 2):
                if lo - tol <= c <= hi + tol:
                    cs.add(min(max(c, lo), hi))
        return sorted(cs)

    # conservative inner box of the rotated domain polygon
    lo_x, hi_x = dom_q[:, 0].min(), dom_q[:, 0].max()
    lo_y, hi_y = dom_q[:, 1].min(), dom_q[:, 1].max()
    xs = coords(sorted(set(np.round(q[:, 0], 12))), lo_x, hi_x)
    ys = coords(sorted(set(np.round(q[:, 1], 12))), lo_y, hi_y)

    def inside_domain(cs):
        # convex quad containment via cross products (float, small slack)
        for i in range(4):
            a, b = dom_q[i], dom_q[(i + 1) % 4]
            e = b - a
            if np.any((cs[:, 0] - a[0]) * e[1] - (cs[:, 1] - a[1]) * e[0] > 1e-9):
                return False
        return True
    for ax in range(len(xs)):
        for bx in range(ax, len(xs)):
            w = xs[bx] - xs[ax]
            if w < h - tol:
                continue
            selx = (q[:, 0] >= xs[ax] - tol) & (q[:, 0] <= xs[bx] + tol)
            for ay in range(len(ys)):
                for by in range(ay, len(ys)):
                    ht = ys[by] - ys[ay]
                    if ht < h - tol:
                        continue
                    cs = np.array([[xs[ax], ys[ay]], [xs[bx], ys[ay]],
                                   [xs[bx], ys[by]], [xs[ax], ys[by]]])
                    if not inside_domain(cs):
                        continue
                    got = mass[selx & (q[:, 1] >= ys[ay] - tol)
                               & (q[:, 1] <= ys[by] + tol)].sum()
                    area = w * ht
                    bad = got < area / lam - tol if side == "lower" \
                        else got > lam * area + tol
                    if bad:
                        center_rot = np.array([(xs[ax] + xs[bx]) / 2,
                                               (ys[ay] + ys[by]) / 2])
                        center = rot.T @ center_rot
                        return (center, w / 2, ht / 2)
    return None
