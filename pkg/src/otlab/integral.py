"""The weighted displacement integral and its upper/lower envelope checks.

After a rigid normalization the probed segment lies on the horizontal
axis, the potential vanishes at both endpoints, and the zero vector is a
subgradient somewhere on the segment.  The integral weighs vertical
transport displacement |T_perp(y) - T_perp(x)| by (x_perp + gamma)^-2 over
the band x_perp/2 <= y_perp <= 2 x_perp inside the standing rectangle
[-ell/2, ell/2] x [0, delta].

For piecewise-linear potentials T_perp is constant per facet, so the
double integral reduces exactly to pairs of width profiles (piecewise
linear in height) against a rational weight; each piece integrates in
closed form.  A midpoint-grid evaluator doubles as the independent
quadrature oracle.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import NonPositiveGammaError, OutOfDomainError, PreconditionError
from .geometry.polygon import ConvexPolygon, rect_polygon
from .geometry.primitives import Pt, as_rat, dot, rat_sqrt_or_float, sub
from .geometry.pwl import PWLConvexFunction, Region
from .measures import Rect, WeightedPointCloud, rect_from_bounds
from .report import BoundParams, BoundReport


@dataclass
class FrameConfig:
    """Normalized frame: segment endpoints, half-length, band height."""

    a: Pt
    b: Pt
    ell: Fraction
    delta: Fraction
    gamma: float | None = None
    grid_resolution: int = 64
    exact_rotation: bool = True

    def standing_rect(self) -> ConvexPolygon:
        """Integration rectangle [-ell/2, ell/2] x [0, delta]."""
        return rect_polygon(Fraction(0), self.delta / 2,
                            self.ell / 2, self.delta / 2)

    def k_rect(self) -> ConvexPolygon:
        """Full-base rectangle [-ell, ell] x [0, delta] whose subdifferential
        image calibrates K (it contains the whole segment)."""
        return rect_polygon(Fraction(0), self.delta / 2, self.ell, self.delta / 2)

    def band(self, x_perp) -> ConvexPolygon:
        """Coupling band Omega_{x_perp} inside the standing rectangle."""
        x_perp = as_rat(x_perp)
        top = min(2 * x_perp, self.delta)
        return rect_polygon(Fraction(0), (x_perp / 2 + top) / 2,
                            self.ell / 2, (top - x_perp / 2) / 2)

    def inner_box(self, x_perp) -> ConvexPolygon:
        """Witness box Lambda_{x_perp} = [-ell/4, ell/4] x [x_perp, 3/2 x_perp]."""
        x_perp = as_rat(x_perp)
        return rect_polygon(Fraction(0), 5 * x_perp / 4,
                            self.ell / 4, x_perp / 4)


def _exact_rotation_to_x(d: Pt):
    """Rows of a rotation sending d to (|d|, 0) when |d| is rational."""
    n2 = d[0] * d[0] + d[1] * d[1]
    r = rat_sqrt_or_float(n2)
    if isinstance(r, Fraction):
        return ((d[0] / r, d[1] / r), (-d[1] / r, d[0] / r)), r
    return None, None


def _approx_rotation_to_x(d: Pt):
    """Rational rotation (half-angle parametrization) close to the exact one."""
    theta = math.atan2(float(d[1]), float(d[0]))
    t = Fraction(math.tan(theta / 2)).limit_denominator(1 << 24)
    den = 1 + t * t
    c, s = (1 - t * t) / den, 2 * t / den
    return ((c, s), (-s, c))


def normalize_frame(psi: PWLConvexFunction, x: Pt, y: Pt, delta):
    """Rigid motion to the standing frame plus exact affine normalization.

    Returns (psi_tilde, FrameConfig) with psi_tilde(a) = psi_tilde(b) = 0
    and the zero vector a subgradient somewhere on [a, b].  Rotations are
    exact when |x - y| is rational, otherwise a close rational rotation is
    used and flagged.
    """
    x = (as_rat(x[0]), as_rat(x[1]))
    y = (as_rat(y[0]), as_rat(y[1]))
    delta = as_rat(delta)
    d = sub(y, x)
    mid = ((x[0] + y[0]) / 2, (x[1] + y[1]) / 2)
    rot, _ = _exact_rotation_to_x(d)
    exact = rot is not None
    if rot is None:
        rot = _approx_rotation_to_x(d)
    shift = (-mid[0], -mid[1])
    f1 = psi.rigid_transform(rot, shift)
    r0, r1 = rot
    a = (dot(r0, sub(x, mid)), dot(r1, sub(x, mid)))
    b = (dot(r0, sub(y, mid)), dot(r1, sub(y, mid)))

    # affine subtraction: zero out both endpoint values
    va, vb = f1.value(a), f1.value(b)
    span = b[0] - a[0]
    slope = (vb - va) / span
    f2 = f1.affine_shift((slope, Fraction(0)), va - slope * a[0])

    # place the zero vector in the subdifferential along the segment
    prof = f2.segment_profile(a, b)
    vmin = min(v for _, v in prof)
    cands = [t for t, v in prof if v == vmin]
    if len(cands) == len(prof):
        tstar = Fraction(1, 2)
    else:
        tstar = min(cands, key=lambda t: abs(t - Fraction(1, 2)))
    p_star = (a[0] + tstar * (b[0] - a[0]), a[1] + tstar * (b[1] - a[1]))
    cell = f2.subdifferential(p_star)
    dseg = sub(b, a)
    line = cell.clip_halfplane(dseg, Fraction(0)).clip_halfplane(
        (-dseg[0], -dseg[1]), Fraction(0))
    if line.is_empty():
        raise OutOfDomainError("no flat subgradient at the segment minimizer")
    zs = line.vertices
    z_star = ((zs[0][0] + zs[-1][0]) / 2, (zs[0][1] + zs[-1][1]) / 2)
    f3 = f2.affine_shift(z_star, -dot(z_star, a))

    ell = (b[0] - a[0]) / 2
    cfg = FrameConfig(a=a, b=b, ell=ell, delta=delta, exact_rotation=exact)
    if not all(f3.in_domain(p) for p in cfg.standing_rect().vertices):
        flip = ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(-1)))
        f3f = f3.rigid_transform(flip, (Fraction(0), Fraction(0)))
        if all(f3f.in_domain(p) for p in cfg.standing_rect().vertices):
            f3 = f3f
        else:
            raise OutOfDomainError("standing rectangle leaves the domain")
    return f3, cfg


# -- width profiles ---------------------------------------------------------


def _slice_range(poly: ConvexPolygon, s: Fraction):
    verts = poly.vertices
    lo = hi = None
    m = len(verts)
    for i in range(m):
        p = verts[i]
        q = verts[(i + 1) % m] if m > 1 else p
        if p[1] == s:
            lo = p[0] if lo is None else min(lo, p[0])
            hi = p[0] if hi is None else max(hi, p[0])
        if m > 1 and (p[1] - s) * (q[1] - s) < 0:
            t = (s - p[1]) / (q[1] - p[1])
            xx = p[0] + t * (q[0] - p[0])
            lo = xx if lo is None else min(lo, xx)
            hi = xx if hi is None else max(hi, xx)
    if lo is None:
        return None
    return lo, hi


class WidthProfile:
    """Piecewise-linear width-in-height profile of a polygon family."""

    def __init__(self, bps: list[float], ws: list[float]):
        self.bps = bps
        self.ws = ws
        self.cum = [0.0]
        for k in range(len(bps) - 1):
            self.cum.append(self.cum[-1] + 0.5 * (ws[k] + ws[k + 1])
                            * (bps[k + 1] - bps[k]))

    @staticmethod
    def of_polygons(polys: list[ConvexPolygon]) -> "WidthProfile":
        bset = sorted({v[1] for poly in polys for v in poly.vertices})
        ws = []
        for s in bset:
            w = Fraction(0)
            for poly in polys:
                r = _slice_range(poly, s)
                if r is not None:
                    w += r[1] - r[0]
            ws.append(w)
        return WidthProfile([float(b) for b in bset], [float(w) for w in ws])

    def width(self, s: float) -> float:
        b, w = self.bps, self.ws
        if not b or s < b[0] or s > b[-1]:
            return 0.0
        if s == b[0]:
            return w[0]
        if s == b[-1]:
            return w[-1]
        k = bisect.bisect_right(b, s) - 1
        t = (s - b[k]) / (b[k + 1] - b[k])
        return w[k] + t * (w[k + 1] - w[k])

    def cumulative(self, s: float) -> float:
        b, w = self.bps, self.ws
        if not b or s <= b[0]:
            return 0.0
        if s >= b[-1]:
            return self.cum[-1]
        k = bisect.bisect_right(b, s) - 1
        ds = s - b[k]
        slope = (w[k + 1] - w[k]) / (b[k + 1] - b[k])
        return self.cum[k] + w[k] * ds + 0.5 * slope * ds * ds

    def local_quad(self, k: int):
        """Coefficients (q0, q1, q2) with W(u) = q0 + q1 u + q2 u^2 on piece k."""
        b, w = self.bps, self.ws
        slope = (w[k + 1] - w[k]) / (b[k + 1] - b[k])
        # W(u) = cum[k] + w[k](u-b[k]) + slope/2 (u-b[k])^2
        q2 = 0.5 * slope
        q1 = w[k] - slope * b[k]
        q0 = self.cum[k] - w[k] * b[k] + 0.5 * slope * b[k] * b[k]
        return q0, q1, q2


def _integrate_cubic_over_weight(p3, p2, p1, p0, s0, s1, gamma):
    """Closed form of int_{s0}^{s1} (p3 s^3 + p2 s^2 + p1 s + p0)/(s+g)^2 ds."""
    g = gamma
    # substitute u = s + g: s = u - g
    d3 = p3
    d2 = p2 - 3 * p3 * g
    d1 = p1 - 2 * p2 * g + 3 * p3 * g * g
    d0 = p0 - p1 * g + p2 * g * g - p3 * g ** 3

    def anti(u):
        return (d3 * u * u / 2 + d2 * u + d1 * math.log(u) - d0 / u)

    return anti(s1 + g) - anti(s0 + g)


def displacement_integral(psi: PWLConvexFunction, cfg: FrameConfig,
                          gamma=None) -> float:
    """Exact facet-pair evaluation of the weighted displacement integral."""
    g = float(cfg.gamma if gamma is None else gamma)
    if g <= 0:
        raise NonPositiveGammaError("gamma must be positive")
    rect = cfg.standing_rect()
    if not all(psi.in_domain(p) for p in rect.vertices):
        raise OutOfDomainError("standing rectangle leaves the domain")
    groups: dict[Fraction, list[ConvexPolygon]] = {}
    for k, poly in enumerate(psi.facet_polygons):
        clipped = poly.intersect(rect)
        if clipped.area2() > 0:
            groups.setdefault(psi.facets[k].gradient[1], []).append(clipped)
    profiles = {t: WidthProfile.of_polygons(ps) for t, ps in groups.items()}
    delta = float(cfg.delta)
    keys = sorted(profiles)
    total = 0.0
    for ta in keys:
        A = profiles[ta]
        for tb in keys:
            if tb == ta:
                continue
            B = profiles[tb]
            total += abs(float(ta) - float(tb)) * _pair_integral(A, B, delta, g)
    return total


def _pair_integral(A: WidthProfile, B: WidthProfile, delta: float,
                   g: float) -> float:
    if not A.bps or not B.bps:
        return 0.0
    bps = set(A.bps)
    bps.add(delta / 2)
    for b in B.bps:
        bps.add(b / 2)
        bps.add(2 * b)
    lo = max(A.bps[0], 0.0)
    hi = min(A.bps[-1], delta)
    pts = sorted(p for p in bps if lo < p < hi)
    pts = [lo] + pts + [hi]
    total = 0.0
    for s0, s1 in zip(pts, pts[1:]):
        if s1 - s0 <= 0:
            continue
        sm = 0.5 * (s0 + s1)
        # w_A linear on the piece
        k = bisect.bisect_right(A.bps, sm) - 1
        if k < 0 or k >= len(A.bps) - 1:
            continue
        slope = (A.ws[k + 1] - A.ws[k]) / (A.bps[k + 1] - A.bps[k])
        a1 = slope
        a0 = A.ws[k] - slope * A.bps[k]
        # upper limit U(s) = W_B(min(2s, delta))
        u0u = u1u = u2u = 0.0
        if 2 * sm <= delta:
            um = 2 * sm
            if um <= B.bps[0]:
                pass
            elif um >= B.bps[-1]:
                u0u = B.cum[-1]
            else:
                kk = bisect.bisect_right(B.bps, um) - 1
                q0, q1, q2 = B.local_quad(kk)
                u0u, u1u, u2u = q0, 2 * q1, 4 * q2  # substitute u = 2s
        else:
            u0u = B.cumulative(delta)
        # lower limit L(s) = W_B(s/2)
        l0 = l1 = l2 = 0.0
        lm = sm / 2
        if lm <= B.bps[0]:
            pass
        elif lm >= B.bps[-1]:
            l0 = B.cum[-1]
        else:
            kk = bisect.bisect_right(B.bps, lm) - 1
            q0, q1, q2 = B.local_quad(kk)
            l0, l1, l2 = q0, q1 / 2, q2 / 4  # substitute u = s/2
        b0, b1, b2 = u0u - l0, u1u - l1, u2u - l2
        # (a0 + a1 s)(b0 + b1 s + b2 s^2)
        p0 = a0 * b0
        p1 = a0 * b1 + a1 * b0
        p2 = a0 * b2 + a1 * b1
        p3 = a1 * b2
        total += _integrate_cubic_over_weight(p3, p2, p1, p0, s0, s1, g)
    return total


def displacement_integral_grid(psi: PWLConvexFunction, cfg: FrameConfig,
                               gamma=None, n_perp: int = 96,
                               n_par: int = 32) -> float:
    """Independent midpoint-grid quadrature of the same integral."""
    g = float(cfg.gamma if gamma is None else gamma)
    if g <= 0:
        raise NonPositiveGammaError("gamma must be positive")
    ell = float(cfg.ell)
    delta = float(cfg.delta)
    xs = (np.arange(n_par) + 0.5) / n_par * ell - ell / 2
    ss = (np.arange(n_perp) + 0.5) / n_perp * delta
    planes = np.array([[float(f.gradient[0]), float(f.gradient[1]),
                        float(f.offset)] for f in psi.facets])
    gx, gy, b = planes[:, 0], planes[:, 1], planes[:, 2]
    X, S = np.meshgrid(xs, ss, indexing="ij")
    vals = (gx[None, None, :] * X[:, :, None]
            + gy[None, None, :] * S[:, :, None] + b[None, None, :])
    tperp = gy[np.argmax(vals, axis=2)]          # (n_par, n_perp)
    dx = ell / n_par
    ds = delta / n_perp
    total = 0.0
    for i_s, s in enumerate(ss):
        w = 1.0 / (s + g) ** 2
        mask = (ss >= s / 2) & (ss <= 2 * s)
        if not mask.any():
            continue
        u = tperp[:, i_s]
        V = tperp[:, mask]
        diff = np.abs(u[:, None, None] - V[None, :, :]).sum()
        total += w * diff * dx * dx * ds * ds
    return total


def displacement_integral_quadratic(ell: float, delta: float,
                                    gamma: float) -> float:
    """Closed form for the model map T(x) = x (so |dT_perp| = |y_p - x_p|).

    Serves as the analytic reference for grid-sampled quadratic scenarios.
    """
    g, d = float(gamma), float(delta)
    if g <= 0:
        raise NonPositiveGammaError("gamma must be positive")

    def int_s2(lo, hi):  # int s^2/(s+g)^2
        f = lambda s: s - 2 * g * math.log(s + g) - g * g / (s + g)
        return f(hi) - f(lo)

    def int_dms2(lo, hi):  # int (d-s)^2/(s+g)^2
        c = d + g
        f = lambda s: -c * c / (s + g) - 2 * c * math.log(s + g) + s + g
        return f(hi) - f(lo)

    part1 = 0.625 * int_s2(0.0, d / 2)
    part2 = 0.125 * int_s2(d / 2, d) + 0.5 * int_dms2(d / 2, d)
    return float(ell) ** 2 * (part1 + part2)


# -- envelope formulas -------------------------------------------------------


def upper_bound_rhs(cfg: FrameConfig, K: float, C: float) -> float:
    """C K ell^2 (sqrt(log(1 + delta/gamma)) + 1); needs gamma >= eps/K which
    the caller certifies through gamma's definition."""
    g = float(cfg.gamma)
    if g <= 0:
        raise NonPositiveGammaError("gamma must be positive")
    ell = float(cfg.ell)
    return C * K * ell * ell * (math.sqrt(math.log1p(float(cfg.delta) / g)) + 1.0)


def lower_bound_rhs(cfg: FrameConfig, K: float, lam1: float, lam2: float,
                    C: float) -> float:
    """(ell^4 / (C lam1 lam2 K)) min(1, ell^2/(lam1 lam2 K^2))
    log(1/2 + delta/(2 gamma)); valid for gamma < delta under the length
    condition."""
    g = float(cfg.gamma)
    ell = float(cfg.ell)
    if g >= float(cfg.delta):
        raise PreconditionError("gamma < delta required", which="gamma")
    val = (ell ** 4 / (C * lam1 * lam2 * K)
           * min(1.0, ell * ell / (lam1 * lam2 * K * K))
           * math.log(0.5 + float(cfg.delta) / (2 * g)))
    return val


def eta_value(ell: float, lam1: float, lam2: float, K: float,
              C: float) -> float:
    """Spread threshold eta = ell^2 / (C lam1 lam2 K)."""
    return float(ell) ** 2 / (C * lam1 * lam2 * K)


def subdiff_slab_bound_check(psi: PWLConvexFunction, cfg: FrameConfig,
                             K: float, eps) -> BoundReport:
    """|z_par| <= (2/ell)(K |y_perp| + eps) over every complex vertex with
    |y_par| <= ell/2 and its whole subgradient cell."""
    ell = float(cfg.ell)
    worst = None
    eps_f = float(eps)
    top = 2 * float(cfg.delta)
    for vid in psi.complex_vertex_ids:
        p = psi.point(vid)
        if abs(float(p[0])) > ell / 2 + 1e-15 or not 0 <= float(p[1]) <= top:
            continue
        cell = psi.vertex_cell(vid)
        for z in cell.vertices:
            lhs = abs(float(z[0]))
            rhs = 2.0 / ell * (K * abs(float(p[1])) + eps_f)
            margin = rhs - lhs
            if worst is None or margin < worst[0]:
                worst = (margin, lhs, rhs, p, z)
    if worst is None:
        return BoundReport.from_sides("slab-bound", 0.0, 0.0)
    slack = 1e-9 * (1.0 + abs(worst[2]))
    rep = BoundReport.from_sides("slab-bound", worst[1], worst[2] + slack,
                                 witness={"y": worst[3], "z": worst[4]})
    rep.rhs = worst[2]
    return rep


def diam_lower_bound_check(psi: PWLConvexFunction, cfg: FrameConfig,
                           lam1, lam2, h1, h2) -> BoundReport:
    """diam of the subdifferential image of the segment neighborhood is at
    least sqrt(delta ell / (lam1 lam2)); exact comparison of squares."""
    lam1, lam2 = as_rat(lam1), as_rat(lam2)
    h1, h2 = as_rat(h1), as_rat(h2)
    ell, delta = cfg.ell, cfg.delta
    pre = {
        "h1_small": h1 <= min(delta, ell),
        "h2_small": h2 * h2 < delta * ell / (lam1 * lam2),
    }
    region = Region.segment_neighborhood(cfg.a, cfg.b, delta)
    if not region.inside_polygon(psi.domain):
        pre["region_inside"] = False
        return BoundReport.from_sides("diam-lower", 0.0, 0.0, None, pre)
    d2 = psi.diam_subdifferential_sq(region)
    rhs2 = delta * ell / (lam1 * lam2)
    rep = BoundReport.from_sides(
        "diam-lower", math.sqrt(float(rhs2)), math.sqrt(float(d2)),
        BoundParams(ell=ell, delta=delta, lam1=lam1, lam2=lam2,
                    h1=h1, h2=h2), pre)
    if all(pre.values()):
        rep.verdict = "holds" if d2 >= rhs2 else "fails"
    return rep


def spread_witness_search(psi: PWLConvexFunction, cfg: FrameConfig,
                          x_perp, xi, eta):
    """A point of the witness box whose subdifferential reaches at least
    3 eta away from xi vertically, or None."""
    box = cfg.inner_box(x_perp)
    xi, eta = as_rat(xi), as_rat(eta)
    thr = 3 * eta
    for k, poly in enumerate(psi.facet_polygons):
        inter = poly.intersect(box)
        if inter.is_empty() or inter.area2() == 0:
            continue
        g = psi.facets[k].gradient
        if abs(g[1] - xi) >= thr:
            vs = inter.vertices
            cx = sum(v[0] for v in vs) / len(vs)
            cy = sum(v[1] for v in vs) / len(vs)
            return (cx, cy)
    for vid in psi.complex_vertex_ids:
        p = psi.point(vid)
        if box.contains(p):
            cell = psi.vertex_cell(vid)
            if any(abs(z[1] - xi) >= thr for z in cell.vertices):
                return p
    return None


def cone_propagation_check(psi: PWLConvexFunction, y1: Pt, y2: Pt, xi, eta,
                           K: float, eps, ell) -> bool:
    """Every subgradient along [y1, y2] stays within 2 eta of xi vertically,
    given endpoints with eta-close subgradients and a near-vertical segment."""
    xi, eta = as_rat(xi), as_rat(eta)
    y1 = (as_rat(y1[0]), as_rat(y1[1]))
    y2 = (as_rat(y2[0]), as_rat(y2[1]))
    if y1 == y2:
        raise PreconditionError("segment is degenerate", which="angle")
    for p in (y1, y2):
        cell = psi.subdifferential(p)
        lo = min(z[1] for z in cell.vertices)
        hi = max(z[1] for z in cell.vertices)
        if not (lo <= xi + eta and hi >= xi - eta):
            raise PreconditionError("endpoint subgradients not eta-close",
                                    which="endpoints")
    zs = _subgradients_along_segment(psi, y1, y2)
    return all(abs(z[1] - xi) <= 2 * eta for z in zs)


def _subgradients_along_segment(psi, y1, y2):
    out = []
    seg = ConvexPolygon.from_points([y1, y2])
    for k, poly in enumerate(psi.facet_polygons):
        if not poly.intersect(seg).is_empty():
            out.append(psi.facets[k].gradient)
    for vid in psi.complex_vertex_ids:
        p = psi.point(vid)
        if seg.contains(p):
            out.extend(psi.vertex_cell(vid).vertices)
    return out


def concentration_set_measure(psi: PWLConvexFunction, cfg: FrameConfig,
                              x_perp, xi, eta) -> float:
    """Area of the part of the coupling band where every subgradient is
    vertically more than eta away from xi (facet decomposition, exact)."""
    band = cfg.band(x_perp)
    xi, eta = as_rat(xi), as_rat(eta)
    area = Fraction(0)
    for k, poly in enumerate(psi.facet_polygons):
        g = psi.facets[k].gradient
        if abs(g[1] - xi) > eta:
            area += poly.intersect(band).area()
    return float(area)


def concentration_lower_rhs(cfg: FrameConfig, x_perp: float, K: float,
                            lam1: float, lam2: float, C: float) -> float:
    """(ell x_perp / C) min(1, ell^2/(lam1 lam2 K^2))."""
    ell = float(cfg.ell)
    return (ell * float(x_perp) / C
            * min(1.0, ell * ell / (lam1 * lam2 * K * K)))


def sandwich_check(psi: PWLConvexFunction, mu, nu, cfg: FrameConfig,
                   params: BoundParams, c_low: float, c_up: float,
                   value: float | None = None):
    """lower_bound_rhs <= displacement_integral <= upper_bound_rhs with the
    calibrated constants; returns (lower report, upper report)."""
    gamma = float(cfg.gamma)
    K = float(params.K)
    if value is None:
        value = displacement_integral(psi, cfg)
    pre_low = {
        "ell_condition": (float(params.ell) >= 2 * float(params.h1)
                          and float(params.ell) ** 2 >= c_low * K
                          * float(params.lam1) * float(params.lam2)
                          * float(params.h2)),
        "gamma_lt_delta": gamma < float(cfg.delta),
    }
    low = (lower_bound_rhs(cfg, K, float(params.lam1), float(params.lam2),
                           c_low) if pre_low["gamma_lt_delta"] else math.inf)
    rep_low = BoundReport.from_sides("integral-lower", low, value,
                                     params.replace(C=c_low, gamma=gamma),
                                     pre_low)
    pre_up = {"gamma_ge_eps_over_K": gamma >= float(params.eps) / K - 1e-12}
    up = upper_bound_rhs(cfg, K, c_up)
    rep_up = BoundReport.from_sides("integral-upper", value, up,
                                    params.replace(C=c_up, gamma=gamma),
                                    pre_up)
    return rep_low, rep_up
