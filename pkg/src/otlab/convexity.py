"""Flat-part detection and the quantitative convexity estimates.

Conventions: ell is always HALF the segment length |x - y| / 2, matching
the main flat-part bound; the subgradient-gap inequality alone uses the
full distance |x - x'| and is handled locally.  The universal constant C
is a calibration input; preconditions involving C are evaluated with the
same value that scales the bound.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import (
    InvalidSubgradientError,
    NegativeGapError,
    OutOfDomainError,
    ZeroKError,
)
from .geometry.primitives import Pt, as_rat, dist_sq, rat_sqrt_or_float
from .geometry.pwl import PWLConvexFunction, Region
from .report import BoundParams, BoundReport

LOG_CAP = 700.0  # exp overflow guard


def flat_deficiency(psi: PWLConvexFunction, x: Pt, y: Pt) -> Fraction:
    """Largest gap between the chord over [x, y] and the function (exact).

    Zero iff the function is affine along the segment.
    """
    prof = psi.segment_profile(x, y)
    v0 = prof[0][1]
    v1 = prof[-1][1]
    eps = Fraction(0)
    for t, val in prof:
        chord = (1 - t) * v0 + t * v1
        gap = chord - val
        if gap > eps:
            eps = gap
    return eps


def max_flat_diameter(psi: PWLConvexFunction, region, tol=0):
    """Largest |x - y| over complex-vertex pairs in the region whose flat
    deficiency is at most tol; returns (diameter, witness pair or None).

    With tol = 0 a segment is flat iff it stays inside one closed facet
    (facets are maximal linearity cells), so the scan is per-facet.
    """
    if isinstance(region, Region):
        reg = region
    else:
        reg = Region.from_polygon(region)
    ids = [vid for vid in psi.complex_vertex_ids
           if reg.contains_point(psi.point(vid))]
    best = Fraction(0)
    witness = None
    if as_rat(tol) == 0:
        polys = psi.facet_polygons
        pts = {vid: psi.point(vid) for vid in ids}
        for poly in polys:
            x0, y0, x1, y1 = poly.bbox()
            members = [v for v in ids
                       if x0 <= pts[v][0] <= x1 and y0 <= pts[v][1] <= y1
                       and poly.contains(pts[v])]
            for a in range(len(members)):
                for b in range(a + 1, len(members)):
                    d2 = dist_sq(pts[members[a]], pts[members[b]])
                    if d2 > best:
                        best = d2
                        witness = (pts[members[a]], pts[members[b]])
    else:
        tol = as_rat(tol)
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                pa, pb = psi.point(ids[a]), psi.point(ids[b])
                d2 = dist_sq(pa, pb)
                if d2 <= best:
                    continue
                if flat_deficiency(psi, pa, pb) <= tol:
                    best = d2
                    witness = (pa, pb)
    return float(rat_sqrt_or_float(best)), witness


def gamma_of(params: BoundParams) -> float:
    """max(eps/K, 2 h1, ell h2 / (C K)): the resolution scale of the bound."""
    K = float(params.K)
    if K <= 0:
        raise ZeroKError("K must be positive")
    return max(float(params.eps) / K,
               2.0 * float(params.h1),
               float(params.ell) * float(params.h2) / (float(params.C) * K))


def ell_condition(params: BoundParams) -> bool:
    """ell >= 2 h1 and ell^2 >= C K lam1 lam2 h2."""
    ell = float(params.ell)
    return (ell >= 2.0 * float(params.h1)
            and ell * ell >= float(params.C) * float(params.K)
            * float(params.lam1) * float(params.lam2) * float(params.h2))


def main_bound_check(params: BoundParams) -> BoundReport:
    """ell^8 log(1 + delta/gamma) <= C lam1^4 lam2^4 K^8, applicable when
    gamma <= delta/2 and the length conditions hold."""
    gamma = gamma_of(params)
    params = params.replace(gamma=gamma)
    ell = float(params.ell)
    delta = float(params.delta)
    pre = {
        "gamma_le_half_delta": gamma <= delta / 2.0,
        "ell_condition": ell_condition(params),
    }
    if gamma > 0:
        lhs = ell**8 * math.log1p(delta / gamma)
    else:
        lhs = 0.0 if ell == 0 else math.inf
    rhs = (float(params.C) * float(params.lam1)**4 * float(params.lam2)**4
           * float(params.K)**8)
    return BoundReport.from_sides("flat-part-main", lhs, rhs, params, pre)


def gamma_lower_bound(params: BoundParams) -> float:
    """delta * min(1/(exp(C^4 lam1^4 lam2^4 K^8 / ell^8) - 1), 1/2)."""
    ell = float(params.ell)
    if ell <= 0:
        return 0.0
    expo = (float(params.C)**4 * float(params.lam1)**4 * float(params.lam2)**4
            * float(params.K)**8) / ell**8
    if expo > LOG_CAP:
        return 0.0
    denom = math.expm1(expo)
    first = math.inf if denom <= 0 else 1.0 / denom
    return float(params.delta) * min(first, 0.5)


def corollary_flat_bound(params: BoundParams) -> BoundReport:
    """Four-branch upper bound on the half-length of an exactly flat
    segment (eps = 0 case)."""
    C = float(params.C)
    lam = float(params.lam1) * float(params.lam2)
    h1, h2 = float(params.h1), float(params.h2)
    K = float(params.K)
    delta = float(params.delta)
    pre = {
        "eps_zero": float(params.eps) == 0.0,
        "h1_small": h1 <= delta / 4.0,
        "h2_small": math.sqrt(C * lam) * h2 <= delta,
        "side_condition": (float(params.ell) * h2 / K <= C * delta / 2.0
                           if K > 0 else False),
    }
    b1 = 2.0 * h1
    b2 = math.sqrt(C * lam * K * h2)
    if h1 > 0 and delta > 2.0 * h1:
        b3 = K * math.sqrt(C * lam) / math.log(delta / (2.0 * h1)) ** 0.125
    elif h1 == 0:
        b3 = 0.0
    else:
        b3 = math.inf
    sh2 = math.sqrt(C * lam) * h2
    if h2 > 0 and delta > sh2:
        b4 = K * math.sqrt(C * lam) / math.log(delta / sh2) ** 0.125
    elif h2 == 0:
        b4 = 0.0
    else:
        b4 = math.inf
    rhs = max(b1, b2, b3, b4)
    rep = BoundReport.from_sides("flat-length", float(params.ell), rhs,
                                 params, pre)
    rep.witness = {"branches": [b1, b2, b3, b4]}
    return rep


def duality_gap_bound_check(psi: PWLConvexFunction, x: Pt, x2: Pt,
                            z: Pt, z2: Pt) -> BoundReport:
    """|z - z'| >= 2 eps / |x - x'| for subgradients at the two points;
    the verdict is decided by exact rational arithmetic."""
    if not psi.is_subgradient(x, z):
        raise InvalidSubgradientError(f"{z} is not a subgradient at {x}")
    if not psi.is_subgradient(x2, z2):
        raise InvalidSubgradientError(f"{z2} is not a subgradient at {x2}")
    eps = flat_deficiency(psi, x, x2)
    l2 = dist_sq(x, x2)
    gap2 = dist_sq(z, z2)
    holds = gap2 * l2 >= 4 * eps * eps
    lhs = 2.0 * float(eps) / math.sqrt(float(l2)) if l2 > 0 else 0.0
    rep = BoundReport.from_sides(
        "subgradient-gap", lhs, math.sqrt(float(gap2)),
        BoundParams(ell=rat_sqrt_or_float(l2), eps=eps))
    rep.verdict = "holds" if holds else "fails"
    return rep


def subgradient_gap_sweep(psi: PWLConvexFunction) -> bool:
    """Exact |z - z'| >= 2 eps / l over all complex-vertex pairs and their
    full subgradient cells (minimum cell distance against the gap)."""
    ids = psi.complex_vertex_ids
    cells = {vid: psi.vertex_cell(vid) for vid in ids}
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            xa, xb = psi.point(ids[a]), psi.point(ids[b])
            eps = flat_deficiency(psi, xa, xb)
            l2 = dist_sq(xa, xb)
            gap2 = cells[ids[a]].min_dist_sq(cells[ids[b]])
            if gap2 * l2 < 4 * eps * eps:
                return False
    return True


# -- C1 modulus of the conjugate ------------------------------------------


def _sigma(ell: float, params: BoundParams) -> float:
    """Monotone threshold L_inf / (C (exp(C^4 (lam1 lam2 L_inf)^4 ... ) - 1));
    increasing in ell, -> 0 as ell -> 0."""
    if ell <= 0:
        return 0.0
    C = float(params.C)
    expo = (C**4 * float(params.lam1)**4 * float(params.lam2)**4
            * float(params.L_inf)**8) / ell**8
    if expo > LOG_CAP:
        return 0.0
    denom = math.expm1(expo)
    if denom <= 0:
        return math.inf
    return float(params.L_inf) / (C * denom)


def _invert_increasing(fn, w: float, hi0: float = 1.0) -> float:
    """Bisection inverse of a monotone increasing fn on (0, inf)."""
    if w <= 0:
        return 0.0
    hi = hi0
    for _ in range(200):
        if fn(hi) >= w:
            break
        hi *= 2.0
    else:
        return math.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fn(mid) >= w:
            hi = mid
        else:
            lo = mid
    return hi


def c1_modulus_eval(params: BoundParams, dz: float) -> float:
    """Upper bound on |x - x'| over x in the conjugate's subdifferentials at
    z, z' with |z - z'| = dz, clamped at the domain diameter D.

    For h1 = h2 = 0 the closed-form modulus applies; otherwise the three
    terms are realized through the inverses of sigma and sigma/ell,
    computed by monotone bisection.
    """
    if dz < 0:
        raise NegativeGapError("gradient gap must be nonnegative")
    D = float(params.D)
    C = float(params.C)
    lam = math.sqrt(float(params.lam1) * float(params.lam2))
    h1, h2 = float(params.h1), float(params.h2)
    if h1 == 0 and h2 == 0:
        if dz == 0:
            return 0.0
        arg = math.log1p(1.0 / (C * lam * dz))
        if arg <= 0:
            return D
        return min(D, C * lam * float(params.L_inf) / arg ** 0.125)

    sigma = lambda l: _sigma(l, params)
    sigma_over_l = lambda l: _sigma(l, params) / l if l > 0 else 0.0
    rho = _invert_increasing(sigma_over_l, dz / 2.0)
    K = float(params.K)
    rho1 = max(_invert_increasing(sigma, K * h1), 2.0 * h1)
    delta = float(params.delta)
    rho2 = max(
        _invert_increasing(sigma, D * h2),
        math.sqrt(C * float(params.lam1) * float(params.lam2)
                  * float(params.L_inf) * h2),
        float(params.lam1) * float(params.lam2) / delta * h2 if delta > 0 else math.inf,
    )
    return min(D, max(rho, rho1, rho2))
