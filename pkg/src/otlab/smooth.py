"""Finite-difference verifiers for smooth convex potentials on grids.

These cover the twice-differentiable side of the theory: the planar
strict-convexity estimate with explicit constant 8, and the n >= 3
affine-flat machinery (profile function, dimension-split bound, and the
Fischer-inequality pipeline).  Everything is checked on uniform grids with
central differences and a stated 1e-6 slack on the right-hand sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import integrate

from .errors import (
    DimensionBranchError,
    GridTooSmallError,
    InvalidDimsError,
    PreconditionError,
)
from .report import BoundParams, BoundReport

RHS_SLACK = 1e-6


@dataclass
class GridFunction:
    """Scalar samples on a uniform n-dimensional grid over a box."""

    origin: tuple[float, ...]
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.values.ndim != len(self.origin):
            raise ValueError("origin/values dimension mismatch")

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def axis_coords(self, k: int) -> np.ndarray:
        return self.origin[k] + self.spacing * np.arange(self.values.shape[k])

    @staticmethod
    def from_callable(fn, origin, spacing, shape) -> "GridFunction":
        axes = [origin[k] + spacing * np.arange(shape[k])
                for k in range(len(shape))]
        mesh = np.meshgrid(*axes, indexing="ij")
        return GridFunction(tuple(origin), spacing, fn(*mesh))

    def interior(self):
        sl = tuple(slice(1, -1) for _ in range(self.ndim))
        return sl


def _second_derivatives(f: GridFunction):
    """Central-difference Hessian entries on interior nodes."""
    v = f.values
    h = f.spacing
    nd = v.ndim
    inner = f.interior()
    out = {}
    for i in range(nd):
        up = tuple(slice(2, None) if k == i else slice(1, -1) for k in range(nd))
        dn = tuple(slice(0, -2) if k == i else slice(1, -1) for k in range(nd))
        out[(i, i)] = (v[up] - 2 * v[inner] + v[dn]) / (h * h)
    for i in range(nd):
        for j in range(i + 1, nd):
            pp = tuple(slice(2, None) if k in (i, j) else slice(1, -1)
                       for k in range(nd))
            mm = tuple(slice(0, -2) if k in (i, j) else slice(1, -1)
                       for k in range(nd))
            pm = tuple(slice(2, None) if k == i else
                       slice(0, -2) if k == j else slice(1, -1)
                       for k in range(nd))
            mp = tuple(slice(0, -2) if k == i else
                       slice(2, None) if k == j else slice(1, -1)
                       for k in range(nd))
            out[(i, j)] = (v[pp] - v[pm] - v[mp] + v[mm]) / (4 * h * h)
    return out


def gradient_field(f: GridFunction):
    """Central-difference gradient components on interior nodes."""
    v = f.values
    h = f.spacing
    nd = v.ndim
    comp = []
    for i in range(nd):
        up = tuple(slice(2, None) if k == i else slice(1, -1) for k in range(nd))
        dn = tuple(slice(0, -2) if k == i else slice(1, -1) for k in range(nd))
        comp.append((v[up] - v[dn]) / (2 * h))
    return comp


def hessian_det_min(f: GridFunction) -> float:
    """Minimum interior central-difference Hessian determinant."""
    if any(s < 3 for s in f.values.shape):
        raise GridTooSmallError("need at least 3 nodes per axis")
    d = _second_derivatives(f)
    nd = f.ndim
    shape = d[(0, 0)].shape
    H = np.empty(shape + (nd, nd))
    for i in range(nd):
        for j in range(nd):
            H[..., i, j] = d[(min(i, j), max(i, j))]
    dets = np.linalg.det(H.reshape(-1, nd, nd))
    return float(dets.min())


def grad_inf_norm(f: GridFunction) -> float:
    comp = gradient_field(f)
    sq = sum(c * c for c in comp)
    return float(np.sqrt(sq.max()))


def heinz_check_2d(f: GridFunction, lam: float, x0, line_angle: float,
                   ell: float, delta: float) -> BoundReport:
    """ell^2 ln(1 + delta/gamma) <= 8 lam^2 |grad|_inf^2 for a nonnegative
    potential vanishing at x0, with gamma the sup over the line segment
    through x0 divided by the gradient bound."""
    if f.ndim != 2:
        raise InvalidDimsError("planar check needs a 2d grid")
    vmin = float(f.values.min())
    pre = {}
    pre["nonnegative"] = vmin >= -1e-12
    gi = round((x0[0] - f.origin[0]) / f.spacing)
    gj = round((x0[1] - f.origin[1]) / f.spacing)
    pre["zero_at_center"] = abs(float(f.values[gi, gj])) <= 1e-12
    pre["ell_le_half_delta"] = ell <= delta / 2
    hmin = hessian_det_min(f)
    grid_tol = 10 * f.spacing ** 2 * (1 + abs(hmin))
    pre["hessian_lower"] = hmin >= 1.0 / lam**2 - grid_tol
    if not all(pre.values()):
        raise PreconditionError(
            "; ".join(k for k, v in pre.items() if not v), which=pre)

    gnorm = grad_inf_norm(f)
    sup = _line_sup(f, x0, line_angle, ell)
    gamma = sup / gnorm
    lhs = ell * ell * math.log1p(delta / gamma) if gamma > 0 else math.inf
    rhs = 8.0 * lam * lam * gnorm * gnorm
    params = BoundParams(ell=ell, delta=delta, gamma=gamma, L_inf=gnorm,
                         lam1=lam, lam2=lam)
    return BoundReport.from_sides("heinz-2d", lhs, rhs + RHS_SLACK, params)


def _line_sup(f: GridFunction, x0, angle: float, ell: float) -> float:
    """Grid sup of f over the segment of half-length ell through x0."""
    c, s = math.cos(angle), math.sin(angle)
    n = max(3, int(2 * ell / f.spacing) * 2 + 1)
    ts = np.linspace(-ell, ell, n)
    xs = x0[0] + ts * c
    ys = x0[1] + ts * s
    return float(_bilinear(f, xs, ys).max())


def _bilinear(f: GridFunction, xs, ys):
    gx = (xs - f.origin[0]) / f.spacing
    gy = (ys - f.origin[1]) / f.spacing
    i0 = np.clip(np.floor(gx).astype(int), 0, f.values.shape[0] - 2)
    j0 = np.clip(np.floor(gy).astype(int), 0, f.values.shape[1] - 2)
    tx = gx - i0
    ty = gy - j0
    v = f.values
    return ((1 - tx) * (1 - ty) * v[i0, j0] + tx * (1 - ty) * v[i0 + 1, j0]
            + (1 - tx) * ty * v[i0, j0 + 1] + tx * ty * v[i0 + 1, j0 + 1])


def varphi_profile(s: float, n: int, d: int) -> float:
    """s^(2d-n) * int_0^s r^(n-d-1) / (r+1)^d dr by adaptive quadrature."""
    if not (1 <= d < n):
        raise InvalidDimsError("need 1 <= d < n")
    if s < 0:
        raise InvalidDimsError("s must be nonnegative")
    if s == 0:
        return 0.0
    val, _ = integrate.quad(lambda r: r ** (n - d - 1) / (r + 1.0) ** d,
                            0.0, s, epsabs=1e-10, epsrel=1e-10, limit=200)
    return s ** (2 * d - n) * val


def affine_flat_bound(n: int, d: int, ell: float, delta: float, lam: float,
                      grad_inf: float, C: float) -> float:
    """Lower bound on the sup of the potential over the d-plane slice.

    Vacuous below the critical split (d < n/2 gives a bounded profile)."""
    if 2 * d < n:
        raise DimensionBranchError("bound is vacuous for d < n/2")
    if 2 * d == n:
        expo = C * lam * lam * grad_inf ** n / ell ** n
        return delta * grad_inf * math.exp(-min(expo, 700.0))
    power = 1.0 / (2 * d - n)
    second = (ell ** (2 * d) / (C * lam * lam * grad_inf ** (2 * n - 2 * d))) ** power
    return min(delta * grad_inf, second)


def _sphere_area(m: int) -> float:
    """Surface measure of the unit sphere in R^m."""
    return 2 * math.pi ** (m / 2) / math.gamma(m / 2)


def fischer_pipeline_check(f: GridFunction, d: int, lam: float, ell: float,
                           delta: float, gamma: float, K: float,
                           C: float = 1.0) -> BoundReport:
    """Assembled split-determinant inequality on a grid potential:

        ell^(2d) * int_{|x_perp| < delta/2} (|x_perp| + gamma)^-d dx_perp
            <= C lam^2 K^n,

    plus the nodewise gradient bound |grad_par f| <= (2/ell) K (|x_perp| + gamma)
    over the centered slab.  x_par is the first d axes.
    """
    n = f.ndim
    if n < 2 or not (1 <= d < n):
        raise InvalidDimsError("need an n-grid with 1 <= d < n")
    if any(s < 3 for s in f.values.shape):
        raise GridTooSmallError("need at least 3 nodes per axis")
    m = n - d
    radial, _ = integrate.quad(
        lambda r: r ** (m - 1) / (r + gamma) ** d, 0.0, delta / 2,
        epsabs=1e-12, epsrel=1e-10, limit=200)
    lhs = ell ** (2 * d) * _sphere_area(m) * radial
    rhs = C * lam * lam * K ** n

    comp = gradient_field(f)
    par = np.sqrt(sum(comp[i] ** 2 for i in range(d)))
    axes = [f.axis_coords(k)[1:-1] for k in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    par_r = np.sqrt(sum(mesh[i] ** 2 for i in range(d)))
    perp_r = np.sqrt(sum(mesh[i] ** 2 for i in range(d, n)))
    sel = (par_r <= ell / 2) & (perp_r <= delta / 2)
    grad_ok = True
    if sel.any():
        bound = 2.0 / ell * K * (perp_r[sel] + gamma)
        grad_ok = bool((par[sel] <= bound + RHS_SLACK).all())
    rep = BoundReport.from_sides(
        "fischer-nd", lhs, rhs + RHS_SLACK,
        BoundParams(ell=ell, delta=delta, gamma=gamma, K=K, lam1=lam,
                    lam2=lam, C=C),
        {"gradient_bound": grad_ok})
    return rep
