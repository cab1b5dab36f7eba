"""Scenario generation, end-to-end pipelines, and constant calibration.

A scenario describes measures (lattice, perturbed lattice, explicit cloud,
or a grid-sampled quadratic reference), probe segments, certificate
targets, and calibration slots.  Running one produces a RunReport whose
canonical serialization is byte-deterministic for a fixed scenario
(timings are reported separately and excluded from the canonical form).

Calibration policy: each constant slot is fitted by bisection (1e-3
relative) to the smallest value making its inequality hold on the
designated calibration instance, then frozen for the rest of the family.
The slots are never shared between inequalities.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, asdict
from fractions import Fraction

from .convexity import (
    corollary_flat_bound,
    duality_gap_bound_check,
    flat_deficiency,
    gamma_of,
    main_bound_check,
    max_flat_diameter,
)
from .errors import NoApplicableScenarioError, OTLabError
from .geometry.polygon import ConvexPolygon, rect_polygon
from .geometry.primitives import Pt, as_rat, dot, fmt_rat, parse_rat, sub
from .geometry.pwl import PWLConvexFunction, Region, build_pwl, quadratic_grid_samples
from .integral import (
    FrameConfig,
    displacement_integral,
    displacement_integral_quadratic,
    normalize_frame,
    sandwich_check,
    subdiff_slab_bound_check,
)
from .measures import (
    Rect,
    WeightedPointCloud,
    check_regularity,
    make_lattice,
    rect_from_bounds,
)
from .report import CSV_HEADER, BoundParams, BoundReport
from .transport import (
    cyclical_monotonicity_check,
    duality_gap,
    extract_potential,
    solve_ot,
    verify_dual_side,
    verify_onesided,
)


@dataclass
class Scenario:
    scenario_id: str
    kind: str = "lattice-ot"              # or "quadratic-reference"
    spacing: Fraction = Fraction(1, 8)    # lattice step / grid step
    shear: Fraction = Fraction(1, 4)      # symmetric off-diagonal entry
    jitter: bool = False
    seed: int = 0
    delta: Fraction = Fraction(13, 16)
    segments: list = field(default_factory=list)   # [(x, y)] probe pairs
    h1: Fraction = Fraction(0)
    lam1: Fraction = Fraction(1)
    h2: Fraction = Fraction(0)
    lam2: Fraction = Fraction(1)
    flat_h1: Fraction | None = None       # certificate used by the flat bound
    flat_lam1: Fraction | None = None
    flat_delta: Fraction = Fraction(1, 2)
    angle_grid: int = 1
    sandwich: bool = False
    growth_fit: bool = False
    constants: dict = field(default_factory=dict)  # C_main, C_up, C_low, C_flat

    def to_json_dict(self) -> dict:
        doc = {
            "scenario_id": self.scenario_id,
            "kind": self.kind,
            "spacing": fmt_rat(self.spacing),
            "shear": fmt_rat(self.shear),
            "jitter": self.jitter,
            "seed": self.seed,
            "delta": fmt_rat(self.delta),
            "segments": [[[fmt_rat(a[0]), fmt_rat(a[1])],
                          [fmt_rat(b[0]), fmt_rat(b[1])]]
                         for a, b in self.segments],
            "h1": fmt_rat(self.h1), "lam1": fmt_rat(self.lam1),
            "h2": fmt_rat(self.h2), "lam2": fmt_rat(self.lam2),
            "flat_delta": fmt_rat(self.flat_delta),
            "angle_grid": self.angle_grid,
            "sandwich": self.sandwich,
            "growth_fit": self.growth_fit,
            "constants": dict(sorted(self.constants.items())),
        }
        if self.flat_h1 is not None:
            doc["flat_h1"] = fmt_rat(self.flat_h1)
            doc["flat_lam1"] = fmt_rat(self.flat_lam1)
        return doc

    @staticmethod
    def from_json_dict(doc) -> "Scenario":
        segs = [((parse_rat(a[0]), parse_rat(a[1])),
                 (parse_rat(b[0]), parse_rat(b[1])))
                for a, b in doc.get("segments", [])]
        return Scenario(
            scenario_id=doc["scenario_id"],
            kind=doc.get("kind", "lattice-ot"),
            spacing=parse_rat(doc.get("spacing", "1/8")),
            shear=parse_rat(doc.get("shear", "1/4")),
            jitter=doc.get("jitter", False),
            seed=doc.get("seed", 0),
            delta=parse_rat(doc.get("delta", "13/16")),
            segments=segs,
            h1=parse_rat(doc.get("h1", 0)), lam1=parse_rat(doc.get("lam1", 1)),
            h2=parse_rat(doc.get("h2", 0)), lam2=parse_rat(doc.get("lam2", 1)),
            flat_h1=parse_rat(doc["flat_h1"]) if "flat_h1" in doc else None,
            flat_lam1=parse_rat(doc["flat_lam1"]) if "flat_lam1" in doc else None,
            flat_delta=parse_rat(doc.get("flat_delta", "1/2")),
            angle_grid=doc.get("angle_grid", 1),
            sandwich=doc.get("sandwich", False),
            growth_fit=doc.get("growth_fit", False),
            constants=dict(doc.get("constants", {})),
        )


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def _jitter_offset(seed: int, index: int, h: Fraction) -> Pt:
    """Deterministic rational offset of norm at most h/4 (counter-based)."""
    while True:
        r = splitmix64((seed << 20) ^ index)
        kx = (r & 0x3F) % 33 - 16
        ky = ((r >> 6) & 0x3F) % 33 - 16
        if kx * kx + ky * ky <= 256:
            return (Fraction(kx, 64) * h, Fraction(ky, 64) * h)
        index += 1 << 40


class StageError(OTLabError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


def build_measures(s: Scenario):
    sq = rect_from_bounds(0, 0, 1, 1)
    h = s.spacing
    mu = make_lattice(sq, h, h * h)
    if s.jitter:
        atoms = []
        for idx, (p, m) in enumerate(mu.atoms):
            dx, dy = _jitter_offset(s.seed, idx, h)
            atoms.append(((p[0] + dx, p[1] + dy), m))
        mu = WeightedPointCloud(atoms)
    sgr = s.shear
    nu = WeightedPointCloud(
        [((p[0] + sgr * p[1], sgr * p[0] + p[1]), m) for p, m in mu.atoms])
    return mu, nu


@dataclass
class PreparedScenario:
    scenario: Scenario
    mu: WeightedPointCloud | None
    nu: WeightedPointCloud | None
    certificates: list
    psi: PWLConvexFunction
    plan_cost: Fraction | None
    gap_zero: bool | None
    monotone: bool | None
    flat_diameter: float
    flat_witness: object
    global_K: float
    frames: list          # (psi_tilde, FrameConfig, K, eps) per segment
    timings: dict
    integral_cache: dict = field(default_factory=dict)

    def integral_at(self, idx: int, gamma: float) -> float:
        key = (idx, round(gamma, 14))
        if key not in self.integral_cache:
            psit, cfg, _, _ = self.frames[idx]
            self.integral_cache[key] = displacement_integral(psit, cfg, gamma)
        return self.integral_cache[key]


def prepare_scenario(s: Scenario) -> PreparedScenario:
    """Run the measure/solve/extract/scan stages once; bound evaluation is
    deferred so calibration can sweep constants cheaply."""
    timings = {}
    t0 = time.time()
    stage = "measures"
    try:
        if s.kind == "quadratic-reference":
            mu = nu = None
            certificates = []
            samples = quadratic_grid_samples(1, s.spacing)
            stage = "potential"
            psi = build_pwl(samples)
            plan_cost = gap0 = monotone = None
        else:
            mu, nu = build_measures(s)
            timings["measures"] = time.time() - t0

            stage = "certify"
            t = time.time()
            dom = rect_from_bounds(0, 0, 1, 1)
            lo = check_regularity(mu, dom, s.h1, s.lam1, "lower", s.angle_grid)
            nub = rect_from_bounds(0, 0, Fraction(3, 2), Fraction(3, 2))
            up = check_regularity(nu, nub, s.h2, s.lam2, "upper", s.angle_grid)
            certificates = [lo, up]
            if s.flat_h1 is not None:
                certificates.append(check_regularity(
                    mu, dom, s.flat_h1, s.flat_lam1, "lower", s.angle_grid))
            timings["certify"] = time.time() - t

            stage = "solve"
            t = time.time()
            plan, duals = solve_ot(mu, nu)
            gap0 = duality_gap(plan, duals) == 0
            monotone = cyclical_monotonicity_check(plan)
            plan_cost = plan.cost()
            timings["solve"] = time.time() - t

            stage = "potential"
            t = time.time()
            psi = extract_potential(mu, duals)
            timings["potential"] = time.time() - t

        stage = "flat-scan"
        t = time.time()
        scan_region = rect_polygon(Fraction(1, 2), Fraction(1, 2),
                                   Fraction(1, 10), Fraction(1, 10))
        if s.kind == "quadratic-reference":
            scan_region = rect_polygon(0, 0, Fraction(1, 2), Fraction(1, 2))
        dmax, wit = max_flat_diameter(psi, scan_region, 0)
        global_K = psi.diam_subdifferential(
            Region.from_polygon(psi.domain))
        timings["flat-scan"] = time.time() - t

        stage = "frames"
        t = time.time()
        frames = []
        for (x, y) in s.segments:
            psit, cfg = normalize_frame(psi, x, y, s.delta)
            K = psit.diam_subdifferential(cfg.k_rect())
            eps = flat_deficiency(psit, cfg.a, cfg.b)
            frames.append((psit, cfg, K, eps))
        timings["frames"] = time.time() - t
    except OTLabError as e:
        raise StageError(stage, e) from e
    timings["total"] = time.time() - t0
    return PreparedScenario(s, mu, nu, certificates, psi, plan_cost, gap0,
                            monotone, dmax, wit, global_K, frames, timings)


def segment_params(prep: PreparedScenario, idx: int, C: float) -> BoundParams:
    s = prep.scenario
    _, cfg, K, eps = prep.frames[idx]
    return BoundParams(ell=cfg.ell, delta=cfg.delta, h1=s.h1, h2=s.h2,
                       lam1=s.lam1, lam2=s.lam2, K=K, eps=eps, C=C,
                       D=math.sqrt(2.0), L_inf=prep.global_K)


def evaluate_main(prep: PreparedScenario, C: float) -> list[BoundReport]:
    return [main_bound_check(segment_params(prep, i, C))
            for i in range(len(prep.frames))]


def evaluate_flat(prep: PreparedScenario, C: float) -> list[BoundReport]:
    s = prep.scenario
    h1 = s.flat_h1 if s.flat_h1 is not None else s.h1
    lam1 = s.flat_lam1 if s.flat_lam1 is not None else s.lam1
    params = BoundParams(ell=prep.flat_diameter / 2.0, delta=s.flat_delta,
                         h1=h1, h2=s.h2, lam1=lam1, lam2=s.lam2,
                         K=prep.global_K, eps=0, C=C, D=math.sqrt(2.0))
    return [corollary_flat_bound(params)]


def evaluate_sandwich(prep: PreparedScenario, c_low: float,
                      c_up: float) -> list[BoundReport]:
    from dataclasses import replace as _replace

    out = []
    for i, (psit, cfg, K, eps) in enumerate(prep.frames):
        params = segment_params(prep, i, c_low)
        gamma = gamma_of(params)
        cfg = _replace(cfg, gamma=gamma)
        value = prep.integral_at(i, gamma)
        low, up = sandwich_check(psit, prep.mu, prep.nu, cfg, params,
                                 c_low, c_up, value=value)
        out.extend([low, up])
    return out


def growth_fit_exponent(prep: PreparedScenario) -> float:
    """Least-squares exponent of the integral against log(1 + delta/gamma)
    over the decade gamma in [0.004, 0.04] * delta, on the analytic
    quadratic reference map (the PWL mesh saturates below its own scale)."""
    import numpy as np

    if not prep.frames:
        raise NoApplicableScenarioError("growth fit needs a probe segment")
    _, cfg, _, _ = prep.frames[0]
    delta = float(cfg.delta)
    ell = float(cfg.ell)
    gammas = np.geomspace(0.004 * delta, 0.04 * delta, 9)
    vals = np.array([displacement_integral_quadratic(ell, delta, g)
                     for g in gammas])
    x = np.log(np.log1p(delta / gammas))
    return float(np.polyfit(x, np.log(vals), 1)[0])


INEQUALITIES = ("main", "flat", "low", "up")


def _reports_for(prep: PreparedScenario, ineq: str, C: float):
    if ineq == "main":
        return evaluate_main(prep, C)
    if ineq == "flat":
        return evaluate_flat(prep, C)
    if ineq == "low":
        return [r for r in evaluate_sandwich(prep, C, 1e9)
                if r.inequality == "integral-lower"]
    if ineq == "up":
        c_low = float(prep.scenario.constants.get("C_low", 1.0))
        return [r for r in evaluate_sandwich(prep, c_low, C)
                if r.inequality == "integral-upper"]
    raise ValueError(f"unknown inequality {ineq}")


def calibrate_constant(preps: list[PreparedScenario], ineq: str,
                       lo: float = 1e-9, hi: float = 1e9) -> float:
    """Smallest C (1e-3 relative) for which the inequality holds on every
    applicable evaluation and at least one evaluation is applicable."""
    import numpy as np

    def ok(C: float) -> bool:
        reports = [r for p in preps for r in _reports_for(p, ineq, C)]
        applicable = [r for r in reports if r.verdict != "not-applicable"]
        return bool(applicable) and all(r.holds for r in applicable)

    grid = np.geomspace(lo, hi, 240)
    first = None
    for k, c in enumerate(grid):
        if ok(float(c)):
            first = k
            break
    if first is None:
        raise NoApplicableScenarioError(
            f"no constant in [{lo}, {hi}] makes '{ineq}' hold")
    if first == 0:
        return float(grid[0])
    a, b = float(grid[first - 1]), float(grid[first])
    for _ in range(64):
        if b / a <= 1.001:
            break
        m = math.sqrt(a * b)
        if ok(m):
            b = m
        else:
            a = m
    return b


@dataclass
class RunReport:
    scenario_id: str
    certificates: list
    ot: dict
    flat: dict
    reports: list
    timings: dict

    def canonical_dict(self, include_timing: bool = False) -> dict:
        doc = {
            "scenario": self.scenario_id,
            "certificates": [c.to_json_dict() for c in self.certificates],
            "ot": self.ot,
            "flat": self.flat,
            "reports": [r.to_json_dict() for r in self.reports],
        }
        if include_timing:
            doc["timings"] = self.timings
        return doc

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.canonical_dict(), sort_keys=True,
                          separators=(",", ":")).encode()

    def all_hold(self) -> bool:
        return all(r.verdict != "fails" for r in self.reports)


def run_scenario(s: Scenario) -> RunReport:
    """Full pipeline: measures, certificates, transport, potential, scans,
    and every bound evaluation enabled for the scenario."""
    prep = prepare_scenario(s)
    consts = s.constants
    reports: list[BoundReport] = []
    reports.extend(evaluate_main(prep, float(consts.get("C_main", 1.0))))
    reports.extend(evaluate_flat(prep, float(consts.get("C_flat", 1.0))))
    for i, (psit, cfg, K, eps) in enumerate(prep.frames):
        reports.append(subdiff_slab_bound_check(psit, cfg, K, eps))
    if s.sandwich:
        reports.extend(evaluate_sandwich(prep,
                                         float(consts.get("C_low", 1.0)),
                                         float(consts.get("C_up", 1.0))))
    if s.kind != "quadratic-reference":
        window = rect_from_bounds(-10, -10, 10, 10)
        reports.append(verify_onesided(prep.psi, prep.mu, prep.nu, window))
        reports.append(verify_dual_side(prep.psi, prep.mu, prep.nu, window))
    flat = {
        "diameter": prep.flat_diameter,
        "witness": [[fmt_rat(p[0]), fmt_rat(p[1])] for p in prep.flat_witness]
        if prep.flat_witness else None,
    }
    ot = {
        "atoms": len(prep.mu) if prep.mu is not None else 0,
        "cost": float(prep.plan_cost) if prep.plan_cost is not None else None,
        "zero_gap": prep.gap_zero,
        "cyclically_monotone": prep.monotone,
        "certified": all(c.holds for c in prep.certificates),
    }
    if s.growth_fit:
        expo = growth_fit_exponent(prep)
        rep = BoundReport.from_sides("growth-exponent", abs(expo - 0.5), 0.075)
        rep.witness = {"exponent": expo}
        reports.append(rep)
    return RunReport(s.scenario_id, prep.certificates, ot, flat, reports,
                     prep.timings)


def emit_reports(reports: list[RunReport], fmt: str, path: str) -> None:
    """Deterministic CSV or JSON emission, merged in scenario-id order."""
    reports = sorted(reports, key=lambda r: r.scenario_id)
    if fmt == "json":
        doc = [r.canonical_dict(include_timing=True) for r in reports]
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return
    if fmt == "csv":
        lines = [",".join(CSV_HEADER)]
        for rr in reports:
            for rep in rr.reports:
                lines.append(",".join(map(str, rep.csv_row(rr.scenario_id))))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        return
    raise ValueError(f"unknown format {fmt}")


# -- the standard scenario family -------------------------------------------


def _lattice_segments(h: Fraction) -> list:
    y0s = [h, 2 * h, 3 * h]
    spans = [(Fraction(1, 16), Fraction(15, 16)), (Fraction(1, 8), Fraction(7, 8))]
    return [((x0, y0), (x1, y0)) for y0 in y0s for x0, x1 in spans]


def _quadratic_segments() -> list:
    f = Fraction
    return [
        ((f(-3, 10), f(0)), (f(3, 10), f(0))),
        ((f(-1, 4), f(0)), (f(1, 4), f(0))),
        ((f(-3, 10), f(-1, 10)), (f(3, 10), f(-1, 10))),
        ((f(-3, 10), f(1, 10)), (f(3, 10), f(1, 10))),
        ((f(0), f(-3, 10)), (f(0), f(3, 10))),
        ((f(-1, 10), f(-3, 10)), (f(-1, 10), f(3, 10))),
        ((f(-1, 4), f(-1, 8)), (f(1, 4), f(-1, 8))),
        ((f(0), f(-1, 4)), (f(0), f(1, 4))),
    ]


def standard_scenarios(seed: int = 20240817) -> list[Scenario]:
    """The lattice family and the smooth reference used by the acceptance
    suite; constant slots are filled in by calibration."""
    f = Fraction
    out = [Scenario(
        scenario_id="quadratic-h16",
        kind="quadratic-reference",
        spacing=f(1, 16),
        delta=f(3, 10),
        segments=_quadratic_segments(),
        sandwich=True,
        growth_fit=True,
    )]
    for name, h, jit in [("lattice-h8", f(1, 8), False),
                         ("lattice-h16", f(1, 16), False),
                         ("lattice-h32", f(1, 32), False),
                         ("perturbed-h16", f(1, 16), True)]:
        out.append(Scenario(
            scenario_id=name,
            kind="lattice-ot",
            spacing=h,
            jitter=jit,
            seed=seed,
            delta=f(13, 16),
            segments=_lattice_segments(h),
            h1=2 * h, lam1=f(4) if jit else f(9, 4),
            h2=2 * h, lam2=f(4) if jit else f(3),
            flat_h1=h, flat_lam1=f(4),
            flat_delta=f(1, 2),
            sandwich=not jit,
        ))
    return out
