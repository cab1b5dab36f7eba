"""Command-line front end.

Exit codes: 0 when every evaluated verdict holds, 1 when some verdict
fails, 2 on errors.  OTLAB_THREADS caps scenario-level parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .errors import OTLabError
from .geometry.primitives import parse_rat, fmt_rat
from .geometry.pwl import PWLConvexFunction
from .measures import Rect, WeightedPointCloud, rect_from_bounds
from .report import BoundParams, CSV_HEADER


def _load(path):
    with open(path) as fh:
        return json.load(fh)


def _dump(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _params_from_doc(doc) -> BoundParams:
    return BoundParams(**{k: float(v) for k, v in doc.items()})


def cmd_solve(args) -> int:
    from .transport import duality_gap, extract_potential, solve_ot

    mu = WeightedPointCloud.from_json_dict(_load(args.mu))
    nu = WeightedPointCloud.from_json_dict(_load(args.nu))
    plan, duals = solve_ot(mu, nu)
    gap = duality_gap(plan, duals)
    if args.out:
        _dump(plan.to_json_dict(), args.out)
    if args.potential:
        psi = extract_potential(mu, duals)
        _dump(psi.to_json_dict(), args.potential)
    print(f"cost {float(plan.cost())}  duality-gap {fmt_rat(gap)}")
    return 0 if gap == 0 else 1


def cmd_verify(args) -> int:
    from .transport import verify_dual_side, verify_onesided

    psi = PWLConvexFunction.from_json_dict(_load(args.potential))
    mu = WeightedPointCloud.from_json_dict(_load(args.mu))
    nu = WeightedPointCloud.from_json_dict(_load(args.nu))
    window = rect_from_bounds(*(args.window or (-1e9, -1e9, 1e9, 1e9)))
    fn = verify_dual_side if args.dual else verify_onesided
    rep = fn(psi, mu, nu, window)
    print(f"{rep.inequality}: {rep.verdict}"
          + (f"  witness {rep.witness}" if rep.witness else ""))
    return 0 if rep.holds else 1


def cmd_flat_scan(args) -> int:
    from .convexity import max_flat_diameter
    from .geometry.polygon import rect_polygon

    psi = PWLConvexFunction.from_json_dict(_load(args.potential))
    x0, y0, x1, y1 = (parse_rat(v) for v in args.region)
    region = rect_polygon((x0 + x1) / 2, (y0 + y1) / 2,
                          (x1 - x0) / 2, (y1 - y0) / 2)
    d, wit = max_flat_diameter(psi, region, parse_rat(args.tol))
    print(f"flat-diameter {d}")
    if wit:
        print(f"witness {[(fmt_rat(p[0]), fmt_rat(p[1])) for p in wit]}")
    return 0


def cmd_bound_check(args) -> int:
    from .convexity import (corollary_flat_bound, c1_modulus_eval,
                            gamma_lower_bound, main_bound_check)

    doc = _load(args.params)
    if args.inequality == "main":
        rep = main_bound_check(_params_from_doc(doc))
    elif args.inequality == "flat":
        rep = corollary_flat_bound(_params_from_doc(doc))
    elif args.inequality == "gamma-lower":
        val = gamma_lower_bound(_params_from_doc(doc))
        print(f"gamma-lower-bound {val}")
        return 0
    elif args.inequality == "c1":
        dz = doc.pop("dz")
        val = c1_modulus_eval(_params_from_doc(doc), float(dz))
        print(f"c1-modulus {val}")
        return 0
    else:
        raise OTLabError(f"unknown inequality {args.inequality}")
    print(f"{rep.inequality}: lhs={rep.lhs} rhs={rep.rhs} {rep.verdict}")
    return 0 if rep.verdict != "fails" else 1


def cmd_hall(args) -> int:
    from .hall import SupportGraph, check_hall, find_permutation

    graph = SupportGraph.from_json_dict(_load(args.matrix))
    if args.permute:
        sigma = find_permutation(graph)
        print(" ".join(map(str, sigma)))
        return 0
    ok = check_hall(graph)
    print("hall-condition holds" if ok else "hall-condition fails")
    return 0 if ok else 1


def cmd_integral(args) -> int:
    from .integral import FrameConfig, displacement_integral

    psi = PWLConvexFunction.from_json_dict(_load(args.potential))
    fdoc = _load(args.frame)
    cfg = FrameConfig(
        a=(parse_rat(fdoc["a"][0]), parse_rat(fdoc["a"][1])),
        b=(parse_rat(fdoc["b"][0]), parse_rat(fdoc["b"][1])),
        ell=parse_rat(fdoc["ell"]),
        delta=parse_rat(fdoc["delta"]),
        gamma=float(args.gamma),
    )
    print(f"displacement-integral {displacement_integral(psi, cfg)}")
    return 0


def cmd_appendix(args) -> int:
    import numpy as np

    from .smooth import (GridFunction, affine_flat_bound, fischer_pipeline_check,
                         heinz_check_2d, varphi_profile)

    doc = _load(args.params) if args.params else {}
    if args.check == "varphi":
        val = varphi_profile(float(doc["s"]), int(doc["n"]), int(doc["d"]))
        print(f"varphi {val}")
        return 0
    if args.check == "affine":
        val = affine_flat_bound(int(doc["n"]), int(doc["d"]), float(doc["ell"]),
                                float(doc["delta"]), float(doc["lam"]),
                                float(doc["grad_inf"]), float(doc.get("C", 1)))
        print(f"affine-flat-bound {val}")
        return 0
    lam = float(doc.get("lam", 1.0))
    if args.check == "heinz2d":
        n = int(doc.get("grid", 129))
        f = GridFunction.from_callable(
            lambda x, y: (x * x + y * y) / (2 * lam), (-1.0, -1.0),
            2.0 / (n - 1), (n, n))
        rep = heinz_check_2d(f, lam, (0.0, 0.0), float(doc.get("angle", 0.0)),
                             float(doc.get("ell", 0.25)),
                             float(doc.get("delta", 1.0)))
    elif args.check == "fischer":
        n = int(doc.get("grid", 21))
        ndim = int(doc.get("ndim", 3))
        axes = tuple(n for _ in range(ndim))
        f = GridFunction.from_callable(
            lambda *xs: sum(x * x for x in xs) / (2 * lam),
            tuple(-1.0 for _ in range(ndim)), 2.0 / (n - 1), axes)
        import math

        K = doc.get("K", math.sqrt(ndim) / lam)
        rep = fischer_pipeline_check(f, int(doc.get("d", 2)), lam,
                                     float(doc.get("ell", 0.25)),
                                     float(doc.get("delta", 1.0)),
                                     float(doc.get("gamma", 0.05)), float(K),
                                     C=float(doc.get("C", 8.0)))
    else:
        raise OTLabError(f"unknown check {args.check}")
    print(f"{rep.inequality}: lhs={rep.lhs} rhs={rep.rhs} {rep.verdict}")
    return 0 if rep.verdict != "fails" else 1


def _run_one(doc):
    from .harness import Scenario, run_scenario

    return run_scenario(Scenario.from_json_dict(doc))


def cmd_run(args) -> int:
    from .harness import Scenario, emit_reports, run_scenario, standard_scenarios

    if args.standard:
        scenarios = standard_scenarios()
    else:
        scenarios = [Scenario.from_json_dict(_load(p)) for p in args.scenario]
    threads = int(os.environ.get("OTLAB_THREADS", "1"))
    if threads > 1 and len(scenarios) > 1:
        from concurrent.futures import ProcessPoolExecutor

        docs = [s.to_json_dict() for s in scenarios]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(_run_one, docs))
    else:
        reports = [run_scenario(s) for s in scenarios]
    reports.sort(key=lambda r: r.scenario_id)
    if args.out:
        emit_reports(reports, "json", args.out)
    if args.csv:
        emit_reports(reports, "csv", args.csv)
    bad = 0
    for r in reports:
        for rep in r.reports:
            mark = rep.verdict
            if rep.verdict == "fails":
                bad += 1
            print(f"{r.scenario_id} {rep.inequality}: {mark}")
    return 1 if bad else 0


def cmd_calibrate(args) -> int:
    from .harness import (Scenario, calibrate_constant, prepare_scenario,
                          standard_scenarios)

    if args.standard:
        scenarios = standard_scenarios()
    else:
        scenarios = [Scenario.from_json_dict(_load(p)) for p in args.scenario]
    preps = [prepare_scenario(s) for s in scenarios]
    c = calibrate_constant(preps, args.inequality)
    print(f"C_{args.inequality} {c}")
    return 0


def cmd_report(args) -> int:
    rows = [",".join(CSV_HEADER)]
    docs = []
    for path in args.inputs:
        docs.extend(_load(path))
    docs.sort(key=lambda d: d["scenario"])
    for doc in docs:
        for rep in doc["reports"]:
            p = rep.get("params", {})
            rows.append(",".join(map(str, [
                doc["scenario"], rep["inequality"], repr(rep["lhs"]),
                repr(rep["rhs"]), rep["verdict"],
                *(repr(p.get(k, float("nan"))) for k in
                  ("ell", "delta", "gamma", "K", "eps", "h1", "h2",
                   "lam1", "lam2", "C"))])))
    out = "\n".join(rows) + "\n"
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="otlab", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("solve", help="exact quadratic-cost transport")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--out")
    p.add_argument("--potential")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("verify", help="one-sided measure inequalities")
    p.add_argument("--potential", required=True)
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--dual", action="store_true")
    p.add_argument("--window", nargs=4, type=float)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("flat-scan", help="largest flat part of a potential")
    p.add_argument("--potential", required=True)
    p.add_argument("--region", nargs=4, required=True)
    p.add_argument("--tol", default="0")
    p.set_defaults(fn=cmd_flat_scan)

    p = sub.add_parser("bound-check", help="evaluate a quantitative bound")
    p.add_argument("--inequality", required=True,
                   choices=["main", "flat", "c1", "gamma-lower"])
    p.add_argument("--params", required=True)
    p.set_defaults(fn=cmd_bound_check)

    p = sub.add_parser("hall", help="support-structure feasibility")
    p.add_argument("--matrix", required=True)
    p.add_argument("--permute", action="store_true")
    p.add_argument("--check", action="store_true")
    p.set_defaults(fn=cmd_hall)

    p = sub.add_parser("integral", help="weighted displacement integral")
    p.add_argument("--potential", required=True)
    p.add_argument("--frame", required=True)
    p.add_argument("--gamma", required=True, type=float)
    p.set_defaults(fn=cmd_integral)

    p = sub.add_parser("appendix", help="smooth-grid verifiers")
    p.add_argument("--check", required=True,
                   choices=["heinz2d", "varphi", "affine", "fischer"])
    p.add_argument("--params")
    p.set_defaults(fn=cmd_appendix)

    p = sub.add_parser("run", help="run scenarios end to end")
    p.add_argument("--scenario", action="append", default=[])
    p.add_argument("--standard", action="store_true")
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("calibrate", help="fit a universal-constant slot")
    p.add_argument("--inequality", required=True,
                   choices=["main", "flat", "low", "up"])
    p.add_argument("--scenario", action="append", default=[])
    p.add_argument("--standard", action="store_true")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("report", help="merge run reports into CSV")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except OTLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
