"""Command-line surface: group arithmetic, convexity checks and the full
verification suite.

Exit codes: 0 all asserted checks pass, 1 a check failed, 2 configuration
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import traceback
from dataclasses import dataclass

import numpy as np

from . import suite as suite_mod
from .convexity import dermax_check, hconvexity_check, mean_value_witness, subdifferential_hull
from .errors import CarnotError, DescriptorError
from .groups import validate_descriptor
from .jets import check_alij, sym_hessian
from .polynomials import GradedPolynomial
from .registry import build_function, build_group, load_descriptor, load_function
from .reports import CheckRecord, curve_points, emit_report
from .sampling import SamplingPlan
from .second_order import characterize_second_order, fit_expansion
from .suite import _random_poly

OP_NAMES = (
    "group-validate",
    "group-product",
    "poly-hess",
    "poly-alij",
    "hconvex-check",
    "subdiff",
    "dermax",
    "mvt",
    "second-fit",
    "second-order-check",
    "suite",
)


@dataclass
class RunConfig:
    operation: str
    group: str | None = None
    descriptor_file: str | None = None
    force: bool = False
    fn: str | None = None
    fn_file: str | None = None
    poly: str | None = None
    point: str | None = None
    x: str | None = None
    y: str | None = None
    h: str | None = None
    count: int = 100
    seed: int = 0
    plan_file: str | None = None
    tol_overrides: tuple = ()
    out: str | None = None


def _vec(s, dim=None):
    v = np.array([float(t) for t in s.split(",")])
    if dim is not None and len(v) != dim:
        raise DescriptorError(f"expected {dim} coordinates, got {len(v)}")
    return v


def _plan(cfg):
    plan = SamplingPlan(seed=cfg.seed)
    if cfg.plan_file:
        with open(cfg.plan_file) as fh:
            data = json.load(fh)
        tol = data.pop("tol", None)
        if "radii" in data:
            data["radii"] = tuple(data["radii"])
        if "segment_scales" in data:
            data["segment_scales"] = tuple(data["segment_scales"])
        plan = dataclasses.replace(plan, **data)
        if tol:
            plan = dataclasses.replace(plan, tol=dataclasses.replace(plan.tol, **tol))
    if cfg.tol_overrides:
        kv = dict(item.split("=", 1) for item in cfg.tol_overrides)
        plan = dataclasses.replace(plan, tol=dataclasses.replace(plan.tol, **{k: float(v) for k, v in kv.items()}))
    return plan


def _group(cfg):
    if cfg.descriptor_file:
        return load_descriptor(cfg.descriptor_file, force=cfg.force)
    if not cfg.group:
        raise DescriptorError("either --group or --descriptor is required")
    return build_group(cfg.group)


def _function(cfg, desc):
    if cfg.fn_file:
        return load_function(desc, cfg.fn_file)
    if not cfg.fn:
        raise DescriptorError("either --fn or --fn-file is required")
    name, _, params = cfg.fn.partition(":")
    kwargs = json.loads(params) if params else {}
    return build_function(desc, name, **kwargs)


def _poly(cfg, desc):
    if cfg.poly is None:
        raise DescriptorError("--poly is required (JSON terms or @file)")
    raw = cfg.poly
    if raw.startswith("@"):
        with open(raw[1:]) as fh:
            terms = json.load(fh)
    else:
        terms = json.loads(raw)
    return GradedPolynomial.from_terms(desc, [(t["exponents"], t["coeff"]) for t in terms])


def run_command(cfg):
    """Dispatch one operation; returns the process exit code."""
    try:
        plan = _plan(cfg)
        records, curves = [], []
        if cfg.operation == "suite":
            records, curves = suite_mod.run_suite(seed=cfg.seed, plan=plan)
        elif cfg.operation == "group-validate":
            desc = load_descriptor(cfg.descriptor_file, force=True) if cfg.descriptor_file else build_group(cfg.group)
            report = validate_descriptor(desc)
            print(report)
            records.append(
                CheckRecord("group-validate", {"group": desc.name}, float(len(report.violations)), 0.0, report.ok)
            )
        elif cfg.operation == "group-product":
            desc = _group(cfg)
            z = desc.product(_vec(cfg.x, desc.dim), _vec(cfg.y, desc.dim))
            print(np.array2string(z, precision=15))
        elif cfg.operation == "poly-hess":
            desc = _group(cfg)
            H, v2 = sym_hessian(_poly(cfg, desc))
            print("hessian:", np.array2string(H, precision=12))
            print("v2 gradient:", np.array2string(v2, precision=12))
        elif cfg.operation == "poly-alij":
            desc = _group(cfg)
            rng = np.random.default_rng(cfg.seed)
            worst = 0.0
            for _ in range(cfg.count):
                worst = max(worst, float(np.max(check_alij(_random_poly(desc, rng)))))
            records.append(CheckRecord("poly-alij", {"group": desc.name, "count": cfg.count}, worst, 1e-10, worst < 1e-10))
        elif cfg.operation == "hconvex-check":
            desc = _group(cfg)
            u = _function(cfg, desc)
            rep = hconvexity_check(u, plan)
            records.append(
                CheckRecord(
                    "hconvex-check",
                    {"group": desc.name, "fn": u.label},
                    rep.max_violation,
                    plan.tol.hconvexity,
                    rep.max_violation <= plan.tol.hconvexity,
                    detail=f"{rep.samples} samples",
                )
            )
        elif cfg.operation == "subdiff":
            desc = _group(cfg)
            u = _function(cfg, desc)
            x = _vec(cfg.point, desc.dim)
            hull = subdifferential_hull(u, x, plan)
            print("vertices:")
            print(np.array2string(hull.vertices, precision=6))
            print(f"diameter: {hull.diameter():.6g}")
            worst = float(np.max(hull.vertex_violations))
            records.append(
                CheckRecord(
                    "subdiff/vertex-membership",
                    {"group": desc.name, "fn": u.label, "point": cfg.point},
                    worst,
                    plan.tol.hull_vertex,
                    worst <= plan.tol.hull_vertex,
                )
            )
        elif cfg.operation == "dermax":
            desc = _group(cfg)
            u = _function(cfg, desc)
            rep = dermax_check(u, _vec(cfg.point, desc.dim), plan)
            metric = max(rep.max_gap, rep.max_subadd_violation)
            records.append(
                CheckRecord(
                    "dermax",
                    {"group": desc.name, "fn": u.label, "point": cfg.point},
                    metric,
                    plan.tol.dermax,
                    metric < plan.tol.dermax,
                )
            )
        elif cfg.operation == "mvt":
            desc = _group(cfg)
            u = _function(cfg, desc)
            w = mean_value_witness(u, _vec(cfg.point, desc.dim), _vec(cfg.h, desc.m1), plan)
            print(f"t = {w.t:.6g}")
            print("p =", np.array2string(w.p, precision=10))
            records.append(
                CheckRecord(
                    "mvt",
                    {"group": desc.name, "fn": u.label, "point": cfg.point, "h": cfg.h},
                    w.residual,
                    plan.tol.mvt_polyhedral,
                    w.residual < plan.tol.mvt_polyhedral,
                )
            )
        elif cfg.operation == "second-fit":
            desc = _group(cfg)
            u = _function(cfg, desc)
            fit = fit_expansion(u, _vec(cfg.point, desc.dim), plan)
            print("hessian:", np.array2string(fit.jet.hessian, precision=8))
            print("v2:", np.array2string(fit.jet.v2, precision=8))
            records.append(
                CheckRecord(
                    "second-fit",
                    {"group": desc.name, "fn": u.label, "point": cfg.point},
                    float(fit.residuals[-1]),
                    plan.tol.fit,
                    fit.converged,
                )
            )
            curves += curve_points("second-fit/residual", fit.taus, fit.residuals)
        elif cfg.operation == "second-order-check":
            desc = _group(cfg)
            u = _function(cfg, desc)
            rep = characterize_second_order(u, _vec(cfg.point, desc.dim), plan)
            base = {"group": desc.name, "fn": u.label, "point": cfg.point}
            records.append(
                CheckRecord("second-order/equivalence", base, None, None, rep.claims["equivalence"], detail=rep.equivalence)
            )
            for claim in ("c1_v2_stable", "c2_expansion", "c3_identity", "psd"):
                known = claim in rep.claims
                records.append(
                    CheckRecord(
                        f"second-order/{claim}",
                        base,
                        rep.metrics.get(
                            {"c1_v2_stable": "v2_drift", "c2_expansion": "expansion_residual",
                             "c3_identity": "claim3_residual", "psd": "min_eigenvalue"}[claim]
                        ),
                        None,
                        bool(rep.claims.get(claim, rep.equivalence == "consistent: neither")),
                        detail="" if known else "not applicable (no second-order structure)",
                    )
                )
            if rep.expansion is not None:
                curves += curve_points("second-order/expansion-residual", rep.expansion.taus, rep.expansion.residuals)
            if rep.extended is not None:
                curves += curve_points("second-order/gradient-residual", rep.extended.radii, rep.extended.residuals)
        else:
            raise DescriptorError(f"unknown operation {cfg.operation!r}")

        json_path = csv_path = None
        if cfg.out:
            os.makedirs(cfg.out, exist_ok=True)
            json_path = os.path.join(cfg.out, "report.json")
            csv_path = os.path.join(cfg.out, "curves.csv")
        summary = emit_report(records, curves, json_path, csv_path, meta={"operation": cfg.operation, "seed": cfg.seed})
        if records:
            print(summary)
        return 0 if all(r.passed for r in records) else 1
    except (CarnotError, FileNotFoundError, KeyError, json.JSONDecodeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


def _parser():
    ap = argparse.ArgumentParser(prog="carnot", description=__doc__)
    sub = ap.add_subparsers(dest="operation", required=True)
    for name in OP_NAMES:
        p = sub.add_parser(name)
        p.add_argument("--group", help="builtin spec, e.g. heisenberg:1, free_step2:3, engel, euclidean:2")
        p.add_argument("--descriptor", dest="descriptor_file", help="JSON group descriptor file")
        p.add_argument("--force", action="store_true", help="load descriptors that fail validation")
        p.add_argument("--fn", help="registered function name, optionally name:{json params}")
        p.add_argument("--fn-file", dest="fn_file", help="function-spec JSON file")
        p.add_argument("--poly", help="polynomial terms as JSON, or @file")
        p.add_argument("--point", help="comma-separated coordinates")
        p.add_argument("--x", help="first factor (group-product)")
        p.add_argument("--y", help="second factor (group-product)")
        p.add_argument("--h", help="horizontal direction, comma-separated")
        p.add_argument("--count", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--plan-file", dest="plan_file", help="JSON overrides for the sampling plan")
        p.add_argument("--tol", action="append", default=[], dest="tol_overrides", metavar="KEY=VAL")
        p.add_argument("--out", help="directory for report.json and curves.csv")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    cfg = RunConfig(
        operation=args.operation,
        group=args.group,
        descriptor_file=args.descriptor_file,
        force=args.force,
        fn=args.fn,
        fn_file=args.fn_file,
        poly=args.poly,
        point=args.point,
        x=args.x,
        y=args.y,
        h=args.h,
        count=args.count,
        seed=args.seed,
        plan_file=args.plan_file,
        tol_overrides=tuple(args.tol_overrides),
        out=args.out,
    )
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
