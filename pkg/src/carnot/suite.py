"""The verification battery: one function per acceptance criterion.

Each function returns (records, curves); ``run_suite`` chains them all.
Records carry only deterministically reproducible numbers (runtime budgets
are asserted by the test harness, not stored in reports, so that identical
seeds produce byte-identical report files).
"""

from __future__ import annotations

import zlib

import numpy as np

from .convexity import (
    dermax_check,
    first_order_characterization,
    lambda_subdiff_membership,
    mean_value_witness,
    subdifferential_hull,
)
from .fields import field_coefficients
from .hull import ConvexPolytope, hausdorff_distance
from .jets import check_alij, lambda_max
from .polynomials import GradedPolynomial, monomials_up_to
from .registry import (
    build_function,
    build_group,
    function_from_spec,
    polyhedral_suite,
    smooth_suite,
)
from .reports import CheckRecord, curve_points
from .sampling import SamplingPlan, ball, unit_directions
from .second_order import characterize_second_order, fit_extended_differential

BUILTINS = ("heisenberg:1", "heisenberg:2", "free_step2:3", "engel")


def _rng(seed, tag):
    return np.random.default_rng((seed, zlib.crc32(tag.encode())))


def group_law_records(seed=0, plan=None):
    """Criterion 1: associativity, identity/inverse, dilation homomorphism."""
    records = []
    for spec in BUILTINS:
        desc = build_group(spec)
        rng = _rng(seed, f"group-law/{spec}")
        x, y, z = rng.uniform(-1.0, 1.0, (3, 1000, desc.dim))
        assoc = float(np.max(np.abs(desc.product(desc.product(x, y), z) - desc.product(x, desc.product(y, z)))))
        ident = float(np.max(np.abs(desc.product(x, np.zeros(desc.dim)) - x)))
        inv = float(np.max(np.abs(desc.product(x, desc.inverse(x)))))
        rs = rng.uniform(0.2, 2.0, 1000)
        hom = float(
            np.max(np.abs(desc.dilate(rs, desc.product(x, y)) - desc.product(desc.dilate(rs, x), desc.dilate(rs, y))))
        )
        records += [
            CheckRecord(f"group-law/{spec}/associativity", {"group": spec, "seed": seed}, assoc, 1e-12, assoc < 1e-12),
            CheckRecord(f"group-law/{spec}/identity", {"group": spec, "seed": seed}, ident, 1e-14, ident <= 1e-14),
            CheckRecord(f"group-law/{spec}/inverse", {"group": spec, "seed": seed}, inv, 1e-14, inv <= 1e-14),
            CheckRecord(f"group-law/{spec}/dilation", {"group": spec, "seed": seed}, hom, 1e-12, hom < 1e-12),
        ]
    return records, []


def heisenberg_closed_form_records(seed=0, plan=None):
    """Criterion 2: the hand product formula on the first Heisenberg group."""
    desc = build_group("heisenberg:1")
    rng = _rng(seed, "closed-form")
    x, y = rng.uniform(-1.0, 1.0, (2, 1000, 3))
    hand = np.stack(
        [
            x[:, 0] + y[:, 0],
            x[:, 1] + y[:, 1],
            x[:, 2] + y[:, 2] + 0.5 * (x[:, 0] * y[:, 1] - x[:, 1] * y[:, 0]),
        ],
        axis=-1,
    )
    err = float(np.max(np.abs(desc.product(x, y) - hand)))
    return [CheckRecord("closed-form/heisenberg1", {"seed": seed}, err, 1e-14, err <= 1e-14)], []


def structure_constant_records(seed=0, plan=None):
    """Criterion 3: the rotational constants and their antisymmetry."""
    records = []
    h1 = build_group("heisenberg:1")
    fc = field_coefficients(h1)
    v1 = abs(fc.alij[0, 0, 1] - 0.5)
    v2 = abs(fc.alij[0, 1, 0] + 0.5)
    records.append(
        CheckRecord("structure/heisenberg1/rotational", {"entries": "a^{31}_2, a^{32}_1"}, max(v1, v2), 1e-14, max(v1, v2) <= 1e-14)
    )
    groups = BUILTINS + ("euclidean:3",)
    worst = 0.0
    for spec in groups:
        worst = max(worst, field_coefficients(build_group(spec)).antisymmetry_residual())
    records.append(CheckRecord("structure/antisymmetry", {"groups": list(groups)}, worst, 1e-14, worst <= 1e-14))
    return records, []


def _random_poly(desc, rng):
    basis = monomials_up_to(desc, 2)
    coeffs = rng.uniform(-1.0, 1.0, len(basis))
    return GradedPolynomial.from_terms(desc, zip(basis, coeffs))


def field_identity_records(seed=0, plan=None):
    """Criterion 4: the second-derivative structure identity on random
    degree <= 2 polynomials."""
    records = []
    for spec in BUILTINS:
        desc = build_group(spec)
        rng = _rng(seed, f"alij/{spec}")
        worst = 0.0
        for _ in range(100):
            worst = max(worst, float(np.max(check_alij(_random_poly(desc, rng)))))
        records.append(CheckRecord(f"field-identity/{spec}", {"group": spec, "seed": seed}, worst, 1e-10, worst < 1e-10))
    return records, []


def hull_records(seed=0, plan=None):
    """Criterion 5: the kink hull is the unit square; smooth hulls are points."""
    plan = plan or SamplingPlan(seed=seed)
    desc = build_group("heisenberg:1")
    records = []

    square = ConvexPolytope.from_points([[1, 1], [1, -1], [-1, 1], [-1, -1]])
    hull = subdifferential_hull(build_function(desc, "one_norm", certify=False), desc.identity(), plan)
    dist = hausdorff_distance(hull, square)
    records.append(CheckRecord("hull/one-norm-square", {"seed": seed}, dist, 0.05, dist < 0.05))

    rng = _rng(seed, "hull-points")
    pts = ball(desc, plan.base_radius, 20, rng)
    worst = 0.0
    for u in smooth_suite(desc):
        for x in pts:
            worst = max(worst, subdifferential_hull(u, x, plan, flag_vertices=False).diameter())
    records.append(CheckRecord("hull/smooth-singleton", {"seed": seed, "points": 20}, worst, 1e-3, worst < 1e-3))
    return records, []


def first_order_records(seed=0, plan=None):
    """Criterion 6: singleton hull iff the first-order residual ladder drops."""
    plan = plan or SamplingPlan(seed=seed)
    desc = build_group("heisenberg:1")
    records = []
    u = build_function(desc, "quad_vertical", certify=False)
    rng = _rng(seed, "first-order-points")
    pts = ball(desc, plan.base_radius, 20, rng)
    agree = True
    worst_diam = 0.0
    for x in pts:
        rep = first_order_characterization(u, x, plan)
        agree &= rep.directions_agree and rep.singleton
        worst_diam = max(worst_diam, rep.hull_diameter)
    records.append(
        CheckRecord("first-order/smooth", {"seed": seed, "fn": u.label}, worst_diam, 1e-3, agree)
    )
    kink = build_function(desc, "max_affine", certify=False)
    rep = first_order_characterization(kink, desc.identity(), plan)
    stalls = (not rep.expansion_converges) and rep.ladder[-1] > 0.2
    ok = rep.hull_diameter >= 1.9 and stalls and rep.directions_agree
    records.append(CheckRecord("first-order/kink", {"fn": kink.label}, rep.hull_diameter, 1.9, ok))
    curves = curve_points("first-order/kink-ladder", plan.radii, rep.ladder)
    return records, curves


def _mvt_batch(u, desc, xs, hs, plan):
    worst = 0.0
    for x, h in zip(xs, hs):
        w = mean_value_witness(u, x, h, plan)
        worst = max(worst, w.residual)
    return worst


def mean_value_records(seed=0, plan=None):
    """Criterion 7: mean-value witnesses on smooth and polyhedral functions,
    plus the lambda-relaxed version for convex + quadratic sums."""
    plan = plan or SamplingPlan(seed=seed)
    records = []
    for spec in BUILTINS:
        desc = build_group(spec)
        rng = _rng(seed, f"mvt/{spec}")
        xs = ball(desc, 0.6, 100, rng)
        dirs = unit_directions(desc.m1, 100, seed=seed + 1)
        scales = rng.uniform(0.3, 1.0, 100)
        hs = dirs * scales[:, None]
        smooth = smooth_suite(desc)
        worst = 0.0
        for i, (x, h) in enumerate(zip(xs, hs)):
            worst = max(worst, _mvt_batch(smooth[i % len(smooth)], desc, [x], [h], plan))
        records.append(CheckRecord(f"mvt/{spec}/smooth", {"group": spec, "seed": seed}, worst, 1e-8, worst < 1e-8))
        poly = polyhedral_suite(desc)
        worst = 0.0
        for i, (x, h) in enumerate(zip(xs, hs)):
            worst = max(worst, _mvt_batch(poly[i % len(poly)], desc, [x], [h], plan))
        records.append(
            CheckRecord(f"mvt/{spec}/polyhedral", {"group": spec, "seed": seed}, worst, 1e-4, worst < 1e-4)
        )

    desc = build_group("heisenberg:1")
    spec = {
        "composition": {
            "op": "sum",
            "terms": [
                {"builtin": "one_norm"},
                {
                    "polynomial": [
                        {"exponents": [2, 0, 0], "coeff": 0.3},
                        {"exponents": [1, 1, 0], "coeff": -0.2},
                        {"exponents": [0, 0, 1], "coeff": 0.1},
                    ]
                },
            ],
        }
    }
    u = function_from_spec(desc, spec, certify=False)
    P = GradedPolynomial.from_terms(desc, [((2, 0, 0), 0.3), ((1, 1, 0), -0.2), ((0, 0, 1), 0.1)])
    lam = 1.05 * lambda_max(P, seed=seed)
    rng = _rng(seed, "mvt/lambda")
    xs = ball(desc, 0.5, 20, rng)
    hs = unit_directions(desc.m1, 20, seed=seed + 2) * rng.uniform(0.3, 0.8, 20)[:, None]
    worst = 0.0
    for x, h in zip(xs, hs):
        w = mean_value_witness(u, x, h, plan)
        worst = max(worst, lambda_subdiff_membership(u, w.point, w.p, lam, plan))
    records.append(
        CheckRecord("mvt/lambda-relaxed", {"lambda": lam, "seed": seed}, worst, plan.tol.mvt_lambda, worst < plan.tol.mvt_lambda)
    )
    return records, []


def dermax_records(seed=0, plan=None):
    """Criterion 8: directional derivatives equal the hull support function
    and are subadditive."""
    plan = plan or SamplingPlan(seed=seed)
    desc = build_group("heisenberg:1")
    records = []
    rng = _rng(seed, "dermax-points")
    fns = smooth_suite(desc) + polyhedral_suite(desc)
    for u in fns:
        pts = ball(desc, plan.base_radius, 10, rng)
        worst_gap = worst_sub = 0.0
        for x in pts:
            rep = dermax_check(u, x, plan, directions=50)
            worst_gap = max(worst_gap, rep.max_gap)
            worst_sub = max(worst_sub, rep.max_subadd_violation)
        metric = max(worst_gap, worst_sub)
        records.append(
            CheckRecord(f"dermax/{u.label}", {"fn": u.label, "seed": seed}, metric, 1e-2, metric < 1e-2)
        )
    return records, []


def second_order_records(seed=0, plan=None):
    """Criterion 9: the full second-order characterization at the model point."""
    plan = plan or SamplingPlan(seed=seed)
    desc = build_group("heisenberg:1")
    u = build_function(desc, "quad_vertical", alpha=1.0, certify=False)
    rep = characterize_second_order(u, desc.identity(), plan)
    records = []
    A_target = np.array([[2.0, -0.5], [0.5, 2.0]])
    ext, exp = rep.extended, rep.expansion
    a_err = float(np.max(np.abs(ext.A - A_target))) if ext else np.inf
    h_err = float(np.max(np.abs(exp.jet.hessian - 2 * np.eye(2)))) if exp else np.inf
    v_err = float(np.max(np.abs(exp.jet.v2 - 1.0))) if exp else np.inf
    records += [
        CheckRecord("second-order/h1/extended-diff", {"fn": u.label}, a_err, 1e-3, a_err < 1e-3),
        CheckRecord("second-order/h1/hessian", {"fn": u.label}, h_err, 1e-3, h_err < 1e-3),
        CheckRecord("second-order/h1/v2", {"fn": u.label}, v_err, 1e-3, v_err < 1e-3),
        CheckRecord(
            "second-order/h1/claim3",
            {"fn": u.label},
            rep.metrics.get("claim3_residual", np.inf),
            1e-3,
            bool(rep.claims.get("c3_identity", False)),
        ),
        CheckRecord(
            "second-order/h1/psd",
            {"fn": u.label},
            rep.metrics.get("min_eigenvalue", -np.inf),
            -1e-6,
            rep.metrics.get("min_eigenvalue", -np.inf) >= -1e-6,
        ),
        CheckRecord(
            "second-order/h1/equivalence",
            {"fn": u.label},
            None,
            None,
            rep.equivalence == "both converge",
            detail=rep.equivalence,
        ),
    ]
    curves = []
    if exp is not None:
        curves += curve_points("second-order/h1/expansion-residual", exp.taus, exp.residuals)
    if ext is not None:
        curves += curve_points("second-order/h1/gradient-residual", ext.radii, ext.residuals)
        curves += curve_points("second-order/h1/mignot-excess", ext.mignot_taus, ext.mignot_excess)

    kink = build_function(desc, "max_affine", certify=False)
    krep = characterize_second_order(kink, desc.identity(), plan)
    records.append(
        CheckRecord(
            "second-order/h1/kink-equivalence",
            {"fn": kink.label},
            None,
            None,
            krep.equivalence == "consistent: neither",
            detail=krep.equivalence,
        )
    )
    return records, curves


def euclidean_degeneration_records(seed=0, plan=None):
    """Criterion 10: on abelian R^2 the extended differential is the
    quadratic form matrix and is symmetric."""
    plan = plan or SamplingPlan(seed=seed)
    desc = build_group("euclidean:2")
    S = np.array([[1.3, 0.4], [0.4, 0.9]])
    u = build_function(desc, "euclidean_quadratic", S=S, certify=False)
    fit = fit_extended_differential(u, desc.identity(), plan, mignot=False)
    err = float(np.max(np.abs(fit.A - S)))
    skew = float(np.max(np.abs(fit.A - fit.A.T)))
    return [
        CheckRecord("euclidean/extended-diff", {"S": S.tolist()}, err, 1e-4, err < 1e-4),
        CheckRecord("euclidean/symmetry", {"S": S.tolist()}, skew, 1e-6, skew < 1e-6),
    ], []


def mignot_records(seed=0, plan=None):
    """Criterion 11: quotient hulls collapse onto the linearized gradient."""
    plan = plan or SamplingPlan(seed=seed)
    desc = build_group("heisenberg:1")
    records, curves = [], []
    for u in smooth_suite(desc):
        fit = fit_extended_differential(u, desc.identity(), plan, mignot=True)
        final = float(fit.mignot_excess[-1])
        ok = fit.mignot_ok
        records.append(CheckRecord(f"mignot/{u.label}", {"fn": u.label}, final, 1e-2, ok))
        curves += curve_points(f"mignot/{u.label}", fit.mignot_taus, fit.mignot_excess)
    return records, curves


def registry_certificate_records(seed=0, plan=None):
    """Registry invariant: every built-in function certifies as h-convex."""
    records = []
    desc = build_group("heisenberg:1")
    for name in ("affine", "quadratic", "quad_vertical", "max_affine", "one_norm"):
        u = build_function(desc, name, certify=True)
        records.append(
            CheckRecord(f"registry/certificate/{name}", {"fn": name}, u.certificate, 1e-10, u.certificate <= 1e-10)
        )
    return records, []


CRITERIA = (
    group_law_records,
    heisenberg_closed_form_records,
    structure_constant_records,
    field_identity_records,
    hull_records,
    first_order_records,
    mean_value_records,
    dermax_records,
    second_order_records,
    euclidean_degeneration_records,
    mignot_records,
    registry_certificate_records,
)


def run_suite(seed=0, plan=None):
    """Run the whole battery; returns (records, curves)."""
    records, curves = [], []
    for fn in CRITERIA:
        r, c = fn(seed, plan)
        records += r
        curves += c
    return records, curves
