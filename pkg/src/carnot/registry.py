"""Built-in groups and h-convex test functions, plus the file formats.

Group descriptors can be loaded from JSON files with fields ``name``,
``layers`` (list of layer dimensions) and ``brackets`` (records
``{"i": .., "j": .., "k": .., "c": ..}`` with 1-based indices); missing
mirror entries are filled antisymmetrically.  Function specs are either
``{"builtin": name, "params": {...}}``, ``{"polynomial": [{"exponents":
[...], "coeff": c}, ...]}`` or ``{"composition": {"op": "sum"|"max",
"terms": [spec, ...]}}``.
"""

from __future__ import annotations

import json

import numpy as np

from .convexity import ScalarField, hconvexity_check
from .errors import DescriptorError
from .fields import apply_field, field_coefficients
from .groups import GroupDescriptor, validate_descriptor
from .polynomials import GradedPolynomial
from .sampling import SamplingPlan

__all__ = [
    "euclidean",
    "heisenberg",
    "free_step2",
    "engel",
    "GROUPS",
    "build_group",
    "load_descriptor",
    "FUNCTIONS",
    "build_function",
    "load_function",
    "smooth_suite",
    "polyhedral_suite",
]


# -- built-in groups -----------------------------------------------------------


def euclidean(n):
    """Abelian R^n: one layer, no brackets."""
    return GroupDescriptor(f"euclidean({n})", (n,), {})


def heisenberg(n=1):
    """Layers (2n, 1) with [e_{2i-1}, e_{2i}] = e_{2n+1}."""
    br = {}
    for i in range(n):
        br[(2 * i, 2 * i + 1, 2 * n)] = 1.0
        br[(2 * i + 1, 2 * i, 2 * n)] = -1.0
    return GroupDescriptor(f"heisenberg({n})", (2 * n, 1), br)


def free_step2(m):
    """Free nilpotent step 2 on m generators: layers (m, m(m-1)/2)."""
    br = {}
    k = m
    for i in range(m):
        for j in range(i + 1, m):
            br[(i, j, k)] = 1.0
            br[(j, i, k)] = -1.0
            k += 1
    return GroupDescriptor(f"free_step2({m})", (m, m * (m - 1) // 2), br)


def engel():
    """Step-3 group with layers (2, 1, 1): [e1,e2] = e3, [e1,e3] = e4."""
    br = {(0, 1, 2): 1.0, (1, 0, 2): -1.0, (0, 2, 3): 1.0, (2, 0, 3): -1.0}
    return GroupDescriptor("engel", (2, 1, 1), br)


GROUPS = {
    "euclidean": euclidean,
    "heisenberg": heisenberg,
    "free_step2": free_step2,
    "engel": engel,
}


def build_group(spec):
    """Build a built-in group from a spec string like ``heisenberg:1``."""
    if isinstance(spec, GroupDescriptor):
        return spec
    name, _, arg = str(spec).partition(":")
    if name not in GROUPS:
        raise DescriptorError(f"unknown group {name!r}; available: {sorted(GROUPS)}")
    builder = GROUPS[name]
    desc = builder(int(arg)) if arg else builder()
    report = validate_descriptor(desc)
    if not report.ok:
        raise DescriptorError(f"registry group {name!r} failed validation: {report}")
    return desc


def load_descriptor(path, force=False):
    """Load a group descriptor from a JSON file; reject invalid ones unless
    ``force`` is set."""
    with open(path) as fh:
        data = json.load(fh)
    try:
        layers = data["layers"]
        records = data.get("brackets", [])
        name = data.get("name", "descriptor")
    except (KeyError, TypeError) as exc:
        raise DescriptorError(f"malformed descriptor file {path}: {exc}") from exc
    brackets = {}
    for rec in records:
        i, j, k, c = int(rec["i"]) - 1, int(rec["j"]) - 1, int(rec["k"]) - 1, float(rec["c"])
        if (i, j, k) in brackets and brackets[(i, j, k)] != c:
            raise DescriptorError(f"conflicting bracket entries for ({i + 1},{j + 1},{k + 1})")
        brackets[(i, j, k)] = c
    for (i, j, k), c in list(brackets.items()):
        brackets.setdefault((j, i, k), -c)
    desc = GroupDescriptor(name, layers, brackets)
    report = validate_descriptor(desc)
    if not report.ok and not force:
        raise DescriptorError(f"descriptor failed validation (use force to load anyway):\n{report}")
    return desc


# -- built-in h-convex functions --------------------------------------------------


def _default_direction(m1):
    return np.array([0.9 * (-0.75) ** i for i in range(m1)])


def _poly_field(desc, P, label):
    fc = field_coefficients(desc)
    grads = [apply_field(fc, i, P) for i in range(desc.m1)]

    def grad_h(pts):
        return np.stack([g.evaluate(pts) for g in grads], axis=-1)

    return ScalarField(desc, P.evaluate, label=label, grad_h=grad_h)


def horizontal_affine(desc, q=None, c=0.0):
    q = np.asarray(q, dtype=float) if q is not None else _default_direction(desc.m1)
    c = float(c)

    def fn(pts):
        return pts[..., : desc.m1] @ q + c

    def grad_h(pts):
        return np.broadcast_to(q, pts.shape[:-1] + (desc.m1,)).copy()

    return ScalarField(desc, fn, label="affine", grad_h=grad_h)


def horizontal_quadratic(desc):
    """|pi_1 x|^2; convex along every horizontal line."""
    m1 = desc.m1

    def fn(pts):
        return np.sum(pts[..., :m1] ** 2, axis=-1)

    def grad_h(pts):
        return 2.0 * pts[..., :m1]

    return ScalarField(desc, fn, label="quadratic", grad_h=grad_h)


def quad_vertical(desc, alpha=1.0):
    """|pi_1 x|^2 + alpha * (first second-layer coordinate).

    The vertical coordinate is affine along horizontal lines, so the sum
    stays h-convex; its horizontal gradient picks up the rotational
    correction from the field coefficients.
    """
    if desc.step < 2:
        raise DescriptorError("quad_vertical needs a group of step >= 2")
    P = GradedPolynomial.from_terms(
        desc,
        [(tuple(2 if i == k else 0 for i in range(desc.dim)), 1.0) for k in range(desc.m1)]
        + [(tuple(1 if i == desc.m1 else 0 for i in range(desc.dim)), float(alpha))],
    )
    field = _poly_field(desc, P, label=f"quad_vertical(alpha={alpha:g})")
    return field


def max_affine(desc, Q=None, b=None):
    """max_k <q_k, pi_1 x> + b_k; the default pieces give |x_1|."""
    m1 = desc.m1
    if Q is None:
        Q = np.zeros((2, m1))
        Q[0, 0], Q[1, 0] = 1.0, -1.0
    Q = np.asarray(Q, dtype=float)
    b = np.zeros(len(Q)) if b is None else np.asarray(b, dtype=float)

    def branches(pts):
        return pts[..., :m1] @ Q.T + b

    def fn(pts):
        return np.max(branches(pts), axis=-1)

    def grad_h(pts):
        idx = np.argmax(branches(pts), axis=-1)
        return Q[idx]

    return ScalarField(desc, fn, label="max_affine", grad_h=grad_h)


def one_norm(desc):
    """sum_i |x_i| over the horizontal coordinates."""
    m1 = desc.m1

    def fn(pts):
        return np.sum(np.abs(pts[..., :m1]), axis=-1)

    def grad_h(pts):
        return np.sign(pts[..., :m1])

    return ScalarField(desc, fn, label="one_norm", grad_h=grad_h)


def euclidean_quadratic(desc, S=None):
    """(1/2) <S x, x> on a step-1 group (the classical convex oracle)."""
    if desc.step != 1:
        raise DescriptorError("euclidean_quadratic is a step-1 wrapper")
    if S is None:
        S = np.eye(desc.dim) + 0.25 * (np.arange(desc.dim)[:, None] == np.arange(desc.dim)[None, :] - 1)
        S = 0.5 * (S + S.T) + np.eye(desc.dim)
    S = np.asarray(S, dtype=float)

    def fn(pts):
        return 0.5 * np.einsum("...i,ij,...j->...", pts, S, pts)

    def grad_h(pts):
        return pts @ S.T

    return ScalarField(desc, fn, label="euclidean_quadratic", grad_h=grad_h)


def euclidean_wrapper(desc, fn, grad=None, label="wrapped"):
    """Expose a classical convex function on R^n as a step-1 field."""
    if desc.step != 1:
        raise DescriptorError("euclidean_wrapper is a step-1 wrapper")
    return ScalarField(desc, fn, label=label, grad_h=grad)


FUNCTIONS = {
    "affine": horizontal_affine,
    "quadratic": horizontal_quadratic,
    "quad_vertical": quad_vertical,
    "max_affine": max_affine,
    "one_norm": one_norm,
    "euclidean_quadratic": euclidean_quadratic,
}

_CERT_PLAN = SamplingPlan(
    radii=(0.2, 0.05, 0.012),
    shell_samples=16,
    directions=16,
    base_count=8,
    lambda_grid=5,
    segment_scales=(1.0, 0.3, 0.1),
)


def build_function(desc, name, certify=True, **params):
    """Instantiate a registered function; attaches an h-convexity certificate
    (the sampled violation at registration resolution) unless disabled."""
    if name not in FUNCTIONS:
        raise KeyError(f"unknown function {name!r}; available: {sorted(FUNCTIONS)}")
    field = FUNCTIONS[name](desc, **params)
    if certify:
        field.certificate = hconvexity_check(field, _CERT_PLAN).max_violation
    return field


def polynomial_field(desc, terms, label="polynomial", certify=True):
    """Field backed by a graded polynomial literal, with exact gradient."""
    P = GradedPolynomial.from_terms(desc, [(t["exponents"], t["coeff"]) for t in terms])
    field = _poly_field(desc, P, label)
    if certify:
        field.certificate = hconvexity_check(field, _CERT_PLAN).max_violation
    return field


def _combine(desc, op, fields):
    if op == "sum":
        def fn(pts):
            return sum(f.value(pts) for f in fields)

        grad = None
        if all(f.grad_h is not None for f in fields):
            def grad(pts):
                return sum(f.gradient(pts) for f in fields)
        label = "+".join(f.label for f in fields)
    elif op == "max":
        def fn(pts):
            return np.max(np.stack([f.value(pts) for f in fields]), axis=0)

        grad = None
        if all(f.grad_h is not None for f in fields):
            def grad(pts):
                vals = np.stack([f.value(pts) for f in fields])
                idx = np.argmax(vals, axis=0)
                gs = np.stack([f.gradient(pts) for f in fields])
                return np.take_along_axis(gs, idx[None, ..., None], axis=0)[0]
        label = "max(" + ",".join(f.label for f in fields) + ")"
    else:
        raise ValueError(f"unknown composition op {op!r}")
    doms = [f.domain for f in fields if f.domain is not None]
    domain = None
    if doms:
        def domain(pts):
            out = np.ones(np.asarray(pts).shape[:-1], dtype=bool)
            for d in doms:
                out &= np.asarray(d(pts), dtype=bool)
            return out
    return ScalarField(desc, fn, label=label, domain=domain, grad_h=grad)


def function_from_spec(desc, spec, certify=True):
    """Build a field from a function-spec dict (see module docstring)."""
    if "builtin" in spec:
        return build_function(desc, spec["builtin"], certify=certify, **spec.get("params", {}))
    if "polynomial" in spec:
        return polynomial_field(desc, spec["polynomial"], certify=certify)
    if "composition" in spec:
        comp = spec["composition"]
        fields = [function_from_spec(desc, s, certify=False) for s in comp["terms"]]
        field = _combine(desc, comp["op"], fields)
        if certify:
            field.certificate = hconvexity_check(field, _CERT_PLAN).max_violation
        return field
    raise ValueError("function spec needs one of: builtin, polynomial, composition")


def load_function(desc, path, certify=True):
    with open(path) as fh:
        return function_from_spec(desc, json.load(fh), certify=certify)


def smooth_suite(desc):
    """The smooth registry functions available on a descriptor."""
    names = ["affine", "quadratic"]
    if desc.step >= 2:
        names.append("quad_vertical")
    if desc.step == 1:
        names.append("euclidean_quadratic")
    return [build_function(desc, n, certify=False) for n in names]


def polyhedral_suite(desc):
    return [build_function(desc, n, certify=False) for n in ("one_norm", "max_affine")]
