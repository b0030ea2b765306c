"""Numerical first-order analysis of h-convex functions.

A function is h-convex when it is classically convex along every horizontal
line segment contained in its domain.  This module tests that property by
sampling, estimates subdifferential sets as convex hulls of gradients
sampled at nearby differentiability points, evaluates membership in the
(lambda-)subdifferential, computes one-sided horizontal directional
derivatives, and produces mean-value witnesses: a parameter t and a
subgradient p at the interior point x * delta_t h with <p, h> equal to the
secant slope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BracketingError,
    DomainError,
    NonConvexSliceError,
    SamplingError,
)
from .hull import ConvexPolytope
from .sampling import (
    SamplingPlan,
    ball,
    quasi_sphere,
    require_inside,
    segment_inside,
    unit_directions,
)

__all__ = [
    "ScalarField",
    "MvtWitness",
    "hconvexity_check",
    "horizontal_fd_gradient",
    "reachable_gradient_sample",
    "subdifferential_hull",
    "subdiff_membership",
    "lambda_subdiff_membership",
    "directional_derivative",
    "dermax_check",
    "mean_value_witness",
    "closed_graph_diagnostic",
    "first_order_residual_ladder",
    "first_order_characterization",
]


@dataclass
class ScalarField:
    """An evaluatable function on (a subset of) a stratified group.

    ``fn`` maps point arrays with trailing axis ``desc.dim`` to value arrays;
    set ``vectorized=False`` for scalar-only callables.  ``domain`` is an
    optional boolean predicate (None means the whole group), ``grad_h`` an
    optional analytic horizontal gradient with the same batching convention.
    """

    desc: object
    fn: object
    label: str = "u"
    domain: object = None
    grad_h: object = None
    vectorized: bool = True
    certificate: float | None = None

    def value(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.vectorized:
            return np.asarray(self.fn(pts), dtype=float)
        return np.apply_along_axis(lambda row: float(self.fn(row)), -1, pts)

    def inside(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.domain is None:
            return np.ones(pts.shape[:-1], dtype=bool)
        return np.asarray(self.domain(pts), dtype=bool)

    def gradient(self, pts):
        if self.grad_h is None:
            raise ValueError(f"{self.label!r} carries no analytic gradient")
        return np.asarray(self.grad_h(np.asarray(pts, dtype=float)), dtype=float)


@dataclass(frozen=True)
class MvtWitness:
    t: float
    p: np.ndarray
    residual: float
    point: np.ndarray


@dataclass(frozen=True)
class HConvexityReport:
    max_violation: float  # clamped at zero: 0 means consistent with h-convexity
    raw_max: float
    samples: int
    worst: dict | None

    def __str__(self):
        return f"h-convexity violation {self.max_violation:.3g} over {self.samples} samples"


# -- h-convexity ---------------------------------------------------------------


def _base_points(u, plan, tag):
    rng = plan.rng(tag)
    pts = [u.desc.identity()] if bool(np.all(u.inside(u.desc.identity()[None]))) else []
    for _ in range(6):
        cand = ball(u.desc, plan.base_radius, plan.base_count, rng)
        keep = cand[u.inside(cand)]
        pts.extend(list(keep))
        if len(pts) >= plan.base_count:
            break
    if not pts:
        raise SamplingError(f"no base points of {u.label!r} inside its domain")
    return np.asarray(pts[: plan.base_count])


def hconvexity_check(u, plan=None, base_points=None):
    """Sampled violation of midpoint convexity along horizontal segments.

    For base points x, horizontal h with x * [0, h] in the domain and a grid
    of lambda in [0, 1], evaluates u(x (lambda h)) - lambda u(xh) -
    (1 - lambda) u(x) and reports the largest positive value.
    """
    plan = plan or SamplingPlan()
    desc = u.desc
    xs = np.asarray(base_points) if base_points is not None else _base_points(u, plan, "hconvexity-base")
    dirs = unit_directions(desc.m1, plan.directions)
    lams = np.linspace(0.0, 1.0, plan.lambda_grid)
    raw = -np.inf
    worst = None
    count = 0
    for scale in plan.segment_scales:
        hs = desc.embed_horizontal(scale * dirs)  # (D, n)
        ends = desc.product(xs[:, None, :], hs[None, :, :])  # (B, D, n)
        if u.domain is not None:
            ts = np.linspace(0.0, 1.0, plan.segment_checks)
            seg = desc.product(xs[:, None, None, :], ts[None, None, :, None] * hs[None, :, None, :])
            ok = np.all(u.inside(seg), axis=-1)  # (B, D)
        else:
            ok = np.ones(ends.shape[:2], dtype=bool)
        if not np.any(ok):
            continue
        mids = desc.product(xs[:, None, None, :], lams[None, None, :, None] * hs[None, :, None, :])
        u_mid = u.value(mids)  # (B, D, L)
        u_base = u.value(xs)[:, None, None]
        u_end = u.value(ends)[:, :, None]
        viol = u_mid - (lams[None, None, :] * u_end + (1 - lams[None, None, :]) * u_base)
        viol = np.where(ok[:, :, None], viol, -np.inf)
        count += int(np.sum(ok)) * len(lams)
        m = float(np.max(viol))
        if m > raw:
            raw = m
            b, d, l = np.unravel_index(int(np.argmax(viol)), viol.shape)
            worst = {"x": xs[b].tolist(), "h": (scale * dirs[d]).tolist(), "lambda": float(lams[l])}
    if count == 0:
        raise SamplingError("no admissible horizontal segments found")
    return HConvexityReport(max(0.0, raw), raw, count, worst)


# -- gradients -----------------------------------------------------------------


def horizontal_fd_gradient(u, x, step=1e-6):
    """Central differences of t -> u(x * (t e_i)) over the horizontal basis."""
    desc = u.desc
    x = np.asarray(x, dtype=float)
    eye = np.eye(desc.m1)
    offs = desc.embed_horizontal(np.concatenate([step * eye, -step * eye]))  # (2 m1, n)
    pts = desc.translate_points(x, offs)
    require_inside(u, pts, "finite-difference stencil")
    vals = u.value(pts)
    return (vals[: desc.m1] - vals[desc.m1 :]) / (2 * step)


def _fd_gradients_batch(u, pts, step, rtol):
    """Two-step central differences for a batch of points.

    Returns (gradients, stable) where ``stable`` flags agreement between the
    full and the halved step within ``rtol`` -- the operational surrogate for
    "point of differentiability".
    """
    desc = u.desc
    m1 = desc.m1
    eye = np.eye(m1)
    offs = np.concatenate([step * eye, -step * eye, 0.5 * step * eye, -0.5 * step * eye])
    offs = desc.embed_horizontal(offs)  # (4 m1, n)
    stencil = desc.product(pts[:, None, :], offs[None, :, :])  # (K, 4 m1, n)
    inside = np.all(u.inside(stencil), axis=-1)
    vals = u.value(stencil)
    g_full = (vals[:, :m1] - vals[:, m1 : 2 * m1]) / (2 * step)
    g_half = (vals[:, 2 * m1 : 3 * m1] - vals[:, 3 * m1 :]) / step
    dev = np.linalg.norm(g_full - g_half, axis=-1)
    stable = inside & (dev <= rtol * (1.0 + np.linalg.norm(g_half, axis=-1)))
    return g_half, stable


def _shell_gradients(u, x, radius, plan, rng, count):
    """Horizontal gradients at sampled differentiability points of B(x, r)."""
    desc = u.desc
    x = np.asarray(x, dtype=float)
    use_analytic = plan.use_analytic_gradient and u.grad_h is not None
    collected = []
    for _ in range(4):
        ws = ball(desc, radius, count, rng)
        pts = desc.translate_points(x, ws)
        keep = u.inside(pts)
        pts = pts[keep]
        if len(pts) == 0:
            continue
        if use_analytic:
            collected.append(u.gradient(pts))
        else:
            step = min(plan.fd_step, radius / 10.0)
            grads, stable = _fd_gradients_batch(u, pts, step, plan.fd_stability_rtol)
            collected.append(grads[stable])
        if sum(len(c) for c in collected) >= count:
            break
    if not collected or sum(len(c) for c in collected) == 0:
        raise SamplingError(f"no stable gradient samples near the given point of {u.label!r}")
    return np.concatenate(collected)[:count]


@dataclass(frozen=True)
class ShellSample:
    radius: float
    gradients: np.ndarray


def reachable_gradient_sample(u, x, plan=None):
    """Gradients at sampled points of shrinking balls around x, per shell."""
    plan = plan or SamplingPlan()
    out = []
    for k, r in enumerate(plan.radii):
        grads = _shell_gradients(u, x, r, plan, plan.rng(f"shell-{k}"), plan.shell_samples)
        out.append(ShellSample(r, grads))
    return out


# -- subdifferential hulls and membership ---------------------------------------


def _membership_directions(plan, m1):
    dirs = unit_directions(m1, plan.directions)
    basis = np.concatenate([np.eye(m1), -np.eye(m1)])
    return np.concatenate([dirs, basis])


def _admissible_offsets(u, x, plan):
    """Horizontal offsets h (rows) whose segment x * [0, h] stays inside."""
    desc = u.desc
    dirs = _membership_directions(plan, desc.m1)
    scales = np.asarray(tuple(plan.segment_scales) + tuple(plan.radii))
    hs = (scales[:, None, None] * dirs[None, :, :]).reshape(-1, desc.m1)
    if u.domain is None:
        return hs
    ts = np.linspace(0.0, 1.0, plan.segment_checks)
    seg = desc.product(
        np.broadcast_to(x, (len(hs), 1, desc.dim)),
        ts[None, :, None] * desc.embed_horizontal(hs)[:, None, :],
    )
    ok = np.all(u.inside(seg), axis=-1)
    return hs[ok]


def _membership_core(u, x, P, lam, plan, offsets=None):
    """Max violation of the lambda-relaxed subgradient inequality.

    ``P`` is a (k, m1) matrix of candidate subgradients; one evaluation batch
    of u serves all rows.  Row-wise result: max over sampled admissible h of
    u(x) + <p, h> - lam |h|^2 - u(x h).
    """
    desc = u.desc
    x = np.asarray(x, dtype=float)
    hs = _admissible_offsets(u, x, plan) if offsets is None else offsets
    if len(hs) == 0:
        raise SamplingError("no admissible horizontal offsets at the given point")
    pts = desc.translate_points(x, desc.embed_horizontal(hs))
    uxh = u.value(pts)  # (H,)
    ux = float(u.value(x[None])[0])
    slack = lam * np.sum(hs * hs, axis=-1)
    viol = ux + P @ hs.T - slack[None, :] - uxh[None, :]
    return np.max(viol, axis=-1)


def lambda_subdiff_membership(u, x, p, lam, plan=None):
    """Max violation of u(xh) >= u(x) + <p, h> - lam |h|^2 over sampled h."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    plan = plan or SamplingPlan()
    P = np.atleast_2d(np.asarray(p, dtype=float))
    return float(_membership_core(u, x, P, float(lam), plan)[0])


def subdiff_membership(u, x, p, plan=None):
    """Max violation of the subgradient inequality; <= tol means consistent."""
    return lambda_subdiff_membership(u, x, p, 0.0, plan)


def subdifferential_hull(u, x, plan=None, flag_vertices=True):
    """Convex hull of the finest-shell reachable-gradient sample at x.

    Vertices individually failing the subgradient inequality beyond the
    vertex tolerance are flagged in ``vertex_violations`` (they are kept:
    flagging is diagnostic, not pruning).
    """
    plan = plan or SamplingPlan()
    x = np.asarray(x, dtype=float)
    grads = _shell_gradients(u, x, plan.radii[-1], plan, plan.rng("subdiff-hull"), plan.shell_samples)
    poly = ConvexPolytope.from_points(grads)
    if flag_vertices:
        poly.vertex_violations = _membership_core(u, x, poly.vertices, 0.0, plan)
    return poly


# -- directional derivatives -----------------------------------------------------


def _directional_quotients(u, x, hs, plan):
    """Difference quotients (u(x (lam h)) - u(x)) / lam on the lambda ladder.

    Returns (lams, Q) with Q of shape (steps, rows).  The ladder is shrunk
    until every evaluation stays inside the domain.
    """
    desc = u.desc
    x = np.asarray(x, dtype=float)
    hs = np.atleast_2d(np.asarray(hs, dtype=float))
    lam0 = plan.dd_lambda0
    for _ in range(40):
        lams = lam0 * 2.0 ** -np.arange(plan.dd_steps)
        pts = desc.product(x[None, None, :], lams[:, None, None] * desc.embed_horizontal(hs)[None, :, :])
        if bool(np.all(u.inside(pts))):
            break
        lam0 /= 2.0
    else:
        raise DomainError("no admissible lambda ladder along the requested directions")
    ux = float(u.value(x[None])[0])
    Q = (u.value(pts) - ux) / lams[:, None]
    return lams, Q


def directional_derivative(u, x, h, plan=None):
    """One-sided derivative of t -> u(x delta_t h) at t = 0+.

    Exploits monotonicity of convex difference quotients: the ladder must be
    nonincreasing (within slack) as lambda decreases, else the function is
    flagged as not h-convex along h.  The limit is Richardson-extrapolated
    from the two finest quotients.
    """
    plan = plan or SamplingPlan()
    _, Q = _directional_quotients(u, x, h, plan)
    q = Q[:, 0]
    slack = plan.tol.monotone_slack * (1.0 + float(np.max(np.abs(q))))
    if np.any(np.diff(q) > slack):
        raise NonConvexSliceError(f"difference quotients increase along the ladder: not h-convex along {h}")
    return float(2 * q[-1] - q[-2])


def _directional_derivatives(u, x, hs, plan):
    _, Q = _directional_quotients(u, x, hs, plan)
    slack = plan.tol.monotone_slack * (1.0 + float(np.max(np.abs(Q))))
    if np.any(np.diff(Q, axis=0) > slack):
        raise NonConvexSliceError("difference quotients increase along the ladder")
    return 2 * Q[-1] - Q[-2]


@dataclass(frozen=True)
class DermaxReport:
    max_gap: float
    max_subadd_violation: float
    directions: int

    def __str__(self):
        return f"derivative/support gap {self.max_gap:.3g}, subadditivity violation {self.max_subadd_violation:.3g}"


def dermax_check(u, x, plan=None, directions=None):
    """Compare directional derivatives with the hull support function.

    Also verifies subadditivity of h -> u'(x, h) on sampled direction pairs.
    """
    plan = plan or SamplingPlan()
    x = np.asarray(x, dtype=float)
    m1 = u.desc.m1
    count = directions or plan.directions
    dirs = unit_directions(m1, count)
    hull = subdifferential_hull(u, x, plan, flag_vertices=False)
    dd = _directional_derivatives(u, x, dirs, plan)
    gap = float(np.max(np.abs(dd - hull.support(dirs))))
    pair_sum = dirs + np.roll(dirs, 1, axis=0)
    dd_sum = _directional_derivatives(u, x, pair_sum, plan)
    subadd = float(np.max(dd_sum - (dd + np.roll(dd, 1))))
    return DermaxReport(gap, max(0.0, subadd), count)


# -- mean value witnesses ----------------------------------------------------------


def mean_value_witness(u, x, h, plan=None):
    """A parameter t* in [0, 1] and p in the subdifferential hull at
    x * delta_{t*} h with <p, h> equal to the secant slope u(xh) - u(x).

    The deviation psi(t) = u(x (t h)) - u(x) - t sigma vanishes at both ends,
    so it has an interior extremum; there the one-sided derivatives bracket
    sigma.  The hull at that point is intersected with the hyperplane
    <., h> = sigma (nearest vertex if sigma falls just outside the sampled
    support range).
    """
    plan = plan or SamplingPlan()
    desc = u.desc
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    hfull = desc.embed_horizontal(h)
    if not segment_inside(u, x, h, plan.segment_checks):
        raise DomainError("the horizontal segment leaves the domain")

    ux = float(u.value(x[None])[0])
    sigma = float(u.value(desc.product(x, hfull)[None])[0]) - ux

    ts = np.linspace(0.0, 1.0, 257)
    psi_pts = desc.product(x[None, :], ts[:, None] * hfull[None, :])
    psi = u.value(psi_pts) - ux - sigma * ts
    scale = 1.0 + abs(ux) + abs(sigma)
    i = int(np.argmax(np.abs(psi)))
    if abs(psi[i]) < 1e-13 * scale:
        t_star = 0.5
    else:
        sign = 1.0 if psi[i] > 0 else -1.0
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
        for _ in range(70):
            m1_, m2_ = lo + (hi - lo) / 3, hi - (hi - lo) / 3
            pts = desc.product(x[None, :], np.array([m1_, m2_])[:, None] * hfull[None, :])
            v1, v2 = (u.value(pts) - ux - sigma * np.array([m1_, m2_])) * sign
            if v1 < v2:
                lo = m1_
            else:
                hi = m2_
        t_star = 0.5 * (lo + hi)

    y = desc.product(x, t_star * hfull)
    hull = subdifferential_hull(u, y, plan, flag_vertices=False)
    support_vals = hull.vertices @ h
    smin, smax = float(np.min(support_vals)), float(np.max(support_vals))
    if sigma < smin - plan.tol.support_gap or sigma > smax + plan.tol.support_gap:
        raise BracketingError(
            f"secant slope {sigma:.4g} outside sampled support range [{smin:.4g}, {smax:.4g}]"
        )
    if sigma <= smin:
        p = hull.vertices[int(np.argmin(support_vals))]
    elif sigma >= smax:
        p = hull.vertices[int(np.argmax(support_vals))]
    else:
        v_lo = hull.vertices[int(np.argmin(support_vals))]
        v_hi = hull.vertices[int(np.argmax(support_vals))]
        theta = (sigma - smin) / (smax - smin)
        p = v_lo + theta * (v_hi - v_lo)
    residual = abs(sigma - float(p @ h))
    return MvtWitness(float(t_star), p, residual, y)


# -- closed graph and first-order characterization ----------------------------------


@dataclass(frozen=True)
class ClosedGraphReport:
    max_violation: float
    max_cauchy_gap: float
    cases: int


def closed_graph_diagnostic(u, plan=None, points=None):
    """Limits of subgradients along shrinking shells stay subgradients.

    For each target x, follows a sequence x_k -> x, selects p_k from the hull
    at x_k by a fixed support direction, and checks that the limiting p
    passes the subgradient inequality at x.
    """
    plan = plan or SamplingPlan()
    desc = u.desc
    xs = np.asarray(points) if points is not None else _base_points(u, plan, "closed-graph-base")
    approach = quasi_sphere(desc, len(xs), seed=3)
    select = unit_directions(desc.m1, len(xs), seed=5)
    worst = -np.inf
    cauchy = 0.0
    for x, w, nu in zip(xs, approach, select):
        ps = []
        for r in plan.radii:
            xk = desc.product(x, desc.dilate(r, w))
            if not bool(np.all(u.inside(xk[None]))):
                continue
            hull_k = subdifferential_hull(u, xk, plan, flag_vertices=False)
            ps.append(hull_k.argsupport(nu))
        if len(ps) < 2:
            raise SamplingError("approach sequence left the domain")
        ps = np.asarray(ps)
        cauchy = max(cauchy, float(np.max(np.linalg.norm(np.diff(ps[-3:], axis=0), axis=-1))))
        worst = max(worst, subdiff_membership(u, x, ps[-1], plan))
    return ClosedGraphReport(float(worst), cauchy, len(xs))


def first_order_residual_ladder(u, x, p, plan=None):
    """sup_w |u(xw) - u(x) - <p, pi_1 w>| / ||w|| over shrinking spheres."""
    plan = plan or SamplingPlan()
    desc = u.desc
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    ws = quasi_sphere(desc, plan.directions, seed=11)
    ux = float(u.value(x[None])[0])
    out = []
    for rho in plan.radii:
        w = desc.dilate(rho, ws)
        pts = desc.translate_points(x, w)
        keep = u.inside(pts)
        if not np.any(keep):
            out.append(np.nan)
            continue
        res = np.abs(u.value(pts[keep]) - ux - w[keep, : desc.m1] @ p) / rho
        out.append(float(np.max(res)))
    return np.asarray(out)


@dataclass(frozen=True)
class FirstOrderReport:
    hull_diameter: float
    ladder: np.ndarray
    singleton: bool
    expansion_converges: bool

    @property
    def directions_agree(self):
        return self.singleton == self.expansion_converges


def first_order_characterization(u, x, plan=None):
    """Singleton subdifferential versus vanishing first-order residual.

    The two sides of the characterization are computed independently: the
    hull diameter against the singleton tolerance, and the residual ladder
    against a relative-drop criterion.
    """
    plan = plan or SamplingPlan()
    hull = subdifferential_hull(u, x, plan, flag_vertices=False)
    diam = hull.diameter()
    ladder = first_order_residual_ladder(u, x, hull.centroid(), plan)
    first, last = float(ladder[0]), float(ladder[-1])
    converges = last < max(1e-9, 0.05 * first)
    return FirstOrderReport(diam, ladder, diam < plan.tol.singleton_diameter, converges)


# -- scale-space diagnostics ---------------------------------------------------------


def shell_monotonicity_report(shells, directions=256):
    """Support excess of finer-shell hulls over coarser ones, per pair.

    Finer hulls should sit inside coarser ones fattened by the observed
    gradient oscillation; returns (excess, allowance) pairs per transition.
    """
    out = []
    for coarse, fine in zip(shells, shells[1:]):
        A = ConvexPolytope.from_points(coarse.gradients)
        B = ConvexPolytope.from_points(fine.gradients)
        dirs = unit_directions(A.dim, directions)
        excess = float(np.max(B.support(dirs) - A.support(dirs)))
        out.append((max(0.0, excess), A.diameter() + 1e-9))
    return out


def horizontal_lipschitz_estimate(u, center, radius, plan=None, pairs=200):
    """Sampled Lipschitz constant of u along horizontal segments near a point."""
    plan = plan or SamplingPlan()
    desc = u.desc
    rng = plan.rng("lipschitz")
    ys = ball(desc, radius, pairs, rng)
    ys = desc.translate_points(np.asarray(center, dtype=float), ys)
    hs = 0.1 * radius * unit_directions(desc.m1, pairs, seed=13)
    pts = desc.product(ys, desc.embed_horizontal(hs))
    keep = u.inside(ys) & u.inside(pts)
    if not np.any(keep):
        raise SamplingError("no admissible horizontal pairs")
    num = np.abs(u.value(pts[keep]) - u.value(ys[keep]))
    return float(np.max(num / np.linalg.norm(hs[keep], axis=-1)))
