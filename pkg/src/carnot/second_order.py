"""Second-order analysis: difference quotients, expansion fits, and the
equivalence between second-order expansions and gradient differentiability.

Two independent estimators are run at a point: a least-squares fit of the
second difference quotients against a degree <= 2 model (yielding the
second-layer gradient and the symmetrized horizontal Hessian), and a fit of
the extended differential A from first-order expansions of the horizontal
gradient.  The characterization report checks that both converge or both
fail, that the fitted pieces satisfy the structure-constant identity
H_ij = A^i_j - sum_l a^{li}_j v2_l, and that the Hessian is positive
semidefinite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convexity import (
    ScalarField,
    hconvexity_check,
    subdifferential_hull,
    _fd_gradients_batch,
)
from .errors import (
    CarnotError,
    DomainError,
    NonSingletonSubdifferential,
    RankDeficientDesign,
    SamplingError,
)
from .fields import field_coefficients
from .jets import Jet2, jet_coefficients, jet_from_fit, poly_from_jet2
from .sampling import SamplingPlan, quasi_sphere, sphere_shell

__all__ = [
    "gradient_with_certificate",
    "second_quotient",
    "subdiff_quotient",
    "QuotientGrid",
    "build_quotient_grid",
    "ExpansionFit",
    "fit_expansion",
    "ExtendedDiffFit",
    "fit_extended_differential",
    "SecondOrderReport",
    "characterize_second_order",
    "psd_check",
]


def gradient_with_certificate(u, x, plan=None):
    """Horizontal gradient at x, certified by a singleton hull.

    The hull certificate is always computed, even when an analytic gradient
    is available: a pointwise formula may silently be wrong at a kink.
    """
    plan = plan or SamplingPlan()
    x = np.asarray(x, dtype=float)
    hull = subdifferential_hull(u, x, plan, flag_vertices=False)
    diam = hull.diameter()
    if diam > plan.tol.singleton_diameter:
        raise NonSingletonSubdifferential(diam)
    if plan.use_analytic_gradient and u.grad_h is not None:
        return u.gradient(x[None])[0], diam
    # certified singleton: a difference quotient at x itself is unbiased,
    # unlike the shell centroid, which is off by O(shell radius)
    g, stable = _fd_gradients_batch(u, x[None], plan.fd_step, plan.fd_stability_rtol)
    if stable[0]:
        return g[0], diam
    return hull.centroid(), diam


def second_quotient(u, x, tau, w, grad=None, plan=None):
    """(u(x delta_tau w) - u(x) - tau <grad, pi_1 w>) / tau^2, batched over w."""
    plan = plan or SamplingPlan()
    desc = u.desc
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if grad is None:
        grad, _ = gradient_with_certificate(u, x, plan)
    pts = desc.translate_points(x, desc.dilate(tau, w)) if w.ndim > 1 else desc.product(x, desc.dilate(tau, w))
    if not bool(np.all(u.inside(pts))):
        raise DomainError("dilated directions leave the domain")
    ux = float(u.value(x[None])[0])
    lin = w[..., : desc.m1] @ np.asarray(grad, dtype=float)
    return (u.value(pts) - ux - tau * lin) / tau**2


def quotient_field(u, x, tau, grad=None, plan=None):
    """The second difference quotient as a scalar field in w (it is h-convex
    whenever u is)."""
    plan = plan or SamplingPlan()
    x = np.asarray(x, dtype=float)
    if grad is None:
        grad, _ = gradient_with_certificate(u, x, plan)
    desc = u.desc

    def fn(ws):
        return second_quotient(u, x, tau, ws, grad=grad, plan=plan)

    dom = None
    if u.domain is not None:
        dom = lambda ws: u.inside(desc.translate_points(x, desc.dilate(tau, ws)))
    return ScalarField(desc, fn, label=f"D2[{u.label}]", domain=dom)


def subdiff_quotient(u, x, tau, w, plan=None, grad=None):
    """(subdifferential hull at x delta_tau w minus the gradient) / tau.

    Shell radii are shrunk by tau so that the hull resolution follows the
    zoom of the quotient map.
    """
    plan = plan or SamplingPlan()
    desc = u.desc
    x = np.asarray(x, dtype=float)
    if grad is None:
        grad, _ = gradient_with_certificate(u, x, plan)
    y = desc.product(x, desc.dilate(tau, np.asarray(w, dtype=float)))
    hull = subdifferential_hull(u, y, plan.scaled(tau), flag_vertices=False)
    return hull.translate(-np.asarray(grad)).scale(1.0 / tau)


# -- quotient grids and the expansion fit -----------------------------------------


@dataclass
class QuotientGrid:
    x: np.ndarray
    grad: np.ndarray
    taus: tuple
    W: np.ndarray  # (K, dim) directions, homogeneous norm <= radius
    values: np.ndarray  # (len(taus), K)


def _direction_set(desc, count):
    """Spread directions on the unit quasi-sphere plus pure-layer basis
    directions; the second-layer singles are what identifies v2."""
    base = [quasi_sphere(desc, count, seed=23)]
    eye = np.eye(desc.dim)
    base.append(eye[: desc.m1])
    base.append(-eye[: desc.m1])
    if desc.m2 > desc.m1:
        base.append(eye[desc.m1 : desc.m2])
        base.append(-eye[desc.m1 : desc.m2])
    return np.concatenate(base)


def build_quotient_grid(u, x, plan=None, radius=1.0):
    """Tabulate the second difference quotients over scales and directions."""
    plan = plan or SamplingPlan()
    desc = u.desc
    x = np.asarray(x, dtype=float)
    grad, _ = gradient_with_certificate(u, x, plan)
    W = desc.dilate(radius, _direction_set(desc, plan.so_directions))
    taus = np.asarray(plan.taus())
    for _ in range(30):
        pts = desc.translate_points(x, desc.dilate(taus[0], W))
        if bool(np.all(u.inside(pts))):
            break
        taus = taus / 2.0
    else:
        raise DomainError("could not fit the scale ladder inside the domain")
    values = np.stack([second_quotient(u, x, float(t), W, grad=grad, plan=plan) for t in taus])
    return QuotientGrid(x, np.asarray(grad), tuple(float(t) for t in taus), W, values)


@dataclass
class ExpansionFit:
    jet: Jet2
    taus: tuple
    residuals: np.ndarray
    v2_per_scale: np.ndarray
    converged: bool
    grid: QuotientGrid


def _design_matrix(desc, W):
    cols = []
    for l in range(desc.m1, desc.m2):
        cols.append(W[:, l])
    m1 = desc.m1
    for i in range(m1):
        for j in range(i + 1, m1):
            cols.append(W[:, i] * W[:, j])
    for i in range(m1):
        cols.append(0.5 * W[:, i] ** 2)
    return np.stack(cols, axis=-1)


def _unpack_theta(desc, theta):
    m1 = desc.m1
    nv = desc.m2 - desc.m1
    v2 = theta[:nv]
    H = np.zeros((m1, m1))
    k = nv
    for i in range(m1):
        for j in range(i + 1, m1):
            H[i, j] = H[j, i] = theta[k]
            k += 1
    for i in range(m1):
        H[i, i] = theta[k]
        k += 1
    return v2, H


def _curve_converged(res, tol, slack=1.1):
    res = np.asarray(res)
    if res[-1] >= tol:
        return False
    tail = res[-3:]
    decreasing = bool(np.all(tail[1:] <= slack * tail[:-1] + 1e-15))
    return decreasing or bool(np.all(tail < tol))


def fit_expansion(u, x, plan=None, grid=None):
    """Least-squares fit of the second quotients against the degree <= 2 model.

    The model <v2, pi_2 w> + (1/2) <H pi_1 w, pi_1 w> is fitted at the finest
    scale; the residual curve tracks sup-norm misfit per scale and must
    decrease below the fit tolerance for a "converged" verdict.
    """
    plan = plan or SamplingPlan()
    if grid is None:
        grid = build_quotient_grid(u, x, plan)
    desc = u.desc
    Phi = _design_matrix(desc, grid.W)
    p = Phi.shape[1]
    if np.linalg.matrix_rank(Phi) < p:
        raise RankDeficientDesign("direction set does not span the degree-2 model")
    thetas = np.stack([np.linalg.lstsq(Phi, grid.values[k], rcond=None)[0] for k in range(len(grid.taus))])
    v2_per_scale = thetas[:, : desc.m2 - desc.m1]
    theta = thetas[-1]
    v2, H = _unpack_theta(desc, theta)
    preds = Phi @ theta
    residuals = np.max(np.abs(grid.values - preds[None, :]), axis=1)
    ux = float(u.value(np.asarray(x, dtype=float)[None])[0])
    jet = jet_from_fit(desc, ux, grid.grad, v2, H)
    return ExpansionFit(jet, grid.taus, residuals, v2_per_scale, _curve_converged(residuals, plan.tol.fit), grid)


# -- extended differential ----------------------------------------------------------


@dataclass
class ExtendedDiffFit:
    A: np.ndarray  # (m1, m1); row j holds the coefficients of gradient component j
    grad: np.ndarray
    radii: tuple
    residuals: np.ndarray
    mignot_taus: tuple
    mignot_excess: np.ndarray
    converged: bool
    mignot_ok: bool


def fit_extended_differential(u, x, plan=None, mignot=True):
    """Fit the h-linear expansion of the horizontal gradient at x.

    Minimizes |grad u(xw) - grad u(x) - A pi_1 w| over samples in shrinking
    shells; the per-shell sup residual normalized by the shell radius must
    fall below the fit tolerance.  Optionally also runs the set-valued
    inclusion check: the quotient hulls (hull at x delta_tau w - grad)/tau
    must collapse onto {A pi_1 w} along the scale ladder.
    """
    plan = plan or SamplingPlan()
    desc = u.desc
    x = np.asarray(x, dtype=float)
    grad, _ = gradient_with_certificate(u, x, plan)
    use_analytic = plan.use_analytic_gradient and u.grad_h is not None

    ws_all, dg_all, shell_of = [], [], []
    rng = plan.rng("extdiff-shells")
    for k, r in enumerate(plan.radii):
        ws = sphere_shell(desc, r, plan.shell_samples, rng)
        pts = desc.translate_points(x, ws)
        keep = u.inside(pts)
        ws, pts = ws[keep], pts[keep]
        if len(pts) == 0:
            continue
        if use_analytic:
            grads = u.gradient(pts)
        else:
            step = min(plan.fd_step, r / 10.0)
            grads, stable = _fd_gradients_batch(u, pts, step, plan.fd_stability_rtol)
            ws, grads = ws[stable], grads[stable]
        if len(ws) < desc.m1 + 1:
            raise SamplingError(f"insufficient stable gradient samples on shell {r:g}")
        ws_all.append(ws)
        dg_all.append(grads - grad[None, :])
        shell_of.append(np.full(len(ws), k))

    ws_all = np.concatenate(ws_all)
    dg_all = np.concatenate(dg_all)
    shell_of = np.concatenate(shell_of)

    fine = shell_of >= max(0, len(plan.radii) - 3)
    W1 = ws_all[fine, : desc.m1]
    if np.linalg.matrix_rank(W1) < desc.m1:
        raise RankDeficientDesign("shell samples do not span the horizontal layer")
    At, *_ = np.linalg.lstsq(W1, dg_all[fine], rcond=None)
    A = At.T

    residuals = []
    for k, r in enumerate(plan.radii):
        rows = shell_of == k
        if not np.any(rows):
            residuals.append(np.nan)
            continue
        mis = dg_all[rows] - ws_all[rows, : desc.m1] @ At
        residuals.append(float(np.max(np.linalg.norm(mis, axis=-1))) / r)
    residuals = np.asarray(residuals)
    converged = _curve_converged(residuals, plan.tol.fit)

    if mignot:
        dirs = np.concatenate([quasi_sphere(desc, 6, seed=31), np.eye(desc.dim)[desc.m1 : desc.m2]])
        taus = plan.taus()
        excess = []
        for tau in taus:
            worst = 0.0
            for w in dirs:
                hull_q = subdiff_quotient(u, x, float(tau), w, plan, grad=grad)
                target = A @ w[: desc.m1]
                worst = max(worst, float(np.max(np.linalg.norm(hull_q.vertices - target[None, :], axis=-1))))
            excess.append(worst)
        excess = np.asarray(excess)
        mignot_ok = bool(excess[-1] < plan.tol.mignot and excess[-1] <= excess[0] + 1e-12)
    else:
        taus, excess, mignot_ok = (), np.asarray([]), True

    return ExtendedDiffFit(A, np.asarray(grad), tuple(plan.radii), residuals, tuple(taus), excess, converged, mignot_ok)


# -- the full characterization -------------------------------------------------------


@dataclass
class SecondOrderReport:
    expansion: ExpansionFit | None
    extended: ExtendedDiffFit | None
    expansion_error: str | None
    extended_error: str | None
    equivalence: str
    claims: dict
    metrics: dict

    @property
    def consistent(self):
        return self.equivalence in ("both converge", "consistent: neither")

    def passed(self):
        if self.equivalence == "consistent: neither":
            return True
        return self.consistent and all(v for v in self.claims.values())


def characterize_second_order(u, x, plan=None):
    """Run both second-order estimators independently and cross-check them.

    Verdicts: existence of the quadratic expansion must coincide with
    differentiability of the gradient ("both converge" or "consistent:
    neither"); when both converge, the fitted second-layer gradient must be
    scale-stable, the expansion must reproduce the quotients, the Hessian
    must match the skew-corrected extended differential entrywise, and it
    must be positive semidefinite.
    """
    plan = plan or SamplingPlan()
    desc = u.desc
    expansion = extended = None
    err_e = err_g = None
    try:
        expansion = fit_expansion(u, x, plan)
    except (CarnotError, np.linalg.LinAlgError) as exc:
        err_e = f"{type(exc).__name__}: {exc}"
    try:
        extended = fit_extended_differential(u, x, plan)
    except (CarnotError, np.linalg.LinAlgError) as exc:
        err_g = f"{type(exc).__name__}: {exc}"

    ok_e = expansion is not None and expansion.converged
    ok_g = extended is not None and extended.converged
    if ok_e and ok_g:
        equivalence = "both converge"
    elif not ok_e and not ok_g:
        equivalence = "consistent: neither"
    elif ok_e:
        equivalence = "inconsistent: expansion only"
    else:
        equivalence = "inconsistent: gradient only"

    claims = {"equivalence": equivalence in ("both converge", "consistent: neither")}
    metrics = {"equivalence": equivalence}
    if ok_e and ok_g:
        jet = expansion.jet
        fc = field_coefficients(desc)
        rhs = extended.A.T.copy()
        for l in range(fc.alij.shape[0]):
            rhs -= fc.alij[l] * jet.v2[l]
        res3 = float(np.max(np.abs(jet.hessian - rhs)))
        words = jet_coefficients(poly_from_jet2(jet))
        xixj = np.array([[words[(i, j)] for j in range(desc.m1)] for i in range(desc.m1)])
        res3b = float(np.max(np.abs(xixj - extended.A.T)))
        v2_tail = expansion.v2_per_scale[-3:]
        drift = float(np.max(np.abs(v2_tail - v2_tail[-1]))) if v2_tail.size else 0.0
        min_eig = psd_check(jet.hessian)
        claims.update(
            {
                "c1_v2_stable": bool(np.all(np.isfinite(jet.v2)) and drift < plan.tol.fit),
                "c2_expansion": bool(expansion.residuals[-1] < plan.tol.fit),
                "c3_identity": bool(max(res3, res3b) < plan.tol.fit),
                "psd": bool(min_eig >= -plan.tol.psd),
            }
        )
        metrics.update(
            {
                "v2_drift": drift,
                "expansion_residual": float(expansion.residuals[-1]),
                "claim3_residual": res3,
                "claim3_jet_residual": res3b,
                "min_eigenvalue": min_eig,
                "gradient_residual": float(extended.residuals[-1]),
            }
        )
    return SecondOrderReport(expansion, extended, err_e, err_g, equivalence, claims, metrics)


def psd_check(H, skew_tol=1e-12):
    """Minimum eigenvalue of a symmetric matrix by cyclic Jacobi rotations.

    Raises on input whose skew part exceeds ``skew_tol`` (relative).  The
    caller's positive-semidefiniteness criterion is min_eig >= -tol.
    """
    H = np.asarray(H, dtype=float)
    scale = max(1.0, float(np.max(np.abs(H))))
    if float(np.max(np.abs(H - H.T))) > skew_tol * scale:
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (H + H.T)
    n = A.shape[0]
    for _ in range(100):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= 1e-14 * scale:
            break
        for i in range(n - 1):
            for j in range(i + 1, n):
                if abs(A[i, j]) <= 1e-300:
                    continue
                theta = (A[j, j] - A[i, i]) / (2 * A[i, j])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1)
                s = t * c
                rot = np.eye(n)
                rot[i, i] = rot[j, j] = c
                rot[i, j] = s
                rot[j, i] = -s
                A = rot.T @ A @ rot
    return float(np.min(np.diag(A)))


def quotient_convexity_violation(u, x, tau, plan=None):
    """Sampled h-convexity violation of the second difference quotient."""
    plan = plan or SamplingPlan()
    qf = quotient_field(u, x, tau, plan=plan)
    return hconvexity_check(qf, plan).max_violation
