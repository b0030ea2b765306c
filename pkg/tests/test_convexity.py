import numpy as np
import pytest

from carnot import (
    DomainError,
    NonConvexSliceError,
    ScalarField,
    SamplingPlan,
    build_function,
    closed_graph_diagnostic,
    dermax_check,
    directional_derivative,
    first_order_characterization,
    first_order_residual_ladder,
    hconvexity_check,
    horizontal_fd_gradient,
    lambda_subdiff_membership,
    mean_value_witness,
    reachable_gradient_sample,
    subdiff_membership,
    subdifferential_hull,
)
from carnot.convexity import (
    horizontal_lipschitz_estimate,
    shell_monotonicity_report,
)
from carnot.jets import lambda_max
from carnot.polynomials import GradedPolynomial
from carnot.registry import function_from_spec
from carnot.sampling import ball


@pytest.fixture(scope="module")
def quad_vert(h1):
    return build_function(h1, "quad_vertical", certify=False)


@pytest.fixture(scope="module")
def one_norm_f(h1):
    return build_function(h1, "one_norm", certify=False)


@pytest.fixture(scope="module")
def affine_f(h1):
    return build_function(h1, "affine", certify=False)


class TestHConvexity:
    def test_affine_exact(self, affine_f, plan):
        # affine along every horizontal line; only float re-association noise
        assert hconvexity_check(affine_f, plan).max_violation <= 5e-16

    def test_quad_plus_vertical(self, quad_vert, plan):
        # the vertical coordinate is affine along horizontal lines
        assert hconvexity_check(quad_vert, plan).max_violation <= 1e-12

    def test_concave_violation(self, h1, plan):
        neg = ScalarField(h1, lambda p: -p[..., 0] ** 2, label="-x1^2")
        rep = hconvexity_check(neg, plan)
        assert rep.max_violation >= 0.1
        assert rep.worst is not None

    def test_restricted_domain_segments(self, h1, plan):
        inside = lambda p: h1.norm(p) < 0.5
        u = ScalarField(h1, lambda p: np.sum(p[..., :2] ** 2, axis=-1), label="ball", domain=inside)
        rep = hconvexity_check(u, plan)
        assert rep.max_violation <= 1e-12

    def test_empty_domain_raises(self, h1, plan):
        from carnot import SamplingError

        u = ScalarField(h1, lambda p: np.zeros(p.shape[:-1]), label="void",
                        domain=lambda p: np.zeros(p.shape[:-1], dtype=bool))
        with pytest.raises(SamplingError):
            hconvexity_check(u, plan)


class TestGradients:
    def test_affine_gradient_exact(self, h1, affine_f):
        q = affine_f.gradient(h1.identity()[None])[0]
        g = horizontal_fd_gradient(affine_f, np.array([0.3, 0.1, -0.2]))
        assert np.max(np.abs(g - q)) < 1e-9

    def test_vertical_coordinate_gradient(self, h1):
        u = ScalarField(h1, lambda p: p[..., 2], label="x3")
        x = np.array([0.4, -0.8, 0.1])
        g = horizontal_fd_gradient(u, x)
        assert np.allclose(g, [-x[1] / 2, x[0] / 2], atol=1e-9)

    def test_matches_analytic(self, quad_vert):
        rng = np.random.default_rng(0)
        for x in rng.uniform(-1, 1, (10, 3)):
            g = horizontal_fd_gradient(quad_vert, x)
            ga = quad_vert.gradient(x[None])[0]
            assert np.max(np.abs(g - ga)) / (1 + np.max(np.abs(ga))) < 1e-7

    def test_domain_margin_error(self, h1):
        inside = lambda p: h1.norm(p) < 0.1
        u = ScalarField(h1, lambda p: np.sum(p[..., :2] ** 2, axis=-1), domain=inside)
        with pytest.raises(DomainError):
            horizontal_fd_gradient(u, np.array([0.0999999, 0.0, 0.0]), step=1e-3)


class TestReachableGradients:
    def test_smooth_spread_shrinks(self, quad_vert, plan):
        shells = reachable_gradient_sample(quad_vert, np.array([0.3, 0.2, 0.0]), plan)
        spreads = [np.max(np.linalg.norm(s.gradients - s.gradients.mean(axis=0), axis=1)) for s in shells]
        assert spreads[-1] < 1e-3
        assert spreads[-1] < spreads[0]

    def test_euclidean_norm_covers_circle(self, h1, plan):
        def grad(p):
            h = p[..., :2]
            n = np.linalg.norm(h, axis=-1, keepdims=True)
            return np.divide(h, n, out=np.zeros_like(h), where=n > 0)

        u = ScalarField(h1, lambda p: np.linalg.norm(p[..., :2], axis=-1), label="|pi1|", grad_h=grad)
        shells = reachable_gradient_sample(u, h1.identity(), plan)
        angles = np.sort(np.arctan2(*shells[-1].gradients.T[::-1]))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
        assert np.max(gaps) < np.pi / 2  # directions densely cover the circle

    def test_constant_function(self, h1, plan):
        u = ScalarField(h1, lambda p: np.full(p.shape[:-1], 2.0), label="const")
        shells = reachable_gradient_sample(u, h1.identity(), plan)
        assert all(np.max(np.abs(s.gradients)) < 1e-9 for s in shells)

    def test_fd_path_matches_analytic_path(self, h1, quad_vert):
        plan_fd = SamplingPlan(seed=0, use_analytic_gradient=False)
        plan_an = SamplingPlan(seed=0)
        x = np.array([0.1, -0.2, 0.3])
        h_fd = subdifferential_hull(quad_vert, x, plan_fd, flag_vertices=False)
        h_an = subdifferential_hull(quad_vert, x, plan_an, flag_vertices=False)
        assert np.max(np.abs(h_fd.centroid() - h_an.centroid())) < 1e-6


class TestSubdifferentialHull:
    def test_one_norm_square(self, one_norm_f, h1, plan):
        from carnot import ConvexPolytope, hausdorff_distance

        hull = subdifferential_hull(one_norm_f, h1.identity(), plan)
        square = ConvexPolytope.from_points([[1, 1], [1, -1], [-1, 1], [-1, -1]])
        assert hausdorff_distance(hull, square) < 0.05
        assert np.all(hull.vertex_violations <= plan.tol.hull_vertex)

    def test_smooth_singleton(self, quad_vert, plan):
        rng = np.random.default_rng(1)
        for x in rng.uniform(-0.8, 0.8, (5, 3)):
            assert subdifferential_hull(quad_vert, x, plan, flag_vertices=False).diameter() < 1e-3

    def test_affine_singleton_at_q(self, affine_f, h1, plan):
        hull = subdifferential_hull(affine_f, h1.identity(), plan)
        q = affine_f.gradient(h1.identity()[None])[0]
        assert hull.diameter() < 1e-12
        assert np.max(np.abs(hull.centroid() - q)) < 1e-12

    def test_one_norm_cube_in_3d(self, fs3, plan):
        # m1 = 3 exercises the incremental hull: the subdifferential of the
        # horizontal 1-norm at 0 is the cube [-1, 1]^3
        u = build_function(fs3, "one_norm", certify=False)
        hull = subdifferential_hull(u, fs3.identity(), plan, flag_vertices=False)
        assert len(hull.vertices) == 8
        assert np.allclose(np.sort(np.abs(hull.vertices), axis=None), 1.0)
        for e in np.eye(3):
            assert hull.support(e) == pytest.approx(1.0)

    def test_support_cloud_in_4d(self, h2, plan):
        # m1 = 4 keeps the raw gradient cloud; support queries stay exact
        u = build_function(h2, "one_norm", certify=False)
        hull = subdifferential_hull(u, h2.identity(), plan, flag_vertices=False)
        for e in np.eye(4):
            assert hull.support(e) == pytest.approx(1.0)
        assert hull.diameter() == pytest.approx(4.0, abs=1e-12)

    def test_smooth_singleton_other_groups(self, fs3, eng, plan):
        for desc in (fs3, eng):
            u = build_function(desc, "quad_vertical", certify=False)
            x = 0.3 * np.arange(1, desc.dim + 1) / desc.dim
            assert subdifferential_hull(u, x, plan, flag_vertices=False).diameter() < 1e-3


class TestMembership:
    def test_gradient_is_subgradient(self, quad_vert, plan):
        x = np.array([0.2, 0.3, -0.1])
        p = quad_vert.gradient(x[None])[0]
        assert subdiff_membership(quad_vert, x, p, plan) <= 1e-8

    def test_outside_point_violates(self, quad_vert, h1, plan):
        x = np.array([0.2, 0.3, -0.1])
        p = quad_vert.gradient(x[None])[0] + np.array([0.3, 0.0])
        assert subdiff_membership(quad_vert, x, p, plan) > 1e-3

    def test_affine_exact_zero(self, affine_f, h1, plan):
        q = affine_f.gradient(h1.identity()[None])[0]
        assert subdiff_membership(affine_f, h1.identity(), q, plan) == 0.0

    def test_lambda_zero_bitwise_equal(self, one_norm_f, h1, plan):
        rng = np.random.default_rng(2)
        for _ in range(5):
            x = rng.uniform(-0.5, 0.5, 3)
            p = rng.uniform(-1, 1, 2)
            a = subdiff_membership(one_norm_f, x, p, plan)
            b = lambda_subdiff_membership(one_norm_f, x, p, 0.0, plan)
            assert a == b

    def test_lambda_monotone(self, one_norm_f, h1, plan):
        p = np.array([1.3, 0.0])  # slightly outside the square
        v = [lambda_subdiff_membership(one_norm_f, h1.identity(), p, lam, plan) for lam in (0.0, 0.1, 0.5, 2.0)]
        assert all(b <= a + 1e-15 for a, b in zip(v, v[1:]))

    def test_negative_lambda_rejected(self, one_norm_f, h1, plan):
        with pytest.raises(ValueError):
            lambda_subdiff_membership(one_norm_f, h1.identity(), np.zeros(2), -0.1, plan)

    def test_quadratic_shift_absorbed(self, h1, plan):
        # u = U + P with U h-convex: the hull shift by grad P lands inside
        # the lambda-subdifferential at lambda = 1.05 * peak of |P^(2)|
        spec = {
            "composition": {
                "op": "sum",
                "terms": [
                    {"builtin": "one_norm"},
                    {"polynomial": [
                        {"exponents": [2, 0, 0], "coeff": -0.4},
                        {"exponents": [0, 0, 1], "coeff": 0.2},
                    ]},
                ],
            }
        }
        u = function_from_spec(h1, spec, certify=False)
        P = GradedPolynomial.from_terms(h1, [((2, 0, 0), -0.4), ((0, 0, 1), 0.2)])
        lam = 1.05 * lambda_max(P, seed=0)
        x = np.array([0.3, -0.2, 0.1])
        gradP = np.array([2 * (-0.4) * x[0] + 0.2 * (-x[1] / 2), 0.2 * (x[0] / 2)])
        p = np.sign(x[:2]) + gradP  # subgradient of U plus grad P
        assert lambda_subdiff_membership(u, x, p, lam, plan) <= 1e-9
        assert subdiff_membership(u, x, p, plan) > 1e-3  # the slack is needed


class TestDirectionalDerivative:
    def test_smooth_matches_gradient(self, quad_vert, plan):
        x = np.array([0.2, -0.3, 0.4])
        g = quad_vert.gradient(x[None])[0]
        for h in (np.array([1.0, 0.0]), np.array([0.6, -0.8])):
            d = directional_derivative(quad_vert, x, h, plan)
            assert abs(d - g @ h) / (1 + abs(g @ h)) < 1e-6

    def test_abs_both_sides(self, h1, plan):
        u = build_function(h1, "max_affine", certify=False)  # |x1|
        assert directional_derivative(u, h1.identity(), np.array([1.0, 0.0]), plan) == pytest.approx(1.0)
        assert directional_derivative(u, h1.identity(), np.array([-1.0, 0.0]), plan) == pytest.approx(1.0)

    def test_affine_exact(self, affine_f, h1, plan):
        q = affine_f.gradient(h1.identity()[None])[0]
        h = np.array([0.3, 0.7])
        assert directional_derivative(affine_f, h1.identity(), h, plan) == pytest.approx(q @ h, abs=1e-12)

    def test_nonconvex_flagged(self, h1, plan):
        neg = ScalarField(h1, lambda p: -p[..., 0] ** 2, label="-x1^2")
        with pytest.raises(NonConvexSliceError):
            directional_derivative(neg, h1.identity(), np.array([1.0, 0.0]), plan)


class TestDermax:
    def test_smooth(self, quad_vert, plan):
        rep = dermax_check(quad_vert, np.array([0.3, 0.1, -0.2]), plan, directions=50)
        assert rep.max_gap < 1e-4
        assert rep.max_subadd_violation < 1e-8

    def test_one_norm_at_kink(self, one_norm_f, h1, plan):
        # support of the square is |h1| + |h2|
        rep = dermax_check(one_norm_f, h1.identity(), plan, directions=50)
        assert rep.max_gap < 2e-2
        assert rep.max_subadd_violation < 1e-8

    def test_affine_zero(self, affine_f, h1, plan):
        rep = dermax_check(affine_f, h1.identity(), plan, directions=20)
        assert rep.max_gap < 1e-10


class TestMeanValue:
    def test_affine_any_t(self, affine_f, h1, plan):
        h = np.array([0.8, -0.4])
        w = mean_value_witness(affine_f, h1.identity(), h, plan)
        q = affine_f.gradient(h1.identity()[None])[0]
        assert w.residual < 1e-12
        assert abs(w.p @ h - q @ h) < 1e-9

    def test_quadratic_midpoint(self, quad_vert, h1, plan):
        w = mean_value_witness(quad_vert, h1.identity(), np.array([1.0, 0.0]), plan)
        assert w.t == pytest.approx(0.5, abs=1e-6)
        assert w.p[0] == pytest.approx(1.0, abs=1e-6)
        assert w.residual < 1e-10

    def test_abs_across_kink(self, h1, plan):
        u = build_function(h1, "max_affine", certify=False)  # |x1|
        w = mean_value_witness(u, np.array([-1.0, 0.0, 0.0]), np.array([2.0, 0.0]), plan)
        assert w.t == pytest.approx(0.5, abs=1e-6)
        assert abs(w.p[0]) < 1e-9
        assert w.residual < 1e-12

    def test_segment_outside_domain(self, h1, plan):
        inside = lambda p: h1.norm(p) < 0.5
        u = ScalarField(h1, lambda p: np.sum(p[..., :2] ** 2, axis=-1), domain=inside)
        with pytest.raises(DomainError):
            mean_value_witness(u, h1.identity(), np.array([1.0, 0.0]), plan)

    def test_bracketing_failure_on_jump(self, h1, plan):
        # a discontinuous step is not h-convex: the secant slope cannot be
        # bracketed by sampled subgradients anywhere on the segment
        from carnot import BracketingError

        u = ScalarField(h1, lambda p: (p[..., 0] >= 0.5).astype(float), label="step")
        with pytest.raises(BracketingError):
            mean_value_witness(u, h1.identity(), np.array([1.0, 0.0]), plan)

    def test_random_pairs_small_residual(self, quad_vert, one_norm_f, plan, h1):
        rng = np.random.default_rng(3)
        for _ in range(10):
            x = rng.uniform(-0.5, 0.5, 3)
            h = rng.uniform(-0.8, 0.8, 2)
            assert mean_value_witness(quad_vert, x, h, plan).residual < 1e-8
            assert mean_value_witness(one_norm_f, x, h, plan).residual < 1e-4


class TestClosedGraph:
    def test_smooth(self, quad_vert, plan, h1):
        rep = closed_graph_diagnostic(quad_vert, plan, points=ball(h1, 0.5, 5, plan.rng("t")))
        assert rep.max_violation <= plan.tol.closed_graph

    def test_kink_limit_from_positive_side(self, h1, plan):
        u = build_function(h1, "max_affine", certify=False)  # |x1|
        # gradients at x1 > 0 are e1; the limit e1 must be a subgradient at 0
        assert subdiff_membership(u, h1.identity(), np.array([1.0, 0.0]), plan) <= 1e-12
        rep = closed_graph_diagnostic(u, plan, points=h1.identity()[None])
        assert rep.max_violation <= plan.tol.closed_graph

    def test_affine(self, affine_f, plan, h1):
        rep = closed_graph_diagnostic(affine_f, plan, points=h1.identity()[None])
        assert rep.max_violation <= 1e-12


class TestFirstOrderCharacterization:
    def test_smooth_points(self, quad_vert, plan):
        rng = np.random.default_rng(4)
        for x in rng.uniform(-0.7, 0.7, (5, 3)):
            rep = first_order_characterization(quad_vert, x, plan)
            assert rep.singleton and rep.expansion_converges and rep.directions_agree

    def test_kink_point(self, h1, plan):
        u = build_function(h1, "max_affine", certify=False)
        rep = first_order_characterization(u, h1.identity(), plan)
        assert rep.hull_diameter >= 1.9
        assert not rep.expansion_converges
        assert rep.ladder[-1] > 0.2  # the ladder stalls
        assert rep.directions_agree

    def test_subjet_equivalence_at_kink(self, one_norm_f, h1, plan):
        # a vertex passing the o(|h|)-relaxed inequality also passes the
        # strict one; a point outside fails the relaxed ladder
        hull = subdifferential_hull(one_norm_f, h1.identity(), plan, flag_vertices=False)
        for v in hull.vertices:
            ladder = first_order_residual_ladder(one_norm_f, h1.identity(), v, plan)
            # relaxed: sup (u(x) + <p,h> - u(xh)) / |h| bounded by the ladder
            assert subdiff_membership(one_norm_f, h1.identity(), v, plan) <= 1e-10
        outside = np.array([1.5, 0.0])
        assert subdiff_membership(one_norm_f, h1.identity(), outside, plan) > 1e-3


class TestScaleDiagnostics:
    def test_hull_monotonicity(self, one_norm_f, quad_vert, plan, h1):
        for u in (one_norm_f, quad_vert):
            shells = reachable_gradient_sample(u, h1.identity(), plan)
            for excess, allowance in shell_monotonicity_report(shells):
                assert excess <= allowance + 1e-9

    def test_equiboundedness(self, one_norm_f, plan, h1):
        # all hull vertices over a compact sample are bounded by the local
        # horizontal Lipschitz constant + 10%
        L = horizontal_lipschitz_estimate(one_norm_f, h1.identity(), 0.5, plan)
        rng = np.random.default_rng(5)
        for x in ball(h1, 0.3, 5, rng):
            hull = subdifferential_hull(one_norm_f, x, plan, flag_vertices=False)
            assert np.max(np.linalg.norm(hull.vertices, axis=1)) <= 1.1 * L

    def test_growth_ratio_stable(self, quad_vert, plan, h1):
        # sup |p| over B(x, r) against the r-normalized mean of |u| over the
        # enlarged ball: finite and stable in r (the constant itself is not
        # asserted)
        rng = np.random.default_rng(6)
        x = np.array([0.2, 0.1, 0.05])
        ratios = []
        for r in (0.02, 0.04, 0.08):
            sup_p = 0.0
            for y in ball(h1, r, 4, rng):
                hull = subdifferential_hull(quad_vert, h1.product(x, y), plan, flag_vertices=False)
                sup_p = max(sup_p, float(np.max(np.linalg.norm(hull.vertices, axis=1))))
            pts = h1.translate_points(x, ball(h1, 15 * r, 200, rng))
            mean_u = float(np.mean(np.abs(quad_vert.value(pts))))
            ratios.append(sup_p / (mean_u / r))
        ratios = np.asarray(ratios)
        assert np.all(np.isfinite(ratios))
        assert np.max(ratios) / np.min(ratios) < 10.0
