import numpy as np
import pytest

from carnot import (
    GradedPolynomial,
    apply_field,
    check_alij,
    field_coefficients,
    jet_coefficients,
    lambda_max,
    left_translate_poly,
    monomials_up_to,
    poly_from_jet2,
    sym_hessian,
)
from carnot.jets import jet_from_fit


def random_deg2(desc, rng):
    basis = monomials_up_to(desc, 2)
    return GradedPolynomial.from_terms(desc, zip(basis, rng.uniform(-1, 1, len(basis))))


class TestJetCoefficients:
    def test_pure_square(self, h1):
        p = GradedPolynomial.from_terms(h1, [((2, 0, 0), 1.0)])
        words = jet_coefficients(p)
        assert words[(0, 0)] == 2.0
        assert all(v == 0.0 for w, v in words.items() if w != (0, 0))

    def test_vertical_coordinate(self, h1):
        words = jet_coefficients(GradedPolynomial.coordinate(h1, 2))
        assert words[(2,)] == 1.0
        assert words[(0, 1)] == 0.5
        assert words[(1, 0)] == -0.5
        assert words[()] == 0.0

    def test_zero(self, h1):
        words = jet_coefficients(GradedPolynomial.zero(h1))
        assert all(v == 0.0 for v in words.values())

    def test_degree_guard(self, h1):
        with pytest.raises(ValueError):
            jet_coefficients(GradedPolynomial.from_terms(h1, [((1, 0, 1), 1.0)]))

    def test_roundtrip_injectivity(self, h1, fs3):
        rng = np.random.default_rng(4)
        for desc in (h1, fs3):
            for _ in range(20):
                p = random_deg2(desc, rng)
                H, v2 = sym_hessian(p)
                words = jet_coefficients(p)
                grad = np.array([words[(i,)] for i in range(desc.m1)])
                jet = jet_from_fit(desc, words[()], grad, v2, H)
                q = poly_from_jet2(jet)
                assert q.coeff_distance(p) < 1e-12


class TestPolyFromJet:
    def test_zero_jet_is_constant(self, h1):
        jet = jet_from_fit(h1, 3.5, np.zeros(2), np.zeros(1), np.zeros((2, 2)))
        p = poly_from_jet2(jet)
        assert p.coeffs == {(0, 0, 0): 3.5}

    def test_quadratic_with_vertical(self, h1):
        alpha = 0.75
        jet = jet_from_fit(h1, 0.0, np.zeros(2), np.array([alpha]), 2 * np.eye(2))
        p = poly_from_jet2(jet)
        assert p.coeffs == {(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 1): alpha}

    def test_jet_identity_residual(self, h1):
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = random_deg2(h1, rng)
            H, v2 = sym_hessian(p)
            words = jet_coefficients(p)
            grad = np.array([words[(i,)] for i in range(h1.m1)])
            jet = jet_from_fit(h1, words[()], grad, v2, H)
            assert np.max(jet.identity_residual()) < 1e-10
            # X_i X_j P agrees with the stored extended matrix
            xixj = np.array([[words[(i, j)] for j in range(h1.m1)] for i in range(h1.m1)])
            assert np.max(np.abs(xixj - jet.A.T)) < 1e-10


class TestSymHessian:
    def test_horizontal_square_sum(self, h1):
        p = GradedPolynomial.from_terms(h1, [((2, 0, 0), 1.0), ((0, 2, 0), 1.0)])
        H, v2 = sym_hessian(p)
        assert np.allclose(H, 2 * np.eye(2)) and np.allclose(v2, 0)

    def test_vertical(self, h1):
        H, v2 = sym_hessian(GradedPolynomial.coordinate(h1, 2))
        assert np.allclose(H, 0) and np.allclose(v2, [1.0])

    def test_cross_term(self, h1):
        # Euclidean oracle: the Hessian of x1 x2 has offdiagonal entries 1,
        # and (1/2) <H w, w> = w1 w2 reproduces the monomial
        H, _ = sym_hessian(GradedPolynomial.from_terms(h1, [((1, 1, 0), 1.0)]))
        assert np.allclose(H, [[0, 1.0], [1.0, 0]])


class TestStructureIdentity:
    @pytest.mark.parametrize("fixture", ["h1", "h2", "fs3", "eng", "r3"])
    def test_random_polynomials(self, fixture, request):
        desc = request.getfixturevalue(fixture)
        rng = np.random.default_rng(6)
        worst = 0.0
        for _ in range(30):
            worst = max(worst, float(np.max(check_alij(random_deg2(desc, rng)))))
        assert worst < 1e-10

    def test_pure_horizontal_quadratic(self, h1):
        # no second-layer term: the identity reduces to coefficient symmetry
        p = GradedPolynomial.from_terms(h1, [((2, 0, 0), 0.3), ((1, 1, 0), -0.7)])
        assert np.max(check_alij(p)) == 0.0


class TestLambdaMax:
    def test_horizontal_unit_quadratic(self, h1):
        p = GradedPolynomial.from_terms(h1, [((2, 0, 0), 1.0), ((0, 2, 0), 1.0)])
        lam = lambda_max(p, seed=0)
        assert 0.995 <= lam <= 1.0 + 1e-9

    def test_zero(self, h1):
        assert lambda_max(GradedPolynomial.zero(h1)) == 0.0

    def test_dilation_scaling(self, h1):
        rng = np.random.default_rng(7)
        p = random_deg2(h1, rng).homogeneous_part(2)
        for r in (0.5, 2.0):
            lam1 = lambda_max(p.compose_dilation(r), seed=1)
            lam2 = lambda_max(p, seed=1)
            assert abs(lam1 - r**2 * lam2) < 1e-3 * max(1.0, lam1)


class TestLeftTranslate:
    def test_identity_translation(self, h1):
        rng = np.random.default_rng(8)
        p = random_deg2(h1, rng)
        assert left_translate_poly(p, h1.identity()).coeff_distance(p) < 1e-11

    def test_heisenberg_vertical(self, h1):
        p = GradedPolynomial.coordinate(h1, 2)
        q = left_translate_poly(p, np.array([1.0, 0.0, 0.0]))
        # x3(x . h) = h3 + h2/2 at x = e1
        assert q.coeff_distance(GradedPolynomial.from_terms(h1, [((0, 0, 1), 1.0), ((0, 1, 0), 0.5)])) < 1e-11

    @pytest.mark.parametrize("fixture", ["h1", "fs3", "eng"])
    def test_quadratic_part_invariance(self, fixture, request):
        desc = request.getfixturevalue(fixture)
        rng = np.random.default_rng(9)
        for _ in range(10):
            p = random_deg2(desc, rng)
            x = rng.uniform(-1, 1, desc.dim)
            q = left_translate_poly(p, x)
            Hp, vp = sym_hessian(p)
            Hq, vq = sym_hessian(q)
            assert np.max(np.abs(Hp - Hq)) < 1e-10
            assert np.max(np.abs(vp - vq)) < 1e-10

    def test_linear_part_is_gradient(self, h1):
        # the 1-homogeneous part of P(x . h) is <grad_H P(x), h>
        rng = np.random.default_rng(10)
        fc = field_coefficients(h1)
        for _ in range(10):
            p = random_deg2(h1, rng)
            x = rng.uniform(-1, 1, 3)
            q = left_translate_poly(p, x).homogeneous_part(1)
            grad = np.array([apply_field(fc, i, p).evaluate(x) for i in range(h1.m1)])
            lin = GradedPolynomial.from_terms(
                h1, [(tuple(1 if k == i else 0 for k in range(3)), grad[i]) for i in range(2)]
            )
            assert q.coeff_distance(lin) < 1e-11

    def test_degree_guard(self, h1):
        with pytest.raises(ValueError):
            left_translate_poly(GradedPolynomial.from_terms(h1, [((3, 0, 0), 1.0)]), h1.identity())
