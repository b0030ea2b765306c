"""Left-invariant vector fields in exponential coordinates.

In graded coordinates the field that equals e_j at the origin reads

    X_j = d/dx_j + sum_{d_l > d_j} a^l_j(x) d/dx_l

with (d_l - d_j)-homogeneous polynomial coefficients a^l_j.  The a^l_j are
recovered exactly as the t-linear part of t -> x * (t e_j): the group product
is evaluated with polynomial-valued coordinates at the nodes t = 1..step+1
and the linear coefficient is extracted by inverting the Vandermonde system
over the rationals.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DescriptorError
from .groups import _dynkin_table
from .polynomials import GradedPolynomial

__all__ = ["FieldCoefficients", "field_coefficients", "apply_field"]


def _vandermonde_row(nodes, k):
    """Row k of the inverse Vandermonde at ``nodes``, computed exactly.

    The returned weights w satisfy sum_j w_j p(t_j) = (coefficient of t^k)
    for every polynomial p of degree < len(nodes).
    """
    m = len(nodes)
    A = [[Fraction(t) ** a for a in range(m)] for t in nodes]
    # solve A^T w = e_k by Gauss-Jordan over the rationals
    M = [list(col) + [Fraction(1 if r == k else 0)] for r, col in enumerate(zip(*A))]
    for c in range(m):
        piv = next(r for r in range(c, m) if M[r][c] != 0)
        M[c], M[piv] = M[piv], M[c]
        inv = Fraction(1) / M[c][c]
        M[c] = [v * inv for v in M[c]]
        for r in range(m):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [v - f * w for v, w in zip(M[r], M[c])]
    return [float(M[r][m]) for r in range(m)]


def _bracket_polys(desc, u, v):
    out = [GradedPolynomial.zero(desc) for _ in range(desc.dim)]
    for i, j, k, c in desc.bracket_entries:
        out[k] = out[k] + (u[i] * v[j]) * c
    return out


def _bch_polys(desc, xs, ys):
    """BCH product where both arguments are vectors of polynomials."""
    letters = (xs, ys)
    out = [a + b for a, b in zip(xs, ys)]
    for word, coeff in _dynkin_table(desc.step):
        v = letters[word[-1]]
        for idx in word[-2::-1]:
            v = _bracket_polys(desc, letters[idx], v)
        out = [o + p * coeff for o, p in zip(out, v)]
    return out


class FieldCoefficients:
    """Coordinate coefficients of the left-invariant basis fields.

    ``poly(j, l)`` returns a^l_j as a graded polynomial (zero when absent);
    ``alij[l - m1, i, j]`` holds the constants a^{li}_j of the second-layer
    coefficients of horizontal fields, antisymmetric in (i, j).
    """

    def __init__(self, desc, table, alij):
        self.desc = desc
        self._table = table  # {(j, l): GradedPolynomial}
        self.alij = alij
        self.alij.setflags(write=False)

    def poly(self, j, l):
        p = self._table.get((j, l))
        if p is None:
            return GradedPolynomial.zero(self.desc)
        return p

    def raised_indices(self, j):
        """Indices l with d_l > d_j and a nonzero coefficient polynomial."""
        return [l for (jj, l) in self._table if jj == j]

    def antisymmetry_residual(self):
        return float(np.max(np.abs(self.alij + np.swapaxes(self.alij, 1, 2)))) if self.alij.size else 0.0


@lru_cache(maxsize=None)
def field_coefficients(desc):
    """Compute all a^l_j (and the a^{li}_j constants) for a descriptor."""
    n = desc.dim
    d = desc.dilation_exponents
    coords = [GradedPolynomial.coordinate(desc, i) for i in range(n)]
    nodes = list(range(1, desc.step + 2))
    weights = _vandermonde_row(nodes, 1)

    table = {}
    for j in range(n):
        evals = []
        for t in nodes:
            ej = [GradedPolynomial.constant(desc, float(t) if i == j else 0.0) for i in range(n)]
            evals.append(_bch_polys(desc, coords, ej))
        for l in range(n):
            if d[l] <= d[j]:
                continue
            a = GradedPolynomial.zero(desc)
            for w, z in zip(weights, evals):
                a = a + z[l] * w
            a = a.prune(1e-12)
            if a.coeffs:
                if a.hdeg != int(d[l] - d[j]) or a.homogeneous_part(int(d[l] - d[j])).coeff_distance(a) > 1e-12:
                    raise DescriptorError(
                        f"field coefficient a^{l + 1}_{j + 1} is not {int(d[l] - d[j])}-homogeneous"
                    )
                table[(j, l)] = a

    m1, m2 = desc.m1, desc.m2
    alij = np.zeros((m2 - m1, m1, m1))
    for j in range(m1):
        for l in range(m1, m2):
            a = table.get((j, l))
            if a is None:
                continue
            for i in range(m1):
                alij[l - m1, i, j] = a.evaluate(desc.basis_vector(i))
    return FieldCoefficients(desc, table, alij)


def apply_field(fc, j, P):
    """Apply the left-invariant field X_j to a polynomial, exactly."""
    if P.desc is not fc.desc:
        raise DescriptorError("polynomial and field coefficients belong to different groups")
    out = P.partial(j)
    for l in fc.raised_indices(j):
        out = out + fc.poly(j, l) * P.partial(l)
    return out
