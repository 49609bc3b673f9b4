from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from higher_rank_lab.errors import InvalidArgument
from higher_rank_lab.polytope import Polytope, exponential_integral, rank_exact, solve_exact, to_fraction
from higher_rank_lab.quadrature import legendre_rule, map_simplex, simplex_rule


def square():
    return Polytope([((1, 0), 1), ((-1, 0), 1), ((0, 1), 1), ((0, -1), 1)])


def test_to_fraction_uses_shortest_decimal():
    assert to_fraction(0.1) == Fraction(1, 10)
    assert to_fraction("3/7") == Fraction(3, 7)


def test_exact_linear_algebra():
    A = [[Fraction(2), Fraction(1)], [Fraction(1), Fraction(3)]]
    assert tuple(solve_exact(A, [Fraction(3), Fraction(5)])) == (Fraction(4, 5), Fraction(7, 5))
    assert rank_exact([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]]) == 1


def test_square_vertices_and_volume():
    P = square()
    assert sorted(P.vertices) == sorted([(1, 1), (1, -1), (-1, 1), (-1, -1)])
    assert P.volume() == 4
    assert P.scaled(Fraction(1, 2)).volume() == 1


def test_octahedron_is_not_simple():
    octa = Polytope([(s, 1) for s in [(a, b, c) for a in (1, -1) for b in (1, -1) for c in (1, -1)]])
    assert not octa.is_simple()
    assert octa.volume() == Fraction(4, 3)


def test_exponential_integral_square():
    # int_{[-1,1]^2} e^{a x + b y} = (2 sinh a / a)(2 sinh b / b)
    a, b = 0.7, -1.3
    exact = 4 * np.sinh(a) * np.sinh(b) / (a * b)
    for method in ("vertex", "barycentric", "pulling"):
        assert float(exponential_integral(square(), (a, b), method=method)) == pytest.approx(exact, rel=1e-12)


def test_exponential_integral_octahedron_matches_quadrature():
    octa = Polytope([(s, 1) for s in [(a, b, c) for a in (1, -1) for b in (1, -1) for c in (1, -1)]])
    xi = (0.3, -0.45, 0.8)
    total = 0.0
    for simplex in octa.triangulate("pulling"):
        x, w = map_simplex(np.array(simplex, dtype=float), 12)
        total += float(np.sum(w * np.exp(x @ np.array(xi))))
    assert float(exponential_integral(octa, xi)) == pytest.approx(total, rel=1e-12)


def test_json_round_trip():
    P = square()
    Q = Polytope.from_json(P.to_json())
    assert Q.vertices == P.vertices
    with pytest.raises(InvalidArgument):
        Polytope.from_dict({"nope": 1})


@given(st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=6))
def test_simplex_rule_integrates_monomials(n, m):
    y, w = simplex_rule(n, m)
    assert w.sum() == pytest.approx(1 / np.prod(range(1, n + 1)), rel=1e-12)
    # int_simplex y_1^k = k! / (n + k)!
    k = min(2 * m - 1, 3)
    exact = float(mpmath.factorial(k) / mpmath.factorial(n + k))
    assert float(np.sum(w * y[:, 0] ** k)) == pytest.approx(exact, rel=1e-10)


@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=0.1, max_value=3))
def test_legendre_rule_exact_for_cubics(lo, width):
    x, w = legendre_rule(2, lo, lo + width)
    hi = lo + width
    assert float(np.sum(w * x**3)) == pytest.approx((hi**4 - lo**4) / 4, rel=1e-10, abs=1e-10)
