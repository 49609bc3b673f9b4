"""Chamber geometry against exact values and independent quadratures."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from higher_rank_lab import chamber_geometry as cg
from higher_rank_lab.errors import InvalidDimension, OutOfRange
from higher_rank_lab.group_numerics import jacobian_product
from higher_rank_lab.root_algebra import build_root_datum

# scipy.integrate.dblquad / tplquad of the product Jacobian over P+_1 in the
# first d - 1 coordinates, times sqrt(d) for the surface measure of the
# trace-zero plane.  Frozen from one run (epsrel 1e-12).
DBLQUAD_D3_T1 = 0.38765277907593954 * math.sqrt(3)
TPLQUAD_D4_T1 = 0.07707546750814029 * 2.0


@pytest.mark.parametrize("d, expected", [(3, (1, 0, -1)), (4, (1, 1, -1, -1)), (5, (1, 1, 0, -1, -1)),
                                         (8, (1, 1, 1, 1, -1, -1, -1, -1))])
def test_x0_values(d, expected):
    assert cg.compute_x0(d).coords == expected
    assert cg.x0_oracle(d).coords == expected


@pytest.mark.parametrize("d, value", list(zip(range(3, 9), (2, 4, 6, 9, 12, 16))))
def test_rho_pairing_at_x0(d, value):
    assert float(np.dot(build_root_datum(d).rho, cg.compute_x0(d).array)) == value


def test_x0_dimension_guard():
    with pytest.raises(InvalidDimension):
        cg.compute_x0(2)
    with pytest.raises(InvalidDimension):
        cg.compute_x0(9)


@pytest.mark.parametrize("d", range(3, 7))
def test_cone_basis(d):
    cone = cg.mu_basis(d)
    x0 = cg.compute_x0(d).array
    np.testing.assert_allclose(cone.mu @ x0, np.ones(d - 1), atol=1e-12)
    np.testing.assert_allclose(cone.mu @ cone.beta_dual.T, np.eye(d - 1), atol=1e-12)
    np.testing.assert_allclose(cone.beta_dual.sum(axis=0), x0, atol=1e-12)
    assert all(isinstance(m, int) and m > 0 for m in cone.rho_coefficients)
    np.testing.assert_allclose(np.array(cone.rho_coefficients) @ cone.mu, build_root_datum(d).rho, atol=1e-12)
    assert cone.gram_det_sqrt == pytest.approx(math.sqrt(float(cone.gram_det)))


def test_rho_coefficients_known():
    assert cg.mu_basis(3).rho_coefficients == (1, 1)
    assert cg.mu_basis(5).rho_coefficients == (2, 1, 1, 2)


@given(st.integers(min_value=3, max_value=6), st.integers(min_value=0, max_value=2**31))
def test_cone_chart_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=d)
    X -= X.mean()
    x = cg.to_cone_chart(X, d)
    np.testing.assert_allclose(cg.from_cone_chart(x, d), X, atol=1e-12)


@given(st.integers(min_value=3, max_value=6), st.integers(min_value=0, max_value=2**31))
def test_membership_descriptions_agree(d, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.3, 1.3, size=(500, d))
    X -= X.mean(axis=1, keepdims=True)
    assert np.array_equal(cg.in_p_plus(X), cg.in_cone_description(X))


def test_brion_matches_dblquad_d3():
    assert cg.brion_volume(3, 1.0) == pytest.approx(DBLQUAD_D3_T1, rel=1e-10)


def test_brion_matches_tplquad_d4():
    assert cg.brion_volume(4, 1.0) == pytest.approx(TPLQUAD_D4_T1, rel=1e-9)


def test_brion_small_check_against_quadrature_fresh():
    # fresh dblquad at t = 2 so the frozen value is not the only route
    t = 2.0

    def J(x2, x1):
        x3 = -x1 - x2
        return np.sinh(x1 - x2) * np.sinh(x1 - x3) * np.sinh(x2 - x3)

    val = integrate.dblquad(J, 0, t, lambda x1: -x1 / 2, lambda x1: min(x1, t - x1), epsabs=1e-12)[0]
    assert cg.brion_volume(3, t) == pytest.approx(val * math.sqrt(3), rel=1e-9)


@pytest.mark.parametrize("method", ["vertex", "barycentric", "pulling"])
def test_brion_methods_agree(method):
    assert cg.brion_volume(3, 1.5, method=method) == pytest.approx(cg.brion_volume(3, 1.5), rel=1e-10)


@given(st.floats(min_value=1.0, max_value=6.0))
def test_alternating_sum_positive(t):
    assert float(cg.alternating_brion_sum(3, t)) > 0


def test_non_simple_vertex_handled():
    # P+ for d = 4 has a non-simple vertex at X0; Brion still works
    assert cg.brion_volume(4, 2.0) > 0


def test_volume_leading_term_d3():
    rate, const = cg.volume_leading_term(3)
    assert rate == 4.0
    # m(E_t) e^{-4t} approaches the constant with exponentially small error
    assert cg.brion_volume(3, 14.0) * math.exp(-56.0) == pytest.approx(const, rel=1e-5)


def test_levi_blocks():
    assert cg.levi_blocks(4) == ((0, 1), (2, 3))
    assert cg.levi_blocks(5) == ((0, 1), (2,), (3, 4))


def test_shrink_parameters():
    p = cg.shrink_parameters(3, 0.1)
    assert p.delta == pytest.approx(0.1)
    assert p.c_min == pytest.approx(0.8)
    with pytest.raises(OutOfRange):
        cg.shrink_parameters(3, 1.5)


@given(st.integers(min_value=3, max_value=6), st.floats(min_value=0.01, max_value=0.3))
def test_shrink_delta_positive(d, eta):
    assert cg.shrink_parameters(d, eta).delta > 0


@pytest.mark.parametrize("d", range(3, 7))
def test_angle_constants_positive(d):
    c = cg.appendix_b_constants(d)
    assert c.gamma > 0 and c.C1 > 0 and c.C2 > 0


def test_angle_constants_d3():
    c = cg.appendix_b_constants(3)
    assert c.C1 == pytest.approx(1.0, abs=1e-9)
    assert c.gamma == pytest.approx(math.pi / 6)
    assert c.cones_agree


def test_jacobian_spot_value():
    assert float(jacobian_product(np.array([1.0, 0.0, -1.0]))) == pytest.approx(
        math.sinh(1) ** 2 * math.sinh(2), rel=1e-14)
    assert float(jacobian_product(np.array([1.0, 0.0, -1.0]))) == pytest.approx(5.0090, abs=1e-3)


def test_exact_vertices_are_rational():
    P = cg.chamber_polytope(3)
    assert all(isinstance(x, Fraction) for v in P.vertices for x in v)
