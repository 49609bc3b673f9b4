"""Spherical functions, c-functions and the Levi main term."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from higher_rank_lab import spherical_analysis as sa
from higher_rank_lab.errors import InvalidDimension, UnsupportedDimension
from higher_rank_lab.root_algebra import build_root_datum, weyl_apply

LAM = 1j * np.array([1.0, 0.0, -1.0])
X = np.array([0.6, 0.1, -0.7])
few = settings(max_examples=8)


def chamber_point(rng, d, scale):
    v = np.sort(rng.uniform(-scale, scale, size=d))[::-1]
    return v - v.mean()


def test_identity_value_is_exact():
    assert sa.spherical_phi(LAM, np.zeros(3)).value == 1
    assert sa.spherical_phi(LAM, np.zeros(3)).abs_error == 0


@pytest.mark.parametrize("sign", [1, -1])
def test_phi_at_plus_minus_rho_is_one(sign):
    # phi_{-rho} = 1 identically, and rho = -w0 rho
    rho = build_root_datum(3).rho
    val = sa.spherical_phi(sign * rho, X).value
    assert val == pytest.approx(1.0, abs=1e-6)


def test_flag_and_euler_rules_agree():
    flag = sa.spherical_phi(LAM, X)
    euler = sa.spherical_phi(LAM, X, sa.SphericalQuadrature(rule="euler"))
    assert abs(flag.value - euler.value) <= 1e-6
    assert flag.rule == "flag" and euler.rule == "euler"


def test_flag_rule_against_monte_carlo():
    quad = sa.SphericalQuadrature()
    flag = sa.spherical_phi(LAM, X, quad)
    mc = sa._monte_carlo_phi(LAM, X, quad)
    assert abs(flag.value - mc.value) <= 4 * mc.abs_error


@few
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_tempered_phi_bounded_by_one(seed):
    rng = np.random.default_rng(seed)
    nu = rng.normal(size=3)
    lam = 1j * (nu - nu.mean())
    val = sa.spherical_phi(lam, chamber_point(rng, 3, 2.0))
    assert abs(val.value) <= 1 + val.abs_error


@few
@given(st.integers(min_value=0, max_value=2**31 - 1), st.permutations(range(3)))
def test_weyl_symmetry_d3(seed, perm):
    rng = np.random.default_rng(seed)
    lam = rng.normal(size=3) * 0.3 + 1j * rng.normal(size=3)
    lam -= lam.mean()
    Y = chamber_point(rng, 3, 1.5)
    a = sa.spherical_phi(lam, Y)
    b = sa.spherical_phi(weyl_apply(perm, lam), Y)
    assert abs(a.value - b.value) <= 1e-6


def test_monte_carlo_weyl_symmetry_d4():
    lam = 1j * np.array([1.0, 0.5, 0.0, -1.5])
    Y = np.array([0.5, 0.2, -0.1, -0.6])
    a = sa.spherical_phi(lam, Y)
    b = sa.spherical_phi(weyl_apply((3, 1, 0, 2), lam), Y)
    assert a.method == "monte-carlo"
    assert abs(a.value - b.value) <= 3 * math.hypot(a.abs_error, b.abs_error)


def test_dimension_guard():
    with pytest.raises(InvalidDimension):
        sa.spherical_phi(np.zeros(6), np.zeros(6))


@pytest.mark.parametrize("z, y", [(0.7j, 0.8), (1.3j, 1.5), (0.4, 0.6), (2.2j, 0.3)])
def test_rank_one_phi_is_a_legendre_function(z, y):
    s = (1 + z) / 2
    oracle = complex(mpmath.legenp(s - 1, 0, mpmath.cosh(2 * y), type=3))
    assert sa.rank_one_phi(z, y) == pytest.approx(oracle, abs=1e-12)


@given(st.floats(min_value=0.05, max_value=8.0))
def test_c_alpha_plancherel_closed_form(nu):
    # |Gamma(iy) / Gamma(1/2 + iy)|^{-2} = y tanh(pi y)
    density = 1 / abs(sa.c_alpha(1j * nu)) ** 2
    assert density == pytest.approx(math.pi * (nu / 2) * math.tanh(math.pi * nu / 2), rel=1e-10)


def test_c_function_normalized_at_rho():
    for d in (3, 4, 5):
        assert sa.c_function(build_root_datum(d).rho).value == pytest.approx(1.0)


def test_c_function_pole_flag():
    assert sa.c_function(np.array([1.0, 1.0, -2.0])).pole_flag
    assert not sa.c_function(LAM).pole_flag


@given(st.integers(min_value=0, max_value=2**31 - 1), st.permutations(range(4)))
def test_plancherel_density_weyl_invariant(seed, perm):
    rng = np.random.default_rng(seed)
    nu = rng.normal(size=4) * 2
    lam = 1j * (nu - nu.mean())
    a = sa.plancherel_density(lam)
    b = sa.plancherel_density(weyl_apply(perm, lam))
    assert b == pytest.approx(a, rel=1e-10)


def test_plancherel_ratio_bounded():
    # 1-regular points y (all |y_i - y_j| >= 1), passed as real vectors
    grid = [np.array([a + 0.5, b, -a - b - 0.5]) for a in range(-4, 5) for b in range(-4, 5)]
    grid = [y for y in grid if np.min(np.abs(y[:, None] - y[None, :])[np.triu_indices(3, 1)]) >= 1]
    scan = sa.plancherel_ratio_scan(3, grid)
    assert 0 < scan["min"] <= scan["max"] < math.inf


def test_levi_data():
    assert sa.levi_data(3).blocks == ((0,), (1,), (2,))
    lev = sa.levi_data(4)
    assert lev.blocks == ((0, 1), (2, 3))
    np.testing.assert_allclose(lev.proj_center + lev.proj_levi, np.eye(4) - 0.25, atol=1e-14)


def test_coset_count():
    assert len(sa.coset_representatives(LAM)) == 6
    assert len(sa.coset_representatives(1j * np.array([1.0, 0.2, -0.3, -0.9]))) == 6
    assert len(sa.coset_representatives(1j * np.array([1.0, 0.2, 0.0, -0.3, -0.9]))) == 30


def test_f_levi_unsupported():
    with pytest.raises(UnsupportedDimension):
        sa.f_levi(np.zeros(6), np.zeros(6))


def test_main_term_matches_normalized_phi_deep_in_chamber():
    Y = 3 * np.array([1.0, 0.0, -1.0])
    f = sa.f_normalized(LAM, Y)
    main = sa.main_term_phi(LAM, Y)
    assert abs(f.value - main) < 1e-2


def test_expansion_residual_decays():
    rep = sa.expansion_error_scan(LAM, np.zeros(3), [1.0, 1.5, 2.0, 2.5, 3.0])
    assert not rep.inconclusive
    assert rep.residual[-1] < rep.residual[0] / 10
    assert rep.rate <= rep.expected_rate
