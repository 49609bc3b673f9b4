"""The transform h_t, cone integrals, periodicity and time averages."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from higher_rank_lab import group_numerics as gn
from higher_rank_lab import propagator as pr
from higher_rank_lab import spherical_analysis as sa
from higher_rank_lab.errors import Divergence, InvalidArgument, InvalidDimension, NotRational, OutOfRange
from higher_rank_lab.quadrature import legendre_rule
from higher_rank_lab.root_algebra import build_root_datum, weyl_apply

RHO = build_root_datum(3).rho
LAM = 1j * np.array([1.0, 0.0, -1.0])
GENERIC = 1j * np.array([1.5, 0.5, -2.0])


@pytest.fixture(scope="module")
def rho_profile():
    return pr.ht_profile(RHO.astype(complex), 1.0)


def direct_h(lam, t, m=8):
    """h_t by Gauss-Legendre over the two triangles of P+_t in (X_1, X_2)."""
    total = 0.0
    # P+_t: 0 <= X_1 <= t, -X_1/2 <= X_2 <= min(X_1, t - X_1); kink at X_1 = t/2
    for lo, hi, top in ((0.0, t / 2, lambda a: a), (t / 2, t, lambda a: t - a)):
        xs, wx = legendre_rule(m, lo, hi)
        for a, wa in zip(xs, wx):
            ys, wy = legendre_rule(m, -a / 2, top(a))
            for b, wb in zip(ys, wy):
                X = np.array([a, b, -a - b])
                phi = sa.spherical_phi(lam, X).value
                total += wa * wb * phi * float(gn.jacobian_product(X))
    total *= math.sqrt(3)
    return total / math.sqrt(gn.volume_e_t(3, t))


@pytest.mark.parametrize("t", [0.7, 1.0])
def test_h_t_at_rho_is_root_volume(rho_profile, t):
    h = pr.h_t(RHO, t, profile=rho_profile)
    assert h.value.real == pytest.approx(math.sqrt(gn.volume_e_t(3, t)), rel=1e-6)


def test_h_t_matches_triangle_quadrature():
    h = pr.h_t(LAM, 1.0)
    assert abs(h.value - direct_h(LAM, 1.0)) <= 1e-5
    # tempered transforms are real and dominated by h_t(rho)
    assert abs(h.value.imag) <= 1e-6
    assert abs(h.value) <= math.sqrt(gn.volume_e_t(3, 1.0))


def test_h_t_guards():
    with pytest.raises(InvalidDimension):
        pr.ht_profile(np.zeros(4), 1.0)


def test_j_cone_at_zero():
    assert pr.j_cone(np.zeros(3)) == pytest.approx(math.sqrt(3), abs=1e-12)


@given(st.integers(min_value=0, max_value=2**31 - 1), st.sampled_from([3, 4]))
def test_j_cone_routes_agree(seed, d):
    rng = np.random.default_rng(seed)
    lam = 0.3 * rng.normal(size=d) + 1j * rng.normal(size=d)
    lam -= lam.mean()
    try:
        closed = pr.j_cone(lam)
    except Divergence:
        with pytest.raises(Divergence):
            pr.j_cone_quadrature(lam)
        return
    assert abs(closed - pr.j_cone_quadrature(lam)) <= 1e-4 * max(1.0, abs(closed))


def test_j_cone_divergence():
    with pytest.raises(Divergence):
        pr.j_cone(np.array([-3.0, 0.0, 3.0]))


@pytest.mark.parametrize("nu, expected", [([1, 0, -1], 2), ([0.5, 0, -0.5], 4), ([1 / 3, 0, -1 / 3], 6)])
def test_tau1_values(nu, expected):
    assert pr.tau1(1j * np.array(nu)).tau1 == pytest.approx(expected * math.pi, rel=1e-12)


@pytest.mark.parametrize("nu", [[math.sqrt(2), 0, -math.sqrt(2)], [math.pi, 0, -math.pi]])
def test_tau1_irrational(nu):
    with pytest.raises(NotRational):
        pr.tau1(1j * np.array(nu))


def test_tau1_needs_tempered():
    with pytest.raises(NotRational):
        pr.tau1(np.array([0.1, 0.0, -0.1]) + LAM)


@given(st.floats(min_value=-20, max_value=20))
def test_proxy_is_periodic(t):
    period = pr.tau1(LAM).tau1
    assert abs(pr.i_of_t(LAM, t + period) - pr.i_of_t(LAM, t)) <= 1e-10


@given(st.permutations(range(3)))
def test_proxy_weyl_invariant(perm):
    ts = np.linspace(0, 5, 11)
    np.testing.assert_allclose(pr.i_of_t(weyl_apply(perm, GENERIC), ts), pr.i_of_t(GENERIC, ts), atol=1e-12)


def test_phase_collision():
    assert pr.phase_collision(LAM)
    assert not pr.phase_collision(GENERIC)
    assert pr.phases(LAM) == (2.0, 1.0, 1.0, -1.0, -1.0, -2.0)


def test_parseval_proxy_average():
    rep = pr.time_average(GENERIC, 200.0)
    assert abs(rep.relative_gap) <= 0.05
    assert rep.parseval_target > 0


def test_replacement_grid_guard():
    with pytest.raises(InvalidArgument):
        pr.replacement_check(LAM, np.linspace(1.0, 3.0, 9))


def test_asymptotic_constant():
    from higher_rank_lab.chamber_geometry import volume_leading_term

    assert pr.asymptotic_constant(3) == pytest.approx(2**-3 / math.sqrt(volume_leading_term(3)[1]))


def test_direct_average_guard():
    with pytest.raises(OutOfRange):
        pr.time_average(LAM, 10.0, route="direct")
