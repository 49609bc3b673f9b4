"""Decompositions, Haar sampling and the E_t volume."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from higher_rank_lab import chamber_geometry as cg
from higher_rank_lab import group_numerics as gn
from higher_rank_lab.errors import DecompositionFailure, InvalidArgument, OutOfRange

# E[X_1] under the normalized Haar measure of E_1, d = 3, from a scipy dblquad
# of X_1 J(X) and J(X) over P+_1.
MEAN_X1_D3_T1 = 0.784737988064938

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def random_sl(d, rng, scale=1.0):
    g = rng.normal(scale=scale, size=(d, d))
    if np.linalg.det(g) < 0:
        g[0] *= -1
    return g / abs(np.linalg.det(g)) ** (1 / d)


@given(st.integers(min_value=3, max_value=6), seeds)
def test_cartan_reconstruction(d, seed):
    g = random_sl(d, np.random.default_rng(seed))
    c = gn.cartan_decompose(g)
    np.testing.assert_allclose(c.reconstruct(), g, atol=1e-8 * np.linalg.norm(g))
    assert np.linalg.det(c.k1) == pytest.approx(1.0)
    assert np.linalg.det(c.k2) == pytest.approx(1.0)
    assert c.X.in_closed_chamber()


@given(st.integers(min_value=3, max_value=6), seeds)
def test_iwasawa_reconstruction_and_batch(d, seed):
    g = random_sl(d, np.random.default_rng(seed))
    iw = gn.iwasawa_h0(g)
    np.testing.assert_allclose(iw.reconstruct(), g, atol=1e-8 * np.linalg.norm(g))
    np.testing.assert_allclose(np.diag(iw.n), 1.0)
    np.testing.assert_allclose(np.tril(iw.n, -1), 0.0, atol=1e-14)
    np.testing.assert_allclose(iw.k @ iw.k.T, np.eye(d), atol=1e-12)
    np.testing.assert_allclose(gn.iwasawa_diagonal(g[None])[0], iw.H0.array, atol=1e-10)


@given(st.integers(min_value=3, max_value=5), seeds)
def test_norm_symmetric_and_subadditive(d, seed):
    rng = np.random.default_rng(seed)
    g, h = random_sl(d, rng), random_sl(d, rng)
    assert gn.cartan_norm(np.linalg.inv(g)) == pytest.approx(gn.cartan_norm(g), abs=1e-9)
    assert gn.cartan_norm(g @ h) <= gn.cartan_norm(g) + gn.cartan_norm(h) + 1e-9


@given(st.integers(min_value=3, max_value=5), seeds)
def test_norm_bi_invariant(d, seed):
    rng = np.random.default_rng(seed)
    g = random_sl(d, rng)
    k = gn.haar_orthogonal(d, rng)
    assert gn.cartan_norm(k @ g @ k.T) == pytest.approx(gn.cartan_norm(g), abs=1e-9)


@given(st.integers(min_value=3, max_value=5), st.floats(min_value=0.1, max_value=3.0), seeds)
def test_frobenius_sandwich(d, t, seed):
    rng = np.random.default_rng(seed)
    g = np.stack([random_sl(d, rng, scale=0.6) for _ in range(50)])
    wide = t + 0.5 * math.log(d)
    in_et, _ = gn.membership_batch(g, t)
    in_wide_et, in_ball = gn.membership_batch(g, wide)
    assert not np.any(in_et & ~in_ball)
    assert not np.any(in_ball & ~in_wide_et)


def test_membership_scalar_matches_batch():
    rng = np.random.default_rng(3)
    g = np.stack([random_sl(3, rng) for _ in range(20)])
    et, ball = gn.membership_batch(g, 1.0)
    for i in range(20):
        assert gn.membership(g[i], 1.0) == (et[i], ball[i])
    with pytest.raises(OutOfRange):
        gn.membership(g[0], -1.0)


def test_decomposition_failure_on_singular():
    with pytest.raises(DecompositionFailure):
        gn.cartan_decompose(np.zeros((3, 3)))


def test_group_element_validation():
    with pytest.raises(InvalidArgument):
        gn.GroupElement(np.eye(3) * 2)
    g = gn.GroupElement(np.eye(3))
    assert (g @ g.inverse()).d == 3


@given(st.integers(min_value=3, max_value=5), seeds)
def test_jacobian_forms_agree(d, seed):
    rng = np.random.default_rng(seed)
    X = np.sort(rng.uniform(-2, 2, size=d))[::-1]
    X -= X.mean()
    prod = float(gn.jacobian_product(X))
    alt = gn.jacobian_alternating(X)
    assert alt == pytest.approx(prod, rel=1e-9, abs=1e-300)


def test_jacobian_spot():
    assert gn.jacobian(np.array([1.0, 0.0, -1.0])) == pytest.approx(5.0090, abs=1e-3)


@pytest.mark.parametrize("d, t", [(3, 1.0), (3, 2.0), (4, 1.0), (4, 2.0), (5, 1.0)])
def test_volume_quadrature_matches_brion(d, t):
    assert gn.volume_e_t(d, t) == pytest.approx(cg.brion_volume(d, t), rel=1e-6)


def test_volume_growth_rate():
    ts = np.linspace(3, 8, 6)
    slope = np.polyfit(ts, np.log([gn.volume_e_t(3, t) for t in ts]), 1)[0]
    assert abs(slope - 4) / 4 <= 0.02


@given(st.integers(min_value=3, max_value=6), seeds)
def test_haar_orthogonal_is_special_orthogonal(d, seed):
    k = gn.haar_orthogonal(d, np.random.default_rng(seed), size=20)
    np.testing.assert_allclose(k @ np.swapaxes(k, 1, 2), np.broadcast_to(np.eye(d), (20, d, d)), atol=1e-12)
    np.testing.assert_allclose(np.linalg.det(k), 1.0)


def test_haar_moments():
    # E[k_ij^2] = 1/d and E[trace k] = 0 for SO(d), d >= 3
    k = gn.haar_orthogonal(4, np.random.default_rng(11), size=40_000)
    assert np.mean(k**2) == pytest.approx(0.25, abs=3e-3)
    assert abs(np.mean(np.trace(k, axis1=1, axis2=2))) < 0.03


def test_samples_are_reproducible_and_in_e_t():
    a = gn.sample_e_t_batch(3, 1.5, 2000, 7)
    b = gn.sample_e_t_batch(3, 1.5, 2000, 7)
    np.testing.assert_array_equal(a.X, b.X)
    norms = gn.cartan_norm(a.matrices)
    assert np.all(norms <= 1.5 + 1e-9)
    assert np.all(np.diff(a.X, axis=1) <= 1e-12)


def test_sample_mean_matches_quadrature():
    batch = gn.sample_e_t_batch(3, 1.0, 100_000, 1)
    err = batch.X[:, 0].std() / math.sqrt(len(batch))
    assert abs(batch.X[:, 0].mean() - MEAN_X1_D3_T1) <= 4 * err


def test_intersection_ratio_basics():
    batch = gn.sample_e_t_batch(3, 3.0, 5000, 0)
    zero = gn.intersection_ratio(3, 3.0, np.zeros(3), 5000, 0, batch=batch)
    assert zero.ratio == 1.0
    near = gn.intersection_ratio(3, 3.0, np.array([0.5, 0.0, -0.5]), 5000, 0, batch=batch)
    far = gn.intersection_ratio(3, 3.0, np.array([2.0, 0.0, -2.0]), 5000, 0, batch=batch)
    assert 1 > near.ratio > far.ratio > 0
    with pytest.raises(InvalidArgument):
        gn.intersection_ratio(3, 3.0, np.array([-1.0, 0.0, 1.0]), 5000, 0, batch=batch)


def test_support_scan():
    rep = gn.support_bound_scan(3, 2.0, 5000, 4)
    assert rep.b_emp <= 1e-9
    assert rep.max_entry_excess <= 0
    assert rep.c_emp > 0


def test_i2_reduced_form_spot():
    r = gn.i2_integral(3, 0.5, 5.0)
    assert r.tau_prime == 10.0
    assert r.reduced_closed_form == pytest.approx(20.0, abs=1e-3)
    assert r.numeric <= r.reduced_closed_form


@pytest.mark.parametrize("d", [3, 4])
def test_i2_growth_at_most_linear(d):
    for tau in (5.0, 10.0):
        assert gn.i2_integral(d, 0.5, 2 * tau).numeric / gn.i2_integral(d, 0.5, tau).numeric <= 2.5


def test_intersection_profile_along_rho_ray():
    # ratios fall monotonically and stay within a constant multiple of
    # exp(-<rho, Y>) over the measured range
    from higher_rank_lab.acceptance import intersection_slope

    out = intersection_slope()
    ratios = np.array(out["ratios"])
    assert np.all(np.diff(ratios) < 0)
    assert out["bound_constant"] < 4.0
    assert out["slope"] < -0.7
