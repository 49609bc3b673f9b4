import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from higher_rank_lab.errors import InvalidArgument, InvalidDimension, InvalidRoot, OutOfRange
from higher_rank_lab.root_algebra import (
    ChamberVector,
    SpectralParameter,
    beta_tilde,
    build_root_datum,
    is_regular,
    pair_coroot,
    weyl_apply,
    weyl_compose,
    weyl_orbit,
)

dims = st.integers(min_value=2, max_value=6)
finite = st.floats(min_value=-5, max_value=5, allow_nan=False)


@st.composite
def trace_zero(draw, d=None):
    d = d if d is not None else draw(st.integers(min_value=2, max_value=6))
    vals = np.array(draw(st.lists(finite, min_size=d, max_size=d)))
    return vals - vals.mean()


@pytest.mark.parametrize("d", range(2, 9))
def test_root_counts_and_rho(d):
    datum = build_root_datum(d)
    assert datum.n_positive == d * (d - 1) // 2
    assert len(datum.weyl) == np.prod(range(1, d + 1))
    np.testing.assert_allclose(datum.rho, (d - 1) / 2 - np.arange(d))
    np.testing.assert_allclose(datum.coroots, datum.positive_roots)


@pytest.mark.parametrize("d", range(2, 7))
def test_fundamental_weights_dual_to_simple_coroots(d):
    datum = build_root_datum(d)
    np.testing.assert_allclose(datum.fundamental_weights @ datum.simple_roots.T, np.eye(d - 1), atol=1e-14)
    # rho is the sum of the fundamental weights
    np.testing.assert_allclose(datum.fundamental_weights.sum(axis=0), datum.rho, atol=1e-14)


def test_dimension_limits():
    with pytest.raises(InvalidDimension):
        build_root_datum(1)
    with pytest.raises(InvalidDimension):
        build_root_datum(9)


def test_chamber_vector_rejects_nonzero_trace():
    with pytest.raises(InvalidArgument):
        ChamberVector((1.0, 0.0, 0.0))
    assert ChamberVector.project([3, 0, 0]).coords == (2.0, -1.0, -1.0)


def test_pair_coroot_and_root_index():
    assert pair_coroot([2, 0.5, -2.5], (0, 2)) == 4.5
    datum = build_root_datum(3)
    assert datum.root_index([1, -1, 0]) == 0
    with pytest.raises(InvalidRoot):
        datum.root_index((1, 0))


def test_beta_tilde_value():
    # differences 1, 2, 1
    assert beta_tilde(1.0, 1j * np.array([1.0, 0.0, -1.0])) == pytest.approx(2 * 3 * 2)
    with pytest.raises(OutOfRange):
        beta_tilde(0.5, np.zeros(3))


def test_regularity():
    assert is_regular([1, 0, -1])
    assert not is_regular([1, 1, -2])


@given(trace_zero(), st.randoms())
def test_weyl_action_is_a_group_action(v, rnd):
    d = v.size
    perms = list(itertools.permutations(range(d)))
    w1, w2 = rnd.choice(perms), rnd.choice(perms)
    lhs = weyl_apply(weyl_compose(w1, w2), v)
    rhs = weyl_apply(w1, weyl_apply(w2, v))
    np.testing.assert_allclose(lhs, rhs)


@given(trace_zero())
def test_weyl_orbit_is_invariant_and_sorted_member(v):
    orbit = weyl_orbit(v)
    assert any(np.allclose(o, np.sort(v)[::-1]) for o in orbit)
    for o in orbit:
        assert abs(o.sum()) < 1e-9
        np.testing.assert_allclose(np.sort(o), np.sort(v))


@given(trace_zero(d=3), trace_zero(d=3))
def test_spectral_parameter_round_trip(re, im):
    lam = SpectralParameter(tuple(re), tuple(im))
    np.testing.assert_allclose(lam.value, re + 1j * im)
    image = weyl_apply((2, 0, 1), lam)
    assert isinstance(image, SpectralParameter)
    np.testing.assert_allclose(np.sort_complex(image.value), np.sort_complex(lam.value))
