import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxmult.profiles import (LP_BUMP, PHI_STANDARD, PSI_HAT_STANDARD, SmoothProfile, profile_from_json,
                              theta, transition)


def test_transition_endpoints_and_symmetry():
    t = np.linspace(-1, 2, 301)
    tau = transition(t)
    assert np.all(tau[t <= 0] == 0) and np.all(tau[t >= 1] == 1)
    assert np.allclose(tau + transition(1 - t), 1.0, atol=1e-15)
    assert np.all(np.diff(tau) >= 0)


def test_transition_closed_form():
    t = np.array([0.2, 0.5, 0.7])
    eta = lambda s: np.exp(-1 / s)
    assert np.allclose(transition(t), eta(t) / (eta(t) + eta(1 - t)), rtol=1e-14)


@pytest.mark.parametrize("profile", [PHI_STANDARD, PSI_HAT_STANDARD, LP_BUMP])
def test_support_and_flat_region(profile):
    a, b, c, d = (float(x) for x in (profile.a, profile.b, profile.c, profile.d))
    r = np.linspace(0, 2 * b, 4001)
    v = profile(r)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(v[(r >= c) & (r <= d)] == 1)
    outside = (r > b) | ((r < a) if a > 0 else np.zeros_like(r, dtype=bool))
    assert np.all(v[outside] == 0)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_derivatives_match_finite_differences(order):
    r = np.linspace(0.76, 1.24, 97)
    h = 1e-5
    lower = PHI_STANDARD.derivative(r - h, order - 1)
    upper = PHI_STANDARD.derivative(r + h, order - 1)
    fd = (upper - lower) / (2 * h)
    exact = PHI_STANDARD.derivative(r, order)
    assert np.max(np.abs(fd - exact)) <= 1e-5 * max(1.0, np.max(np.abs(exact)))


def test_derivative_order_limit():
    with pytest.raises(ValueError):
        PHI_STANDARD.derivative(1.0, 5)


def test_lp_bump_is_telescoped_ramp():
    r = np.linspace(0, 4, 8001)
    assert np.max(np.abs(LP_BUMP(r) - (theta(r) - theta(r / 2)))) < 1e-15


def test_invalid_profiles_rejected():
    with pytest.raises(ValueError):
        SmoothProfile(1, 2, 1.5, 1.2)
    with pytest.raises(ValueError):
        SmoothProfile(0, 1, 0, 1)


def test_json_round_trip():
    assert profile_from_json(PHI_STANDARD.to_json()) is PHI_STANDARD
    custom = SmoothProfile(1, 3, 1.5, 2)
    assert profile_from_json(custom.to_json()) == custom
    with pytest.raises(ValueError):
        profile_from_json("nope")


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5, 1.5), st.integers(0, 4))
def test_derivatives_vanish_off_support(r_in, order):
    # Outside [a, b] every derivative is exactly zero.
    r = np.array([r_in * 0.7, r_in + 1.3])
    vals = PHI_STANDARD.derivative(r, order)
    outside = (r < 0.75) | (r > 1.25)
    assert np.all(vals[outside] == 0)
