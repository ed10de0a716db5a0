import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from steerdual.dynamics import (
    R_C_DEFAULT,
    LorentzianBath,
    amplitude,
    count_windows,
    damping_factor,
    decay_rate,
    steerable_region,
)
from steerdual.errors import InvalidInputError, PoleError


def ode_amplitude(u, lam, t):
    # G' = -K,  K' = (u lam / 2) G - lam K  (Lorentzian memory kernel)
    sol = solve_ivp(
        lambda _, y: [-y[1], u * lam / 2 * y[0] - lam * y[1]],
        (0, t[-1]), [1.0, 0.0], t_eval=t, rtol=1e-12, atol=1e-14, method="DOP853",
    )
    return sol.y[0]


@pytest.mark.parametrize("u,lam", [(0.1, 1.0), (0.5, 1.0), (3.0, 1.0), (10.0, 1.0), (2.0, 0.5)])
def test_amplitude_matches_ode(u, lam):
    t = np.linspace(0, 8, 81)
    g = amplitude(LorentzianBath(u, lam), t)
    assert np.allclose(g.imag, 0, atol=1e-12)
    assert np.allclose(g.real, ode_amplitude(u, lam, t), atol=1e-9)


def test_initial_value():
    for u in (0.01, 0.5, 100.0):
        assert damping_factor(LorentzianBath(u), 0.0) == 1.0


def test_continuity_across_critical_coupling():
    t = np.linspace(0, 10, 201)
    at = damping_factor(LorentzianBath(0.5), t)
    for du in (1e-12, -1e-12):
        assert np.max(np.abs(damping_factor(LorentzianBath(0.5 + du), t) - at)) < 1e-9


def test_weak_coupling_is_monotone():
    r = damping_factor(LorentzianBath(0.1), np.linspace(0, 30, 601))
    assert np.all(np.diff(r) < 0)


def test_zeros_of_strong_coupling_amplitude():
    bath = LorentzianBath(10.0)
    om = abs(bath.w)
    # G = e^{-z} (cos(om z) + sin(om z) / om): zero at tan(om z) = -om
    z0 = (math.pi - math.atan(om)) / om
    t0 = brentq(lambda t: amplitude(bath, t).real, 0.1, 1.5, xtol=1e-15)
    assert t0 == pytest.approx(2 * z0, abs=1e-12)
    with pytest.raises(PoleError):
        decay_rate(bath, t0)


@given(st.floats(0.05, 20.0), st.floats(0.1, 6.0))
@settings(max_examples=60, deadline=None)
def test_decay_rate_is_log_derivative(u, t):
    bath = LorentzianBath(u)
    h = 1e-6
    g = damping_factor(bath, np.array([t - h, t + h]))
    if np.min(g) < 1e-4:
        return
    fd = -2 * (math.log(g[1]) - math.log(g[0])) / (2 * h)
    assert decay_rate(bath, t) == pytest.approx(fd, rel=1e-4, abs=1e-5)


def test_large_times_do_not_overflow():
    r = damping_factor(LorentzianBath(0.3), np.array([1e3, 1e5]))
    assert np.all(np.isfinite(r)) and np.all(r < 1e-10)


def test_windows():
    assert count_windows([0, 1, 1, 0, 1, 0, 0, 1]) == 3
    assert count_windows([]) == 0
    t = np.linspace(0, 10, 4001)
    reg = steerable_region([0.1, 60.0], t, R_C_DEFAULT)
    assert reg.windows == [1, 2]


def test_region_validation():
    with pytest.raises(InvalidInputError):
        steerable_region([2.0, 1.0], [0.0, 1.0])
    with pytest.raises(InvalidInputError):
        LorentzianBath(-1.0)
    with pytest.raises(InvalidInputError):
        damping_factor(LorentzianBath(1.0), -1.0)
