import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from dmnls import fiber
from dmnls.fiber import (
    D,
    FiberParams,
    d0,
    gain_G,
    integral_d,
    integral_G,
    local_profiles,
    psi,
    psi_integral,
)

times = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)
eps_values = st.floats(min_value=1e-3, max_value=2.0)
gammas = st.floats(min_value=0.0, max_value=3.0)


@pytest.mark.parametrize("eps,gamma", [(0.0, 0.0), (-1.0, 0.0), (1.0, -0.1), (math.nan, 0.0)])
def test_params_validation(eps, gamma):
    with pytest.raises(ValueError):
        FiberParams(eps, gamma)


@pytest.mark.parametrize("t,expected", [(0.0, 1.0), (0.5, 1.0), (1.0, -1.0), (1.5, -1.0),
                                        (2.0, 1.0), (2.5, 1.0), (-0.5, -1.0)])
def test_d0(t, expected):
    assert d0(t) == expected


@pytest.mark.parametrize("t,expected", [(0.0, 0.0), (0.25, 0.25), (1.0, 1.0), (1.5, 0.5),
                                        (2.0, 0.0), (3.0, 1.0), (-0.5, 0.5)])
def test_D(t, expected):
    assert D(t) == pytest.approx(expected, abs=1e-15)


def test_D_is_antiderivative_of_d0():
    for t in np.linspace(0.0, 5.0, 23):
        val, _ = integrate.quad(d0, 0.0, t, points=[1, 2, 3, 4], limit=200)
        assert D(t) == pytest.approx(val, abs=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 0.2, 1.0])
def test_gain_at_amplifier_is_one(gamma):
    for k in range(-3, 4):
        assert gain_G(2.0 * k, gamma) == 1.0


def test_gain_values():
    assert gain_G(1.0, 0.2) == pytest.approx(0.81873075, abs=1e-8)
    assert gain_G(1.0, 0.2) == pytest.approx(math.exp(-0.2), rel=1e-15)
    # just before the amplifier the gain has decayed to exp(-2 gamma)
    assert gain_G(2.0 - 1e-9, 0.5) == pytest.approx(math.exp(-1.0), rel=1e-8)
    np.testing.assert_array_equal(gain_G(np.linspace(-3, 3, 13), 0.0), 1.0)


def test_gain_matches_integrated_loss():
    # log G(t) = -gamma t on (0, 2): quadrature of the loss rate without the atom at 0
    gamma = 0.2
    for t in (0.3, 1.0, 1.7):
        loss, _ = integrate.quad(lambda s: -gamma, 0.0, t)
        assert gain_G(t, gamma) == pytest.approx(math.exp(loss), rel=1e-14)


def test_psi_values():
    assert psi(1.0, 0.2) == pytest.approx(0.81873075, abs=1e-8)
    assert psi(0.0, 0.2) == pytest.approx(math.exp(-0.2) * math.cosh(0.2), rel=1e-15)
    np.testing.assert_array_equal(psi(np.linspace(0, 1, 11), 0.0), 1.0)
    for r in (-0.1, 1.1):
        with pytest.raises(ValueError):
            psi(r, 0.2)


def test_psi_integral():
    # (1 - exp(-0.4)) / 0.4 = 0.8241998849...; half the full-period gain integral
    assert psi_integral(0.2) == pytest.approx(0.8241998849, abs=1e-10)
    assert psi_integral(0.2) == pytest.approx(1.64839977 / 2, abs=1e-8)
    val, _ = integrate.quad(lambda r: psi(r, 0.2), 0.0, 1.0)
    assert psi_integral(0.2) == pytest.approx(val, rel=1e-14)
    assert psi_integral(0.0) == 1.0


def test_local_profiles_left_limits():
    gamma = 0.3
    # end of the first half-cell: D -> 1, G -> exp(-gamma)
    assert local_profiles(1.0, 0, gamma) == pytest.approx((1.0, math.exp(-gamma)))
    # end of the second half-cell: D -> 0, G -> exp(-2 gamma) (before the amplifier)
    assert local_profiles(2.0, 1, gamma) == pytest.approx((0.0, math.exp(-2 * gamma)))
    # interior points agree with the point evaluations
    for s, k in ((0.3, 0), (1.4, 1), (4.6, 4), (7.2, 7)):
        dd, gg = local_profiles(s, k, gamma)
        assert dd == pytest.approx(D(s), abs=1e-14)
        assert gg == pytest.approx(gain_G(s, gamma), rel=1e-14)


def test_breakpoint_snapping():
    # 0.3 / 0.1 is 2.9999999999999996 in floating point; treat it as the breakpoint
    s = 0.3 / 0.1
    assert s < 3.0
    assert d0(s) == -1.0 and d0(2.9999) == 1.0


@pytest.mark.parametrize("eps,d_av,t0,t1,expected", [
    (1.0, 0.5, 0.0, 0.5, 0.75),
    (1.0, 0.0, 0.0, 1.0, 1.0),
    (0.1, 0.7, 0.0, 0.2, 0.2 * 0.7),
    (0.3, -2.0, 0.6, 1.2, -2.0 * 0.6),
    (1.0, 0.5, 1.1, 1.9, 0.5 * 0.8 - 0.8),
])
def test_integral_d_examples(eps, d_av, t0, t1, expected):
    assert integral_d(t0, t1, FiberParams(eps, 0.0, d_av)) == pytest.approx(expected, abs=1e-14)


def test_integral_d_against_quadrature():
    p = FiberParams(0.3, 0.0, 0.4)
    for t0, t1 in ((0.0, 1.0), (0.17, 2.9), (-1.0, 0.5)):
        pts = [k * p.eps for k in range(-10, 11) if t0 < k * p.eps < t1]
        val, _ = integrate.quad(p.d, t0, t1, points=pts or None, limit=200)
        assert integral_d(t0, t1, p) == pytest.approx(val, abs=1e-11)


@settings(max_examples=200, deadline=None)
@given(times, times, times, eps_values, st.floats(-3, 3))
def test_integral_d_additive(a, b, c, eps, d_av):
    p = FiberParams(eps, 0.0, d_av)
    assert integral_d(a, b, p) + integral_d(b, c, p) == pytest.approx(
        integral_d(a, c, p), abs=1e-14 * max(1.0, abs(d_av) * (abs(a) + abs(b) + abs(c))) + 1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(-100.0, 100.0), eps_values, st.floats(-3, 3))
def test_integral_d_mean_zero_over_a_period(cells, eps, d_av):
    # start anywhere within 100 cells of the origin
    a = cells * eps
    p = FiberParams(eps, 0.0, d_av)
    assert integral_d(a, a + 2 * eps, p) == pytest.approx(2 * eps * d_av, abs=1e-13)


def test_integral_G_examples():
    p = FiberParams(1.0, 0.2)
    assert integral_G(0.0, 2.0, p) == pytest.approx(1.64839977, abs=1e-8)
    assert integral_G(0.0, 2.0, p) == pytest.approx(2 * psi_integral(0.2), rel=1e-14)
    assert integral_G(0.3, 1.7, FiberParams(0.5, 0.0)) == pytest.approx(1.4, rel=1e-15)
    assert integral_G(1.0, 1.0, p) == 0.0
    with pytest.raises(ValueError):
        integral_G(1.0, 0.5, p)


@pytest.mark.parametrize("eps,gamma", [(1.0, 0.2), (0.1, 0.2), (0.37, 1.3), (0.05, 0.0)])
def test_integral_G_against_quadrature(eps, gamma):
    p = FiberParams(eps, gamma)
    for t0, t1 in ((0.0, 2 * eps), (0.01, 0.93), (0.2, 3.3)):
        pts = [2 * k * eps for k in range(0, 100) if t0 < 2 * k * eps < t1]
        val, _ = integrate.quad(p.G, t0, t1, points=pts or None, limit=500, epsabs=1e-14)
        assert integral_G(t0, t1, p) == pytest.approx(val, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 20), st.floats(0, 20), st.floats(0, 20), eps_values, gammas)
def test_integral_G_additive_and_positive(a, b, c, eps, gamma):
    a, b, c = sorted((a, b, c))
    p = FiberParams(eps, gamma)
    ab, bc, ac = integral_G(a, b, p), integral_G(b, c, p), integral_G(a, c, p)
    assert ab >= 0 and bc >= 0
    if c > a:
        assert ac > 0
    assert ab + bc == pytest.approx(ac, rel=1e-12, abs=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=10, max_size=10), eps_values, gammas)
def test_two_eps_periodicity(ts, eps, gamma):
    p = FiberParams(eps, gamma)
    for t in ts:
        s = (t / eps) % 2.0
        if min(s, 2.0 - s) < 1e-8:
            continue  # G jumps at amplifiers; either side is a valid rounding
        assert p.G(t + 2 * eps) == pytest.approx(p.G(t), rel=1e-8)
        assert p.D(t + 2 * eps) == pytest.approx(p.D(t), abs=1e-9)


def test_two_eps_periodicity_1000_random_times(rng):
    p = FiberParams(0.1, 0.2, 0.5)
    s = rng.uniform(-50.0, 50.0, size=1000)
    t = s * p.eps
    g0, g1 = gain_G(t / p.eps, p.gamma), gain_G((t + 2 * p.eps) / p.eps, p.gamma)
    np.testing.assert_allclose(g1, g0, rtol=1e-12)
    np.testing.assert_allclose(D((t + 2 * p.eps) / p.eps), D(t / p.eps), atol=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 0.2, 1.0])
@pytest.mark.parametrize("f", [
    lambda r: 1.0,
    lambda r: r,
    lambda r: r * r,
    math.exp,
    lambda r: math.cos(3.0 * r),
], ids=["one", "r", "r2", "exp", "cos3r"])
def test_kernel_identity_scalar(f, gamma):
    lhs = 0.5 * (integrate.quad(lambda s: gain_G(s, gamma) * f(D(s)), 0.0, 1.0, epsabs=1e-14)[0]
                 + integrate.quad(lambda s: gain_G(s, gamma) * f(D(s)), 1.0, 2.0, epsabs=1e-14)[0])
    rhs = integrate.quad(lambda r: psi(r, gamma) * f(r), 0.0, 1.0, epsabs=1e-14)[0]
    assert abs(lhs - rhs) <= 1e-10


def test_kernel_identity_breaks_with_wrong_normalization():
    gamma = 0.2
    with fiber.perturbed_gain_normalization(math.exp(2 * gamma)):
        lhs = 0.5 * integrate.quad(lambda s: gain_G(s, gamma), 0.0, 2.0, points=[1.0])[0]
    assert gain_G(0.0, gamma) == 1.0  # hook restored
    assert abs(lhs - psi_integral(gamma)) > 1e-2


def test_gamma_to_zero_continuity():
    tiny = FiberParams(0.1, 1e-12, 0.5)
    zero = FiberParams(0.1, 0.0, 0.5)
    for t0, t1 in ((0.0, 0.05), (0.03, 0.71), (0.0, 0.2)):
        assert integral_G(t0, t1, tiny) == pytest.approx(integral_G(t0, t1, zero), abs=1e-9)
    for t in (0.0, 0.07, 0.13, 0.19):
        assert tiny.G(t) == pytest.approx(zero.G(t), abs=1e-9)
    for r in (0.0, 0.5, 1.0):
        assert psi(r, 1e-12) == pytest.approx(psi(r, 0.0), abs=1e-9)
    assert psi_integral(1e-12) == pytest.approx(psi_integral(0.0), abs=1e-9)
