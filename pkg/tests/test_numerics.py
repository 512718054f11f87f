import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nstime.numerics import (
    BracketError,
    ConvergenceError,
    adaptive_quad,
    brent_root,
    exp_integral,
    exp_integral_scaled,
    lgamma,
    maximize_1d,
    normal_cdf,
    phi_times_exp,
)
from nstime.models import phi_mu

mp.mp.dps = 40


def rel(a, b):
    return abs(a - b) / abs(b)


# --- normal_cdf -------------------------------------------------------------


def test_normal_cdf_examples():
    assert normal_cdf(0.0) == 0.5
    tail = normal_cdf(-30.0)
    assert 0.0 < tail < 1e-190
    assert normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-7)


@pytest.mark.parametrize("x", np.linspace(-8, 8, 41))
def test_normal_cdf_against_mpmath(x):
    assert rel(normal_cdf(x), float(mp.ncdf(x))) <= 1e-14


def test_normal_cdf_symmetry_and_monotone():
    xs = np.linspace(-8, 8, 10_000)
    vals = np.array([normal_cdf(x) for x in xs])
    back = np.array([normal_cdf(-x) for x in xs])
    assert np.max(np.abs(vals + back - 1.0)) <= 1e-14
    assert np.all(np.diff(vals) >= 0)


def test_normal_cdf_rejects_nonfinite():
    with pytest.raises(ValueError):
        normal_cdf(float("nan"))


# --- phi_times_exp ----------------------------------------------------------


def test_phi_times_exp_examples():
    assert phi_times_exp(0.0, 0.0) == pytest.approx(0.5, rel=1e-15)
    from scipy.special import erfcx

    assert phi_times_exp(-3.0, 4.5) == pytest.approx(0.5 * erfcx(3 / math.sqrt(2)), rel=1e-14)
    v = phi_times_exp(-30.0, 400.0)
    oracle = mp.ncdf(-30) * mp.e**400
    assert math.isfinite(v) and v > 0
    assert rel(v, float(oracle)) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(st.floats(-20, 0), st.floats(-300, 300))
def test_phi_times_exp_matches_naive_product(d, c):
    naive = normal_cdf(d) * math.exp(c)
    if naive == 0.0 or not math.isfinite(naive) or naive < 1e-290:
        return
    assert rel(phi_times_exp(d, c), naive) <= 1e-10


def test_phi_times_exp_rejects_positive_d():
    with pytest.raises(ValueError):
        phi_times_exp(0.1, 0.0)


# --- lgamma -----------------------------------------------------------------


def test_lgamma_examples():
    assert lgamma(1.0) == 0.0
    assert lgamma(2.0) == 0.0
    # Gamma(7.5) from Gamma(0.5) = sqrt(pi) by the product recurrence
    g = math.sqrt(math.pi)
    for k in range(7):
        g *= 0.5 + k
    assert rel(lgamma(7.5), math.log(g)) <= 1e-13


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_lgamma_rejects_nonpositive(x):
    with pytest.raises(ValueError):
        lgamma(x)


# --- exponential integral ---------------------------------------------------


@pytest.mark.parametrize("z", [0.5, 1.0, 2.0])
def test_e0_closed_form(z):
    assert rel(exp_integral(0.0, z), math.exp(-z) / z) <= 1e-15


def test_e1_at_one_against_quadrature():
    q = adaptive_quad(lambda u: math.exp(-1.0 / u) / u if u > 0 else 0.0, 0.0, 1.0, tol=1e-14)
    # int_1^inf e^-t / t dt with t = 1/u
    assert exp_integral(1.0, 1.0) == pytest.approx(q.value, rel=1e-12)
    assert exp_integral(1.0, 1.0) == pytest.approx(0.2193839, abs=1e-7)


def test_recurrence_example():
    lhs = exp_integral(3.0, 1.0)
    rhs = (math.exp(-1.0) - exp_integral(2.0, 1.0)) / 2.0
    assert rel(lhs, rhs) <= 1e-13


@pytest.mark.parametrize("nu", [0.5 * k for k in range(1, 21)])
@pytest.mark.parametrize("z", [0.1, 1.0, 10.0])
def test_recurrence_property(nu, z):
    lhs = nu * exp_integral(nu + 1.0, z)
    rhs = math.exp(-z) - z * exp_integral(nu, z)
    assert rel(lhs, rhs) <= 1e-10


@pytest.mark.parametrize("nu", [0.0, 0.3, 0.5, 0.999, 1.0, 1.001, 1.5, 2.0, 3.7, 6.5, 12.25, 20.0])
@pytest.mark.parametrize("z", [1e-8, 1e-3, 0.2, 0.999, 1.0, 3.0, 40.0, 700.0])
def test_exp_integral_against_mpmath(nu, z):
    ref = mp.expint(nu, z)
    assert rel(exp_integral(nu, z), float(ref)) <= 1e-12
    assert rel(exp_integral_scaled(nu, z), float(mp.e**z * ref)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 20.0), st.floats(1e-8, 700.0))
def test_exp_integral_random_against_mpmath(nu, z):
    ref = float(mp.e**z * mp.expint(nu, z))
    assert rel(exp_integral_scaled(nu, z), ref) <= 1e-12


def _laplace_form(nu, z):
    # int_0^inf (1+h)^-nu e^{-hz} dh, cut where the integrand < 1e-18
    hi = 1.0
    while (1 + hi) ** -nu * math.exp(-hi * z) >= 1e-18:
        hi *= 2.0
    f = lambda h: (1 + h) ** -nu * math.exp(-h * z)
    points = [p for p in (1.0, 10.0, 100.0) if p < hi]
    return adaptive_quad(f, 0.0, hi, tol=1e-13, points=points).value


@pytest.mark.parametrize("nu", [0.5, 1.0, 2.5, 6.5])
@pytest.mark.parametrize("z", [0.5, 1.0, 5.0])
def test_scaled_equals_laplace_integral(nu, z):
    assert exp_integral_scaled(nu, z) == pytest.approx(_laplace_form(nu, z), rel=1e-10)


@pytest.mark.parametrize("z", [0.0, -1.0])
def test_exp_integral_rejects_nonpositive_z(z):
    with pytest.raises(ValueError):
        exp_integral(1.0, z)


# --- adaptive quadrature ----------------------------------------------------


def test_quad_examples():
    r = adaptive_quad(lambda u: 1.0, 0.0, 1.0)
    assert r.value == pytest.approx(1.0, abs=1e-14)
    assert r.evaluations >= 3 and r.error_estimate >= 0
    assert adaptive_quad(lambda u: u * (1 - u), 0.0, 1.0).value == pytest.approx(1 / 6, abs=1e-14)


def test_quad_brownian_integrand_against_riemann_sum():
    x = 1.0

    def f(u):
        return u * (1 - u) * (np.exp(-x * x * u * u / 2) - np.exp(-x * x * (2 - u) ** 2 / 2))

    n = 10**6
    u = (np.arange(n) + 0.5) / n  # midpoint rule, error O(n^-2)
    riemann = float(np.sum(f(u)) / n)
    assert adaptive_quad(lambda v: float(f(v)), 0.0, 1.0).value == pytest.approx(riemann, abs=1e-10)


@pytest.mark.parametrize("k", [2, 5, 9])
def test_quad_relative_tolerance(k):
    exact = math.gamma(k + 1) * (1 - mp.gammainc(k + 1, 20) / mp.gamma(k + 1))
    got = adaptive_quad(lambda u: u**k * math.exp(-u), 0.0, 20.0, tol=1e-11).value
    assert abs(got - float(exact)) <= max(1e-11, 1e-11 * abs(got)) * 10


def test_quad_depth_limit():
    with pytest.raises(ConvergenceError):
        adaptive_quad(lambda u: math.sin(1 / u) if u else 0.0, 0.0, 1.0, tol=1e-15, max_depth=8)


# --- root finding and maximization ------------------------------------------


def test_brent_examples():
    assert brent_root(lambda z: z - 1.0, (0.0, 2.0)).root == pytest.approx(1.0, abs=1e-12)
    r = brent_root(lambda z: z * z - 2.0, (1.0, 2.0))
    assert r.root == pytest.approx(math.sqrt(2), abs=1e-12)
    assert r.bracket[0] <= r.root <= r.bracket[1]
    z1 = brent_root(lambda z: 2 * z * exp_integral_scaled(1.0, z) - 1.0, (0.01, 5.0))
    assert z1.root == pytest.approx(0.61, abs=0.01)
    assert abs(z1.residual) <= 1e-12


def test_brent_rejects_non_bracketing():
    with pytest.raises(BracketError):
        brent_root(lambda z: z * z + 1.0, (-1.0, 1.0))


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50), st.floats(0.1, 10), st.floats(0.1, 10))
def test_brent_root_of_shifted_cubic(c, left, right):
    g = lambda x: (x - c) ** 3 + (x - c)
    r = brent_root(g, (c - left, c + right))
    assert abs(r.root - c) <= 1e-9 * (1 + abs(c))


def test_maximize_examples():
    r = maximize_1d(lambda x: -((x - 2) ** 2), (0.0, 5.0))
    assert r.argmax == pytest.approx(2.0, abs=1e-7)
    assert r.max_value >= max(-4.0, -9.0)
    r = maximize_1d(lambda z: z * math.exp(-z), (0.0, 10.0))
    assert r.argmax == pytest.approx(1.0, abs=1e-7)
    r = maximize_1d(lambda z: phi_mu(0.5, z), (0.01, 5.0))
    assert r.argmax == pytest.approx(0.19, abs=0.01)
    assert not r.at_edge


def test_maximize_flags_edge():
    r = maximize_1d(lambda x: x, (0.0, 1.0))
    assert r.at_edge
    assert r.argmax == 1.0


def test_solvers_are_deterministic():
    g = lambda z: 2 * z * exp_integral_scaled(2.5, z) - 1.0
    a, b = brent_root(g, (0.1, 10.0)), brent_root(g, (0.1, 10.0))
    assert a == b
    f = lambda z: phi_mu(3.5, z)
    assert maximize_1d(f, (0.1, 10.0)) == maximize_1d(f, (0.1, 10.0))
