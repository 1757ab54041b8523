"""Radial integrators, the exact transform chain, and comparison barriers."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardylab.constants import ProblemParams
from hardylab.errors import DomainError
from hardylab.radial_ode import (
    RadialGrid,
    RadialProfile,
    annulus_barrier,
    critical_emden_solve,
    emden_fowler_forward,
    emden_fowler_inverse,
    integrate_radial,
    kelvin_transform,
    log_time_forward,
    log_time_inverse,
    radial_residual,
)


def _params45():
    return ProblemParams.from_nu(4, 0.5, 3.0, 4.0)


# ------------------------------------------------------------------ validation


def test_grid_validation():
    with pytest.raises(DomainError):
        RadialGrid(np.linspace(0.0, 1.0, 10))  # starts at 0
    with pytest.raises(DomainError):
        RadialGrid(np.array([1.0, 2.0, 3.0]))  # too few nodes
    with pytest.raises(DomainError):
        RadialGrid(np.linspace(1.0, 2.0, 10)[::-1])  # decreasing
    with pytest.raises(DomainError):
        RadialGrid(np.linspace(1.0, 2.0, 10), spacing="chebyshev")


def test_profile_validation():
    grid = RadialGrid.log(0.1, 1.0, 16)
    with pytest.raises(DomainError):
        RadialProfile(grid, np.ones(8))  # length mismatch
    bad = np.ones(16)
    bad[3] = np.inf
    with pytest.raises(DomainError):
        RadialProfile(grid, bad)
    with pytest.raises(DomainError):
        RadialProfile(grid, np.ones(16), meaning="psi")


def test_profile_interpolation_and_derivative():
    grid = RadialGrid.log(0.1, 10.0, 200)
    r = grid.radii
    prof = RadialProfile(grid, r**2, derivs=2 * r, meaning="v")
    assert prof(1.7) == pytest.approx(1.7**2, rel=1e-8)
    assert prof.derivative(1.7) == pytest.approx(3.4, rel=1e-8)


# ------------------------------------------------------------------ integrator


def test_harmonic_kernel_is_span_one_r_minus_alpha():
    # A = 0 leaves L v = 0, whose radial kernel is a + b r^{-alpha}
    p = _params45()
    a = p.alpha
    r0 = 0.1
    init = (r0, 2.0 + 3.0 * r0**-a, -3.0 * a * r0 ** (-a - 1.0))
    rep = integrate_radial(p, "absorption_only", 0.0, init, 10.0, tol=1e-12)
    exact = 2.0 + 3.0 * rep.profile.r**-a
    err = np.max(np.abs(rep.profile.values - exact) / exact)
    assert err < 1e-10
    assert not rep.blew_up


def test_zero_data_stays_zero():
    p = _params45()
    rep = integrate_radial(p, "full", 1.0, (0.1, 0.0, 0.0), 5.0, tol=1e-10)
    assert np.max(np.abs(rep.profile.values)) == 0.0


EXACT_ABSORPTION = [
    # (N, nu, q, A, c2): closed-form amplitude of v = c2 r^{nu - 2/(q-1)}
    (4, 0.5, 6.0, 1.0, 0.64310004064609202),
    (6, 0.5, 6.0, 1.0, 0.7911746047651193),
    (4, 0.5, 6.0, 2.5, 0.53541500152017889),
]


@pytest.mark.parametrize("n,nu,q,amp,c2", EXACT_ABSORPTION)
def test_exact_absorption_power_solution_residual(n, nu, q, amp, c2):
    # v = c2 r^beta with beta = nu - 2/(q-1), c2 = (beta(beta+alpha)/A)^{1/(q-1)}
    p = ProblemParams.from_nu(n, nu, (n + 2) / (n - 2), q)
    beta = nu - 2.0 / (q - 1.0)
    assert c2 == pytest.approx(
        (beta * (beta + p.alpha) / amp) ** (1.0 / (q - 1.0)), rel=1e-14
    )
    grid = RadialGrid.log(0.01, 1.0, 400)  # two decades
    r = grid.radii
    prof = RadialProfile(
        grid, c2 * r**beta, derivs=c2 * beta * r ** (beta - 1.0), meaning="v"
    )
    d2 = c2 * beta * (beta - 1.0) * r ** (beta - 2.0)
    res = radial_residual(p, prof, "absorption_only", amp, d2v=d2)
    assert np.max(res) < 1e-10


def test_integrator_tracks_exact_absorption_solution():
    p = ProblemParams.from_nu(4, 0.5, 3.0, 6.0)
    c2, beta = 0.11**0.2, 0.1
    r0 = 0.01
    init = (r0, c2 * r0**beta, c2 * beta * r0 ** (beta - 1.0))
    rep = integrate_radial(p, "absorption_only", 1.0, init, 1.0, tol=1e-11)
    exact = c2 * rep.profile.r**beta
    assert np.max(np.abs(rep.profile.values - exact) / exact) < 1e-10


def test_blowup_detection_and_cap_stability():
    p = ProblemParams.from_nu(4, 0.25, 3.0, 4.0)
    init = (1e-6, 1.0, 0.0)
    rep6 = integrate_radial(p, "absorption_only", 1.0, init, 100.0, cap=1e6, tol=1e-10)
    rep8 = integrate_radial(p, "absorption_only", 1.0, init, 100.0, cap=1e8, tol=1e-10)
    assert rep6.blew_up and rep8.blew_up
    assert rep8.blowup_radius > rep6.blowup_radius  # cap crossed later
    # the blow-up radius has essentially converged by cap 1e6
    assert rep8.blowup_radius == pytest.approx(rep6.blowup_radius, rel=1e-4)


def test_absorption_growth_is_monotone():
    p = _params45()
    rep = integrate_radial(p, "absorption_only", 1.0, (0.01, 1.0, 0.0), 2.0, tol=1e-10)
    assert np.all(np.diff(rep.profile.values) >= -1e-12)


def test_unknown_rhs_kind_rejected():
    p = _params45()
    with pytest.raises(DomainError):
        integrate_radial(p, "reaction", 1.0, (0.1, 1.0, 0.0), 1.0)


# ------------------------------------------------------------------ transforms


def test_emden_fowler_constant_amplitude():
    # v = c maps to y = alpha^{-nu} c; r = alpha maps to t = 1
    p = ProblemParams.from_nu(5, 0.5, 7 / 3, 3.0)  # alpha = 2
    grid = RadialGrid.log(0.5, 8.0, 64)
    c = 2.7
    y = emden_fowler_forward(p, RadialProfile(grid, np.full(64, c), meaning="v"))
    assert np.allclose(y.values, p.alpha**-p.nu * c, rtol=1e-14)
    t_of_alpha = (p.alpha / p.alpha) ** p.alpha
    assert t_of_alpha == 1.0
    # power map: v = r^beta -> y(t) = alpha^{-nu} (alpha t^{-1/alpha})^beta
    beta = 0.7
    y2 = emden_fowler_forward(p, RadialProfile(grid, grid.radii**beta, meaning="v"))
    expected = p.alpha**-p.nu * (p.alpha * y2.r ** (-1.0 / p.alpha)) ** beta
    assert np.allclose(y2.values, expected, rtol=1e-13)


def test_log_time_examples():
    p = _params45()
    grid = RadialGrid.log(0.2, 5.0, 64)
    vals = 1.3 * np.ones(64)
    y = emden_fowler_forward(p, RadialProfile(grid, vals, meaning="v"))
    x = log_time_forward(y)
    assert np.allclose(x.values, y.values)  # values relabeled, not changed
    # t = 1 maps to s = 0
    assert x.r[np.argmin(np.abs(y.r - 1.0))] == pytest.approx(
        math.log(y.r[np.argmin(np.abs(y.r - 1.0))]), abs=1e-15
    )
    # y = t^k becomes x = e^{ks}
    k = 0.6
    ypow = RadialProfile(y.grid, y.r**k, meaning="y")
    xpow = log_time_forward(ypow)
    assert np.allclose(xpow.values, np.exp(k * xpow.r), rtol=1e-13)


def test_kelvin_of_constant_is_fundamental_power():
    p = _params45()
    grid = RadialGrid.log(0.1, 10.0, 64)
    k = kelvin_transform(p, RadialProfile(grid, np.ones(64), meaning="v"))
    assert np.allclose(k.values, k.r**-p.alpha, rtol=1e-14)


def test_transform_round_trips_with_derivatives():
    p = _params45()
    grid = RadialGrid.log(0.1, 10.0, 64)
    r = grid.radii
    prof = RadialProfile(
        grid, np.exp(-r) * (1.0 + r), derivs=-np.exp(-r) * r, meaning="v"
    )
    y = emden_fowler_forward(p, prof)
    back = emden_fowler_inverse(p, y)
    assert np.max(np.abs(back.values - prof.values)) < 1e-12
    assert np.max(np.abs(back.r - r)) < 1e-12
    assert np.max(np.abs(back.derivs - prof.derivs)) < 1e-12
    x = log_time_forward(y)
    y2 = log_time_inverse(x)
    assert np.max(np.abs(y2.values - y.values)) < 1e-12
    assert np.max(np.abs(y2.derivs - y.derivs)) < 1e-12
    k2 = kelvin_transform(p, kelvin_transform(p, prof))
    assert np.max(np.abs(k2.values - prof.values)) < 1e-12
    assert np.max(np.abs(k2.derivs - prof.derivs)) < 1e-12


@given(
    nu=st.floats(min_value=0.05, max_value=0.95),
    amp=st.floats(min_value=0.1, max_value=10.0),
    beta=st.floats(min_value=-1.0, max_value=1.0),
)
@settings(max_examples=40, deadline=None)
def test_transform_chain_round_trip_on_powers(nu, amp, beta):
    p = ProblemParams.from_nu(4, nu, 3.0, 4.0)
    grid = RadialGrid.log(0.2, 5.0, 32)
    prof = RadialProfile(grid, amp * grid.radii**beta, meaning="v")
    y = emden_fowler_forward(p, prof)
    x = log_time_forward(y)
    back = emden_fowler_inverse(p, log_time_inverse(x))
    assert np.max(np.abs(back.values - prof.values)) < 1e-12 * amp
    assert np.max(np.abs(back.r - grid.radii) / grid.radii) < 1e-12


def test_transform_type_tags_enforced():
    p = _params45()
    grid = RadialGrid.log(0.1, 1.0, 16)
    uprof = RadialProfile(grid, np.ones(16), meaning="u")
    with pytest.raises(DomainError):
        emden_fowler_forward(p, uprof)
    with pytest.raises(DomainError):
        log_time_forward(uprof)


# --------------------------------------------------- critical-line asymptotics


def test_critical_emden_two_term_asymptote():
    # at q = q* the scaled amplitude x * (A(q-1)s)^{1/(q-1)} drifts from 1
    # by k log(s)/s with k = q/(q-1)^2
    p = ProblemParams.from_nu(4, 0.5, 3.0, 5.0)  # q = q* = 5
    prof = critical_emden_solve(p, 1.0, 1e4, 200.0, n_out=400)
    s_end = prof.r[0]
    assert s_end == pytest.approx(200.0, rel=1e-9)
    q = 5.0
    scaled = prof.values[0] * ((q - 1.0) * s_end) ** (1.0 / (q - 1.0))
    dev = abs(scaled - 1.0)
    predicted = q / (q - 1.0) ** 2 * math.log(s_end) / s_end
    assert dev == pytest.approx(0.0084, abs=5e-4)
    assert dev == pytest.approx(predicted, rel=0.15)


def test_critical_emden_deviation_shrinks_with_s():
    p = ProblemParams.from_nu(4, 0.5, 3.0, 5.0)
    q = 5.0

    def dev_at(s_end):
        prof = critical_emden_solve(p, 1.0, 1e4, s_end, n_out=200)
        scaled = prof.values[0] * ((q - 1.0) * prof.r[0]) ** (1.0 / (q - 1.0))
        return abs(scaled - 1.0)

    d200, d1000 = dev_at(200.0), dev_at(1000.0)
    assert d1000 < d200 / 3.0  # k log s / s drops ~3.8x from 200 to 1000


def test_critical_emden_rejects_off_line_exponent():
    p = ProblemParams.from_nu(4, 0.5, 3.0, 6.0)  # q = 6 != q* = 5
    with pytest.raises(DomainError):
        critical_emden_solve(p, 1.0, 1e4, 200.0)


# ----------------------------------------------------------- comparison barrier


def test_annulus_barrier_frozen_constant():
    p = ProblemParams.from_nu(4, 0.5, 3.0, 6.0)
    c, margin, r, w = annulus_barrier(p)
    assert c == pytest.approx(0.14697292988308597, rel=1e-10)
    assert margin <= 0.0
    assert np.all(w > 0.0)
    # barrier diverges toward both annulus edges
    assert w[0] > 10.0 * np.min(w) and w[-1] > 10.0 * np.min(w)


def test_annulus_barrier_needs_steep_exponent():
    p = ProblemParams.from_nu(4, 0.5, 3.0, 6.0)
    with pytest.raises(DomainError):
        annulus_barrier(p, beta=0.3)  # below 2/(q-1) = 0.4
