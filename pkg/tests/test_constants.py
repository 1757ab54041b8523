"""Parameter validation, derived exponents, and closed-form profile values."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardylab.constants import (
    DerivedExponents,
    ProblemParams,
    beta_function,
    derive,
    limit_z_profile,
    omega_n,
    sobolev_constant,
    talenti_profile,
)
from hardylab.errors import DomainError


# ---------------------------------------------------------------- parameters


def test_mu_bar_is_square_of_half_dimension_defect():
    for n in (3, 4, 5, 6, 10):
        p = ProblemParams(N=n, mu=0.0, p=(n + 2) / (n - 2), q=(n + 2) / (n - 2) + 1)
        assert p.mu_bar == ((n - 2) / 2) ** 2


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(N=2, mu=0.0, p=5.0, q=6.0),  # dimension too small
        dict(N=4, mu=-0.1, p=3.0, q=4.0),  # negative Hardy coefficient
        dict(N=4, mu=1.0, p=3.0, q=4.0),  # mu = mu_bar excluded
        dict(N=4, mu=1.5, p=3.0, q=4.0),  # above mu_bar
        dict(N=4, mu=0.5, p=2.5, q=4.0),  # subcritical p
        dict(N=4, mu=0.5, p=3.0, q=3.0),  # q must exceed p
        dict(N=4, mu=0.5, p=3.0, q=2.0),
        dict(N=4, mu=0.5, p=3.0, q=4.0, eps=-1e-3),  # negative absorption
    ],
)
def test_parameter_validation_rejects(kwargs):
    with pytest.raises(DomainError):
        ProblemParams(**kwargs)


def test_mu_zero_and_critical_p_are_allowed():
    p = ProblemParams(N=4, mu=0.0, p=3.0, q=4.0)
    assert p.nu == 0.0
    assert p.nu_prime == 2.0
    assert p.alpha == 2.0


def test_from_nu_round_trip():
    p = ProblemParams.from_nu(4, 0.5, 3.0, 4.0)
    assert p.mu == pytest.approx(0.75, abs=0)
    assert p.nu == pytest.approx(0.5, rel=1e-15)


@given(
    n=st.integers(min_value=3, max_value=8),
    frac=st.floats(min_value=1e-3, max_value=0.999),
)
@settings(max_examples=60, deadline=None)
def test_indicial_roots_satisfy_vieta(n, frac):
    # nu and nu' are the roots of m^2 - (N-2)m + mu = 0
    mu_bar = ((n - 2) / 2) ** 2
    mu = frac * mu_bar
    pcrit = (n + 2) / (n - 2)
    p = ProblemParams(N=n, mu=mu, p=pcrit, q=pcrit + 1.0)
    assert p.nu * p.nu_prime == pytest.approx(mu, rel=1e-12)
    assert p.nu + p.nu_prime == pytest.approx(n - 2, rel=1e-12)
    assert 0 <= p.nu < (n - 2) / 2 < p.nu_prime
    assert p.alpha == pytest.approx(p.nu_prime - p.nu, rel=1e-12)


# ------------------------------------------------------------- sphere measure


def test_unit_sphere_measures():
    assert omega_n(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert omega_n(3) == pytest.approx(4 * math.pi, rel=1e-15)
    assert omega_n(4) == pytest.approx(2 * math.pi**2, rel=1e-15)
    assert omega_n(5) == pytest.approx(8 * math.pi**2 / 3, rel=1e-15)
    assert omega_n(6) == pytest.approx(math.pi**3, rel=1e-15)


# ---------------------------------------------------------- derived exponents


def test_derive_critical_mu_zero():
    d = derive(ProblemParams(N=4, mu=0.0, p=3.0, q=4.0))
    assert isinstance(d, DerivedExponents)
    assert d.q_star == math.inf  # no finite absorption threshold at nu = 0
    assert d.m_abs == pytest.approx(2 / 3, rel=1e-15)
    assert math.isinf(d.l)  # critical p: the two-term functional degenerates


def test_derive_reference_set():
    p = ProblemParams.from_nu(4, 0.5, 3.0, 6.0)
    d = derive(p)
    assert d.q_star == pytest.approx(5.0, rel=1e-14)
    assert d.m_abs == pytest.approx(0.4, rel=1e-14)
    assert d.mu_star == pytest.approx(0.64, rel=1e-14)
    assert d.theta == pytest.approx(2 + 2 * 0.5 - 7 * 0.5, rel=1e-12)
    assert d.c_qn == pytest.approx((2 * 6 - 6) / 14, rel=1e-14)


def test_m_abs_equals_nu_exactly_at_threshold():
    # at q = q* the absorption exponent collides with the indicial root
    p = ProblemParams.from_nu(4, 0.5, 3.0, 5.0)
    d = derive(p)
    assert abs(d.m_abs - p.nu) < 1e-14


def test_supercritical_l_exponent():
    # l = (2(q+1) - N(p-1)) / (2(p+1) - N(p-1)), finite above the critical line
    p = ProblemParams(N=6, mu=1.75, p=2.2, q=2.5)
    d = derive(p)
    expected = (2 * 3.5 - 6 * 1.2) / (2 * 3.2 - 6 * 1.2)
    assert d.l == pytest.approx(expected, rel=1e-13)
    assert math.isfinite(d.l)


# -------------------------------------------------------------- Beta function


def test_beta_small_integers():
    assert beta_function(1.0, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert beta_function(2.0, 1.0) == pytest.approx(0.5, rel=1e-14)  # 2/N at N=4
    assert beta_function(2.0, 3.0) == pytest.approx(1 / 12, rel=1e-13)


@given(
    a=st.floats(min_value=0.2, max_value=8.0),
    b=st.floats(min_value=0.2, max_value=8.0),
)
@settings(max_examples=50, deadline=None)
def test_beta_symmetry_and_positivity(a, b):
    ba = beta_function(a, b)
    assert ba > 0
    assert ba == pytest.approx(beta_function(b, a), rel=1e-12)


def test_beta_matches_gamma_quotient():
    a, b = 1.7, 2.9
    expected = math.gamma(a) * math.gamma(b) / math.gamma(a + b)
    assert beta_function(a, b) == pytest.approx(expected, rel=1e-13)


# ------------------------------------------------------------ model profiles


def test_talenti_value_at_origin():
    p = ProblemParams.from_nu(4, 0.5, 3.0, 4.0)
    assert talenti_profile(p, 0.0) == pytest.approx(math.sqrt(2), rel=1e-14)


def test_talenti_origin_closed_form():
    # U(0) = (N alpha^2 / (N-2))^{(N-2)/4}
    for n, nu in [(4, 0.5), (5, 0.8), (6, 1.2)]:
        p = ProblemParams.from_nu(n, nu, (n + 2) / (n - 2), (n + 2) / (n - 2) + 1)
        expected = (n * p.alpha**2 / (n - 2)) ** ((n - 2) / 4)
        assert talenti_profile(p, 0.0) == pytest.approx(expected, rel=1e-13)


def test_talenti_far_field_power():
    # U(r) ~ const * r^{-alpha}: log-log slope of the far tail
    p = ProblemParams.from_nu(4, 0.5, 3.0, 4.0)
    r = np.geomspace(1e4, 1e6, 40)
    slope = np.polyfit(np.log(r), np.log(talenti_profile(p, r)), 1)[0]
    assert slope == pytest.approx(-p.alpha, abs=1e-3)


def test_limit_profile_normalized_at_origin():
    for n, nu in [(4, 0.5), (5, 0.3), (6, 1.2)]:
        p = ProblemParams.from_nu(n, nu, (n + 2) / (n - 2), (n + 2) / (n - 2) + 1)
        assert limit_z_profile(p, 0.0) == pytest.approx(1.0, rel=1e-14)


def test_limit_profile_tail_power():
    p = ProblemParams.from_nu(5, 0.5, 7 / 3, 3.0)
    r = np.geomspace(1e4, 1e6, 40)
    slope = np.polyfit(np.log(r), np.log(limit_z_profile(p, r)), 1)[0]
    assert slope == pytest.approx(-p.alpha, abs=1e-3)


# ------------------------------------------------------------ Sobolev values


# quadrature oracles, frozen: S_N for the unweighted problem and the weighted
# constant S_N * ((mu_bar - mu)/mu_bar)^{(N-1)/N}
FROZEN_S_N = {4: 10.260398641294913, 5: 14.811911720005934, 6: 19.259456665473206}


@pytest.mark.parametrize("n", [4, 5, 6])
def test_sobolev_constant_mu_zero(n):
    pcrit = (n + 2) / (n - 2)
    p = ProblemParams(N=n, mu=0.0, p=pcrit, q=pcrit + 1.0)
    assert sobolev_constant(p) == pytest.approx(FROZEN_S_N[n], rel=1e-10)


def test_sobolev_constant_weighted_scaling():
    # S(mu) = S(0) * ((mu_bar - mu)/mu_bar)^{(N-1)/N}
    p0 = ProblemParams(N=4, mu=0.0, p=3.0, q=4.0)
    p1 = ProblemParams(N=4, mu=0.75, p=3.0, q=4.0)
    assert sobolev_constant(p1) == pytest.approx(
        sobolev_constant(p0) * 4.0**-0.75, rel=1e-12
    )


@pytest.mark.parametrize(
    "n,mu,expected",
    [
        (4, 0.75, 3.6275987284684357),
        (5, 1.0, 9.2553556307113967),
        (6, 1.75, 11.923748392993354),
    ],
)
def test_sobolev_constant_frozen_values(n, mu, expected):
    pcrit = (n + 2) / (n - 2)
    p = ProblemParams(N=n, mu=mu, p=pcrit, q=pcrit + 1.0)
    assert sobolev_constant(p) == pytest.approx(expected, rel=1e-10)
