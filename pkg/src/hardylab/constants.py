"""Closed-form constants and parameter bookkeeping.

The whole library studies radial positive solutions of

    -Delta u - mu * u / |x|^2 = u^p - eps * u^q      on a domain in R^N,

with 0 <= mu < mu_bar = ((N-2)/2)^2.  The indicial roots of the Hardy
operator at the origin are

    nu  = sqrt(mu_bar) - sqrt(mu_bar - mu),
    nu' = sqrt(mu_bar) + sqrt(mu_bar - mu),

and every other exponent in the package is arithmetic on (N, mu, p, q).
This module owns that arithmetic plus the handful of special-function
values (Beta integrals, the Sobolev constant, the two bubble profiles)
that the solvers and acceptance checks compare against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError

__all__ = [
    "ProblemParams",
    "DerivedExponents",
    "derive",
    "beta_function",
    "talenti_profile",
    "sobolev_constant",
    "limit_z_profile",
    "omega_n",
]


def omega_n(N: int) -> float:
    """Surface measure of the unit sphere in R^N: 2 pi^(N/2) / Gamma(N/2)."""
    return 2.0 * math.pi ** (N / 2.0) / special.gamma(N / 2.0)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension, Hardy coefficient, nonlinearity exponents, perturbation.

    Validation is eager: every downstream formula divides by alpha, nu or
    q - 1, so a bad parameter set fails here rather than deep inside a solver.
    """

    N: int
    mu: float
    p: float
    q: float
    eps: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if not 0.0 <= self.mu < self.mu_bar:
            raise DomainError(
                f"need 0 <= mu < ((N-2)/2)^2 = {self.mu_bar}, got mu={self.mu}"
            )
        crit = (self.N + 2.0) / (self.N - 2.0)
        if self.p < crit:
            raise DomainError(f"need p >= (N+2)/(N-2) = {crit}, got p={self.p}")
        if self.q <= self.p:
            raise DomainError(f"need q > p, got q={self.q} <= p={self.p}")
        if self.eps < 0.0:
            raise DomainError(f"need eps >= 0, got {self.eps}")

    @property
    def mu_bar(self) -> float:
        return ((self.N - 2.0) / 2.0) ** 2

    @property
    def nu(self) -> float:
        return math.sqrt(self.mu_bar) - math.sqrt(self.mu_bar - self.mu)

    @property
    def nu_prime(self) -> float:
        return math.sqrt(self.mu_bar) + math.sqrt(self.mu_bar - self.mu)

    @property
    def alpha(self) -> float:
        """N - 2 - 2 nu, the decay rate of the weighted radial kernel r^-alpha."""
        return self.N - 2.0 - 2.0 * self.nu

    @classmethod
    def from_nu(cls, N: int, nu: float, p: float, q: float, eps: float = 0.0
                ) -> "ProblemParams":
        """Build params from the indicial root nu instead of mu (mu = nu*nu')."""
        mu = nu * (N - 2.0 - nu)
        return cls(N=N, mu=mu, p=p, q=q, eps=eps)


@dataclass(frozen=True)
class DerivedExponents:
    """Exponents derived from one parameter set; see :func:`derive`."""

    q_star: float      # critical absorption exponent (2 + nu) / nu
    mu_star: float     # Hardy threshold paired with q via the m=2/(q-1) ansatz
    m_abs: float       # absorption-regime singularity exponent 2 / (q - 1)
    theta: float       # Hoelder exponent 2 + 2 nu - (q + 1) nu
    l: float           # homogeneity exponent of the two-term functional
    c_qn: float        # ((N-2) q - (N+2)) / (2 (q+1))


def derive(params: ProblemParams) -> DerivedExponents:
    """Populate all derived exponents and check their mutual consistency.

    mu_star is the Hardy coefficient at which the absorption exponent
    2/(q-1) collides with nu; equivalently mu < mu_star iff q < q_star.
    """
    N, mu, q = params.N, params.mu, params.q
    nu = params.nu
    q_star = math.inf if nu == 0.0 else (2.0 + nu) / nu
    mu_star = params.mu_bar - ((N - 2.0) / 2.0 - 2.0 / (q - 1.0)) ** 2
    m_abs = 2.0 / (q - 1.0)
    theta = 2.0 + 2.0 * nu - (q + 1.0) * nu
    p = params.p
    denom = 2.0 * (p + 1.0) - N * (p - 1.0)
    # the homogeneity exponent degenerates exactly at the critical lower
    # exponent p = (N+2)/(N-2), where the two-term functional is replaced
    # by its constrained form; report inf rather than failing
    l = math.inf if denom == 0.0 else (2.0 * (q + 1.0) - N * (p - 1.0)) / denom
    c_qn = ((N - 2.0) * q - (N + 2.0)) / (2.0 * (q + 1.0))
    out = DerivedExponents(q_star=q_star, mu_star=mu_star, m_abs=m_abs,
                           theta=theta, l=l, c_qn=c_qn)
    # the two regime descriptions must agree about which side we are on
    # (skip the comparison on the boundary itself, where roundoff decides)
    on_boundary = math.isfinite(q_star) and abs(q - q_star) < 1e-9 * max(1.0, q_star)
    if not on_boundary and (mu < mu_star) != (q < q_star):
        raise DomainError(
            f"inconsistent regime arithmetic: mu={mu} vs mu*={mu_star}, "
            f"q={q} vs q*={q_star}"
        )
    if math.isfinite(q_star) and abs(q - q_star) < 1e-12 * max(1.0, q_star):
        if abs(m_abs - nu) > 1e-9:
            raise DomainError("q = q* but 2/(q-1) != nu; parameters corrupt")
    return out


def beta_function(a: float, b: float, dps: int | None = None) -> float:
    """Euler Beta B(a,b) = integral_0^inf t^(a-1) (1+t)^(-a-b) dt, a,b > 0.

    Evaluated through the Gamma-function ratio.  Pass ``dps`` for a
    software-float evaluation with that many decimal digits (used by the
    acceptance checks where large arguments cancel).
    """
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"Beta arguments must be positive, got ({a}, {b})")
    if dps is not None:
        with mp.workdps(dps):
            return float(mp.beta(a, b))
    return float(special.beta(a, b))


def talenti_profile(params: ProblemParams, x_radius):
    """Radial extremal bubble of the weighted Sobolev quotient.

    U(r) = (N alpha^2 / (N-2))^((N-2)/4) * (1 + r^(2 alpha/(N-2)))^(-(N-2)/2)

    solves the critical-source equation in the v = r^nu u variable; its tail
    decays like r^-alpha.
    """
    N, a = params.N, params.alpha
    r = np.asarray(x_radius, dtype=float)
    head = (N * a * a / (N - 2.0)) ** ((N - 2.0) / 4.0)
    out = head * (1.0 + r ** (2.0 * a / (N - 2.0))) ** (-(N - 2.0) / 2.0)
    return out if out.ndim else float(out)


def limit_z_profile(params: ProblemParams, r):
    """Normalized bubble Z with Z(0) = 1; the limit of the rescaled family.

    Z(r) = (1 + r^(2 alpha/(N-2)) / K)^(-(N-2)/2),  K = N alpha^2 / (N-2).
    Z equals sigma^(-alpha/2) U(r/sigma) for sigma = (alpha sqrt(N/(N-2)))^((N-2)/alpha).
    """
    N, a = params.N, params.alpha
    rr = np.asarray(r, dtype=float)
    K = N * a * a / (N - 2.0)
    out = (1.0 + rr ** (2.0 * a / (N - 2.0)) / K) ** (-(N - 2.0) / 2.0)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def _sn_by_quadrature(N: int) -> float:
    """Sobolev constant S_N from the Rayleigh quotient of the explicit
    extremal at mu = 0, by radial quadrature (self-verifying, no lookup)."""
    c = (N * (N - 2.0)) ** ((N - 2.0) / 4.0)

    def u(r):
        return c * (1.0 + r * r) ** (-(N - 2.0) / 2.0)

    def du(r):
        return -c * (N - 2.0) * r * (1.0 + r * r) ** (-N / 2.0)

    grad2, e1 = integrate.quad(lambda r: du(r) ** 2 * r ** (N - 1.0),
                               0.0, np.inf, limit=200)
    crit = 2.0 * N / (N - 2.0)
    mass, e2 = integrate.quad(lambda r: u(r) ** crit * r ** (N - 1.0),
                              0.0, np.inf, limit=200)
    if e1 > 1e-9 * abs(grad2) or e2 > 1e-9 * abs(mass):
        raise QuadratureError(
            f"Rayleigh-quotient tails for N={N} not resolved: {e1}, {e2}")
    wN = omega_n(N)
    return (wN * grad2) / (wN * mass) ** ((N - 2.0) / N)


def sobolev_constant(params: ProblemParams) -> float:
    """Best constant of the Hardy-Sobolev inequality at coefficient mu:

    S(mu) = S_N * (1 - mu/mu_bar)^((N-1)/N),

    with S_N itself obtained by quadrature of the mu = 0 extremal."""
    sn = _sn_by_quadrature(params.N)
    return sn * ((params.mu_bar - params.mu) / params.mu_bar) ** (
        (params.N - 1.0) / params.N)
