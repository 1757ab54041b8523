"""Pohozaev-type integral identities on balls, in both variables.

For -Delta u - mu u/|x|^2 = u^p - eps u^q + g on B_R the multiplier
x.grad u + (N-2)/2 u yields, after integration by parts,

    [ 1/2 S(|grad u|^2) + (N-2)/2 S(u du/dn) + mu/2 S(u^2/|x|^2) ]      (LHS)
  - [ eps/(q+1) S(u^{q+1}) - eps (N/(q+1)-(N-2)/2) V(u^{q+1})
      + (N/(p+1)-(N-2)/2) V(u^{p+1}) - 1/(p+1) S(u^{p+1}) ]            (RHS)
  + V(g (x.grad u + (N-2)/2 u))  =  0,

where S(.) are boundary integrals carrying the factor <x,n> = R where it
appears and V(.) are volume integrals.  The substitution v = |x|^nu u gives
the weighted version with the multiplier x.grad v + alpha/2 v, the weights
|x|^{-2 nu}, |x|^{-(p+1) nu}, |x|^{-(q+1) nu}, and the coefficient
(N-2)/2 replaced by alpha/2 in the boundary trace term; the correction
integrals of the two versions are equal pointwise.  Both residuals are
reported raw and normalized by the largest participating term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .constants import ProblemParams, omega_n
from .errors import DomainError, NonIntegrableTail
from .quadrature import weighted_ball_integral
from .radial_ode import RadialProfile

__all__ = [
    "PohozaevReport",
    "pohozaev_u",
    "pohozaev_v_weighted",
    "nonexistence_obstruction",
]


@dataclass
class PohozaevReport:
    boundary_gradient_term: float
    boundary_trace_term: float
    boundary_hardy_term: float
    volume_p_term: float
    volume_q_term: float
    boundary_p_term: float
    boundary_q_term: float
    correction_term: float
    residual_raw: float
    residual: float      # residual_raw / max |term|
    scale: float


def _finish(lhs_terms, rhs_terms, corr) -> PohozaevReport:
    raw = sum(lhs_terms) - sum(rhs_terms) + corr
    scale = max(max(abs(t) for t in lhs_terms + rhs_terms), abs(corr), 1e-300)
    bg, bt, bh = lhs_terms
    bq, vq, vp, bp = rhs_terms
    return PohozaevReport(
        boundary_gradient_term=bg, boundary_trace_term=bt,
        boundary_hardy_term=bh, volume_p_term=vp, volume_q_term=vq,
        boundary_p_term=bp, boundary_q_term=bq, correction_term=corr,
        residual_raw=raw, residual=raw / scale, scale=scale)


def _at(profile: RadialProfile, R: float) -> tuple:
    r = profile.r
    if R > r[-1] * (1.0 + 1e-12):
        raise DomainError(f"R = {R} lies beyond the sampled grid (max {r[-1]})")
    return float(profile(R)), float(profile.derivative(R))


def _volume(profile: RadialProfile, power: float, s_exp: float,
            R: float, extra: Optional[np.ndarray] = None) -> float:
    """integral_0^R r^{s_exp} f dr with f = |u|^power, or f = extra if given."""
    r = profile.r
    sel = r <= R * (1.0 + 1e-12)
    vals = np.abs(profile.values[sel]) ** power if extra is None else extra[sel]
    grid = r[sel]
    return weighted_ball_integral(grid, vals, s_exp)


def pohozaev_u(params: ProblemParams, profile: RadialProfile,
               R: Optional[float] = None, dirichlet: bool = False,
               forcing: Optional[Callable] = None) -> PohozaevReport:
    """Evaluate the identity above for a u-profile on the ball of radius R.

    ``forcing`` is the defect g(r) of the profile under the equation; for an
    exact solution it is zero and the residual measures data quality alone.
    With ``dirichlet`` the boundary-trace terms are dropped (the reduced
    identity for zero boundary data, where |grad u| = |du/dn| on the
    boundary); the gradient flux term remains.

    Volume integrals use the head-corrected radial quadrature and raise
    NonIntegrableTail when the profile's singularity makes a term infinite.
    """
    if profile.meaning not in ("u",):
        raise DomainError(f"expected a u-profile, got {profile.meaning!r}")
    N, mu, p, q, eps = params.N, params.mu, params.p, params.q, params.eps
    r = profile.r
    R = float(r[-1]) if R is None else float(R)
    wn = omega_n(N)
    surf = wn * R ** (N - 1.0)
    uR, duR = _at(profile, R)
    if dirichlet:
        uR = 0.0

    bg = 0.5 * surf * R * duR ** 2
    bt = (N - 2.0) / 2.0 * surf * uR * duR
    bh = mu / 2.0 * surf * uR ** 2 / R ** 2 * R

    int_up1 = wn * _volume(profile, p + 1.0, N - 1.0, R)
    int_uq1 = wn * _volume(profile, q + 1.0, N - 1.0, R)
    vp = (N / (p + 1.0) - (N - 2.0) / 2.0) * int_up1
    vq = -eps * (N / (q + 1.0) - (N - 2.0) / 2.0) * int_uq1
    bp = -1.0 / (p + 1.0) * surf * R * uR ** (p + 1.0)
    bq = eps / (q + 1.0) * surf * R * uR ** (q + 1.0)

    corr = 0.0
    if forcing is not None:
        g = np.asarray(forcing(r), dtype=float)
        du = (profile.derivs if profile.derivs is not None
              else profile.spline()(r, 1))
        mult = r * du + (N - 2.0) / 2.0 * profile.values
        corr = wn * _volume(profile, 0.0, N - 1.0, R, extra=g * mult)
    return _finish([bg, bt, bh], [bq, vq, vp, bp], corr)


def pohozaev_v_weighted(params: ProblemParams, profile: RadialProfile,
                        R: Optional[float] = None, dirichlet: bool = False,
                        forcing: Optional[Callable] = None) -> PohozaevReport:
    """The weighted form of the identity, for v = |x|^nu u profiles.

    Same bookkeeping and sign conventions as :func:`pohozaev_u`, with the
    power weights in every integral, alpha/2 in the trace term, and no
    separate Hardy boundary term (the weight absorbs it).  For the same
    underlying function the raw residuals of the two routes coincide.

    ``forcing`` is still the u-equation defect g(r); the weighted
    correction integrand r^{-nu} g (r v' + alpha/2 v) equals the unweighted
    one pointwise.
    """
    if profile.meaning not in ("v", "w"):
        raise DomainError(f"expected a v-profile, got {profile.meaning!r}")
    N, nu, p, q, eps = params.N, params.nu, params.p, params.q, params.eps
    a = params.alpha
    r = profile.r
    R = float(r[-1]) if R is None else float(R)
    wn = omega_n(N)
    surf = wn * R ** (N - 1.0)
    vR, dvR = _at(profile, R)
    if dirichlet:
        vR = 0.0

    bg = 0.5 * surf * R ** (-2.0 * nu) * R * dvR ** 2
    bt = a / 2.0 * surf * R ** (-2.0 * nu) * vR * dvR
    bh = 0.0

    int_vp1 = wn * _volume(profile, p + 1.0, N - 1.0 - (p + 1.0) * nu, R)
    int_vq1 = wn * _volume(profile, q + 1.0, N - 1.0 - (q + 1.0) * nu, R)
    vp = (N / (p + 1.0) - (N - 2.0) / 2.0) * int_vp1
    vq = -eps * (N / (q + 1.0) - (N - 2.0) / 2.0) * int_vq1
    bp = -1.0 / (p + 1.0) * surf * R ** (-(p + 1.0) * nu) * R * vR ** (p + 1.0)
    bq = eps / (q + 1.0) * surf * R ** (-(q + 1.0) * nu) * R * vR ** (q + 1.0)

    corr = 0.0
    if forcing is not None:
        g = np.asarray(forcing(r), dtype=float)
        dv = (profile.derivs if profile.derivs is not None
              else profile.spline()(r, 1))
        mult = r * dv + a / 2.0 * profile.values
        corr = wn * _volume(profile, 0.0, N - 1.0 - nu, R, extra=g * mult)
    return _finish([bg, bt, bh], [bq, vq, vp, bp], corr)


def nonexistence_obstruction(params: ProblemParams, candidate: RadialProfile
                             ) -> float:
    """The quantity ((N-2)/2 - N/(q+1)) * integral_{R^N} u^{q+1} dx.

    Positive whenever q exceeds the critical source exponent, which is what
    rules out entire finite-energy solutions: combining the ball identity
    with the energy identity, every other term cancels or decays, so the
    identity would force this strictly positive quantity to vanish.  The
    integral extends the sampled candidate beyond its grid by the fitted
    tail power, and requires that tail to be integrable.
    """
    N, q = params.N, params.q
    coef = (N - 2.0) / 2.0 - N / (q + 1.0)
    if coef <= 0.0:
        raise DomainError("obstruction needs q above the critical exponent")
    r = candidate.r
    u = candidate.values
    if np.any(u <= 0.0):
        raise DomainError("candidate must be strictly positive")
    body = omega_n(N) * weighted_ball_integral(r, u ** (q + 1.0), N - 1.0)
    # extend by the tail power law fitted on the outer decade
    m = np.log(u[-1] / u[-8]) / np.log(r[-1] / r[-8])
    tail_exp = (q + 1.0) * m + N - 1.0      # integrand ~ r^{tail_exp}
    if tail_exp >= -1.0:
        raise NonIntegrableTail(
            f"candidate tail u ~ r^{m:.3f} is not (q+1)-integrable")
    amp = u[-1] ** (q + 1.0) * r[-1] ** (N - 1.0)
    tail = omega_n(N) * amp * r[-1] / (-(tail_exp + 1.0))
    return coef * (body + tail)
