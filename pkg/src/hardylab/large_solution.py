"""Boundary-blow-up (large) solutions of the weighted absorption equation.

On the admissible band (N+2)/(N-2) < q < (1+nu)/nu the problem

    u'' + ((N-1-2 nu)/r) u' = r^{-(q-1) nu} u^q,   u(0) = u0 > 0, u'(0) = 0

explodes at a finite radius r*(u0); the resulting profile is the large
solution of the ball B_{r*} and rescales exactly under

    U_R(x) = R^{nu - 2/(q-1)} U_1(x / R),

which moves the blow-up radius linearly.  The infimum over R of the
rescaled family dominates every entire solution and tends to zero
pointwise — the comparison argument behind the Liouville property.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .constants import ProblemParams, derive
from .errors import DomainError, DominationViolated, NoBlowUp
from .radial_ode import RadialGrid, RadialProfile, integrate_radial

__all__ = [
    "LargeSolution",
    "shoot_large",
    "rescale_large",
    "liouville_domination_check",
    "finite_sweepout_time",
    "flat_blowup_distance",
]


@dataclass
class LargeSolution:
    profile: RadialProfile           # samples on (0, r*), diverging at r*
    blowup_radius: float
    params: ProblemParams
    cap_shift: float                 # relative move of r* when the cap doubles
    scaled_from: Optional[tuple] = None   # (original r*, scale factor)


def _check_band(params: ProblemParams) -> None:
    q, nu, N = params.q, params.nu, params.N
    hi = math.inf if nu == 0.0 else (1.0 + nu) / nu
    lo = (N + 2.0) / (N - 2.0)
    if not (lo < q < hi):
        raise DomainError(
            f"large solutions exist for (N+2)/(N-2) < q < (1+nu)/nu = "
            f"({lo:g}, {hi:g}); got q = {q}")


def shoot_large(params: ProblemParams, u0: float, cap: float = 1e8,
                r_limit: float = 100.0, tol: float = 1e-10,
                n_out: int = 1200) -> LargeSolution:
    """Shoot from u(0) = u0 and locate the finite blow-up radius.

    Launches from the Frobenius expansion u = u0 + u0^q r^theta /
    (theta (N - (q+1) nu)) at r0 = 1e-6 (theta = 2 - (q-1) nu > 0 on the
    admissible band) and integrates until the value crosses ``cap``; the
    crossing radius is located by event root-finding and certified by a
    doubled-cap rerun (``cap_shift`` records the relative displacement;
    the divergence u ~ c (r* - r)^{-2/(q-1)} makes it tiny).  Raises
    NoBlowUp if the solution stays below the cap out to ``r_limit``.
    """
    _check_band(params)
    if u0 <= 0.0:
        raise DomainError("shooting needs u0 > 0")
    N, nu, q = params.N, params.nu, params.q
    theta = 2.0 - (q - 1.0) * nu
    denom = N - (q + 1.0) * nu
    r0 = 1e-6
    u_r0 = u0 + u0 ** q * r0 ** theta / (theta * denom)
    du_r0 = u0 ** q * r0 ** (theta - 1.0) / denom

    rep = integrate_radial(params, "absorption_only", 1.0, (r0, u_r0, du_r0),
                           r_limit, tol=tol, cap=cap, n_out=n_out)
    if not rep.blew_up:
        raise NoBlowUp(
            f"no blow-up below r = {r_limit} from u0 = {u0} (cap {cap:g})")
    rep2 = integrate_radial(params, "absorption_only", 1.0,
                            (r0, u_r0, du_r0), r_limit, tol=tol,
                            cap=2.0 * cap, n_out=8)
    shift = abs(rep2.blowup_radius - rep.blowup_radius) / rep.blowup_radius
    return LargeSolution(profile=rep.profile,
                         blowup_radius=float(rep2.blowup_radius),
                         params=params, cap_shift=float(shift))


def rescale_large(sol: LargeSolution, scale: float) -> LargeSolution:
    """Apply the exact scaling U(x) -> scale^{nu - 2/(q-1)} U(x / scale).

    Multiplying the radius grid by ``scale`` and the values by the power
    factor maps one large solution to another; the blow-up radius moves
    exactly linearly.
    """
    if scale <= 0.0:
        raise DomainError("scale must be positive")
    params = sol.params
    m = params.nu - 2.0 / (params.q - 1.0)
    prof = sol.profile
    fac = scale ** m
    derivs = None if prof.derivs is None else prof.derivs * fac / scale
    new_prof = RadialProfile(RadialGrid(prof.r * scale, prof.grid.spacing),
                             prof.values * fac, derivs=derivs,
                             meaning=prof.meaning)
    return LargeSolution(profile=new_prof,
                         blowup_radius=sol.blowup_radius * scale,
                         params=params, cap_shift=sol.cap_shift,
                         scaled_from=(sol.blowup_radius, scale))


def liouville_domination_check(params: ProblemParams,
                               candidate: RadialProfile,
                               R_sequence: Sequence[float],
                               margin: float = 0.9,
                               rtol: float = 1e-9) -> dict:
    """Check that rescaled large solutions dominate an entire candidate.

    For each R in ``R_sequence`` the base large solution is rescaled so its
    blow-up sphere sits at R, and the candidate must stay below it on the
    shared radii up to ``margin * R`` (near the blow-up sphere the
    comparison is vacuous).  Returns per-R maximal ratios and the envelope
    inf_R U_R at a few probe radii — the quantity that tends to zero and
    forces the Liouville alternative.  Raises DominationViolated at the
    first offending radius.
    """
    base = shoot_large(params, 1.0)
    ratios = {}
    for R in R_sequence:
        if R <= 0.0:
            raise DomainError("R_sequence must be positive")
        scaled = rescale_large(base, R / base.blowup_radius)
        r = candidate.r
        sel = (r >= scaled.profile.r[0]) & (r <= margin * R)
        if not np.any(sel):
            raise DomainError(f"no shared radii below {margin} * {R}")
        big = np.asarray(scaled.profile(r[sel]))
        ratio = candidate.values[sel] / big
        worst = int(np.argmax(ratio))
        if ratio[worst] > 1.0 + rtol:
            raise DominationViolated(
                float(r[sel][worst]),
                f"candidate exceeds the large solution at r = "
                f"{r[sel][worst]:.6g} (ratio {ratio[worst]:.6g}, R = {R:g})")
        ratios[float(R)] = float(ratio[worst])
    probes = candidate.r[np.linspace(0, len(candidate.r) - 1, 5, dtype=int)]
    envelope = []
    for rp in probes:
        vals = []
        for R in R_sequence:
            scaled = rescale_large(base, R / base.blowup_radius)
            if scaled.profile.r[0] <= rp <= margin * R:
                vals.append(float(scaled.profile(rp)))
        envelope.append(min(vals) if vals else math.inf)
    return {"max_ratio": ratios, "probe_radii": probes.tolist(),
            "envelope": envelope, "passed": True}


# ---------------------------------------------------------------------------
# the 1-D finiteness criterion behind the boundary blow-up


def finite_sweepout_time(a: float, M: float, q: float) -> float:
    """Closed form of psi(a) = int_a^inf ds / sqrt(M s^{q+1} / (q+1)).

    Finiteness of this integral is the superlinearity criterion that makes
    boundary blow-up possible; for the pure power it evaluates to
    sqrt((q+1)/M) * (2/(q-1)) * a^{-(q-1)/2}.
    """
    if a <= 0.0 or M <= 0.0 or q <= 1.0:
        raise DomainError("need a > 0, M > 0, q > 1")
    return math.sqrt((q + 1.0) / M) * (2.0 / (q - 1.0)) * a ** (-(q - 1.0) / 2.0)


def flat_blowup_distance(a: float, M: float, q: float) -> float:
    """Blow-up position of w'' = M w^q, w(0) = a, w'(0) = 0 (no drift).

    First integral: w'^2 = 2M (w^{q+1} - a^{q+1})/(q+1), so the distance is
    T(a) = int_a^inf dw / sqrt(2M (w^{q+1} - a^{q+1})/(q+1)); computed with
    the substitution w = a (1 + s^2) that removes the inverse-square-root
    endpoint.
    """
    if a <= 0.0 or M <= 0.0 or q <= 1.0:
        raise DomainError("need a > 0, M > 0, q > 1")
    c = math.sqrt(2.0 * M / (q + 1.0))

    def integrand(s):
        w = a * (1.0 + s * s)
        return 2.0 * a * s / (c * math.sqrt(w ** (q + 1.0) - a ** (q + 1.0)))

    val, err = integrate.quad(integrand, 0.0, np.inf, limit=200,
                              epsabs=1e-13, epsrel=1e-11)
    if not math.isfinite(val) or err > 1e-7 * val:
        raise DomainError(f"distance quadrature unreliable: {val}, err {err}")
    return val
