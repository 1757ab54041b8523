"""Integrators and changes of variables for the singular radial equations.

Everything radial in this package reduces to the weighted operator

    L v = v'' + ((N - 1 - 2 nu) / r) v'

(the radial part of div(|x|^{-2nu} grad .) up to the weight factor), fed
with power-law-weighted nonlinearities.  This module integrates such
equations adaptively, detects finite-radius blow-up, and implements the
exact variable chain

    u(r)  --(v = r^nu u)-->  v(r)  --(t = (alpha/r)^alpha, y = alpha^-nu v)-->
    y(t)  --(s = log t, x = y)-->  x(s)

together with the inversion r -> 1/r Kelvin map.  The y-variable turns L
into a pure second derivative: y''(t) = A t^{-(2 alpha + 2 - (q-1) nu)/alpha} y^q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .constants import ProblemParams, derive
from .errors import BlowUpBackward, DomainError, StepUnderflow

__all__ = [
    "RadialGrid",
    "RadialProfile",
    "OdeSolveReport",
    "integrate_radial",
    "emden_fowler_forward",
    "emden_fowler_inverse",
    "log_time_forward",
    "log_time_inverse",
    "kelvin_transform",
    "critical_emden_solve",
    "radial_residual",
    "annulus_barrier",
]

BLOWUP_CAP = 1e8

_MEANINGS = ("u", "v", "y", "x", "w", "z")


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing positive radii with a spacing tag."""

    radii: np.ndarray
    spacing: str = "log"

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        object.__setattr__(self, "radii", r)
        if r.size < 8:
            raise DomainError("a radial grid needs at least 8 nodes")
        if r[0] <= 0.0 or np.any(np.diff(r) <= 0.0):
            raise DomainError("radii must be strictly increasing and positive")
        if self.spacing not in ("log", "uniform", "geometric"):
            raise DomainError(f"unknown spacing tag {self.spacing!r}")

    @classmethod
    def log(cls, r_min: float, r_max: float, n: int) -> "RadialGrid":
        return cls(np.geomspace(r_min, r_max, n), "log")

    @classmethod
    def uniform(cls, r_min: float, r_max: float, n: int) -> "RadialGrid":
        return cls(np.linspace(r_min, r_max, n), "uniform")


@dataclass
class RadialProfile:
    """A sampled radial function, tagged with which unknown it stores.

    ``meaning`` is one of 'u', 'v', 'y', 'x' (the transform chain) plus the
    auxiliary tags 'w' (fixed-point iterates) and 'z' (rescaled bubbles).
    Values must be finite; derivatives, when carried, are samples of the
    derivative with respect to the profile's own abscissa.
    """

    grid: RadialGrid
    values: np.ndarray
    derivs: Optional[np.ndarray] = None
    meaning: str = "v"
    _spline: Optional[CubicSpline] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        self.values = v
        if v.shape != self.grid.radii.shape:
            raise DomainError("values and grid length mismatch")
        if not np.all(np.isfinite(v)):
            raise DomainError("profile values must be finite")
        if self.derivs is not None:
            d = np.asarray(self.derivs, dtype=float)
            if d.shape != v.shape:
                raise DomainError("derivs and values length mismatch")
            self.derivs = d
        if self.meaning not in _MEANINGS:
            raise DomainError(f"unknown meaning tag {self.meaning!r}")

    @property
    def r(self) -> np.ndarray:
        return self.grid.radii

    def spline(self) -> CubicSpline:
        if self._spline is None:
            self._spline = CubicSpline(self.grid.radii, self.values)
        return self._spline

    def __call__(self, r):
        """Evaluate by cubic interpolation (constant-extrapolate below grid)."""
        r = np.asarray(r, dtype=float)
        out = self.spline()(np.clip(r, self.grid.radii[0], self.grid.radii[-1]))
        return out if out.ndim else float(out)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.derivs is not None:
            out = CubicSpline(self.grid.radii, self.derivs)(r)
        else:
            out = self.spline()(r, 1)
        return out if out.ndim else float(out)


@dataclass
class OdeSolveReport:
    profile: RadialProfile
    blew_up: bool
    blowup_radius: Optional[float]
    steps_taken: int


def _rhs_factory(params: ProblemParams, rhs_kind: str, A: float
                 ) -> Callable[[float, float], float]:
    N, nu, p, q, eps = params.N, params.nu, params.p, params.q, params.eps

    def spow(v, k):
        return np.sign(v) * np.abs(v) ** k

    if rhs_kind == "absorption_only":
        return lambda r, v: A * r ** (-(q - 1.0) * nu) * spow(v, q)
    if rhs_kind == "source_only":
        return lambda r, v: -A * r ** (-(p - 1.0) * nu) * spow(v, p)
    if rhs_kind == "full":
        return lambda r, v: (-r ** (-(p - 1.0) * nu) * spow(v, p)
                             + eps * r ** (-(q - 1.0) * nu) * spow(v, q))
    raise DomainError(f"unknown rhs_kind {rhs_kind!r}")


def integrate_radial(params: ProblemParams, rhs_kind: str, A: float,
                     init: tuple, r_end: float, tol: float = 1e-8,
                     cap: float = BLOWUP_CAP, n_out: int = 400,
                     sample_at: Optional[np.ndarray] = None) -> OdeSolveReport:
    """Adaptively integrate L v = f(r, v) outward from r0 > 0.

    ``init`` is (r0, v0, v0'); ``rhs_kind`` selects f:

        absorption_only:  A r^{-(q-1) nu} v^q
        source_only:     -A r^{-(p-1) nu} v^p
        full:            -r^{-(p-1) nu} v^p + eps r^{-(q-1) nu} v^q

    Blow-up is reported (not raised) when |v| crosses ``cap``; the crossing
    radius is located by the integrator's event root-finding.  A step
    collapse without a cap crossing raises StepUnderflow.
    """
    r0, v0, dv0 = init
    if r0 <= 0.0:
        raise DomainError("integration must start at r0 > 0")
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    f = _rhs_factory(params, rhs_kind, A)
    drift = params.N - 1.0 - 2.0 * params.nu

    def sys(r, yv):
        v, dv = yv
        return [dv, f(r, v) - drift * dv / r]

    def hit_cap(r, yv):
        return cap - abs(yv[0])

    hit_cap.terminal = True
    hit_cap.direction = -1

    sol = solve_ivp(sys, (r0, r_end), [v0, dv0], method="DOP853",
                    rtol=tol, atol=tol * 1e-2, dense_output=True,
                    events=hit_cap)
    blew_up = bool(sol.t_events[0].size)
    if sol.status == -1 and not blew_up:
        raise StepUnderflow(f"step collapsed at r = {sol.t[-1]:.6g}: {sol.message}")
    r_stop = sol.t_events[0][0] if blew_up else sol.t[-1]
    if sample_at is not None:
        rs = np.asarray(sample_at, dtype=float)
        rs = rs[(rs >= r0) & (rs <= r_stop)]
    else:
        rs = np.geomspace(r0, r_stop, n_out)
    vals = sol.sol(rs)
    profile = RadialProfile(RadialGrid(rs, "log"), vals[0], derivs=vals[1],
                            meaning="v")
    return OdeSolveReport(profile=profile, blew_up=blew_up,
                          blowup_radius=float(r_stop) if blew_up else None,
                          steps_taken=len(sol.t) - 1)


# ---------------------------------------------------------------------------
# the transform chain


def emden_fowler_forward(params: ProblemParams, profile: RadialProfile
                         ) -> RadialProfile:
    """v(r) -> y(t) with t = (alpha/r)^alpha and y = alpha^{-nu} v.

    The map reverses orientation (t decreases in r); the output grid is
    flipped back to increasing order.  With this amplitude the transformed
    unknown satisfies the pure-second-derivative equation
    y'' = A t^{-(2 alpha + 2 - (q-1) nu)/alpha} y^q for the absorption
    problem.
    """
    if profile.meaning != "v":
        raise DomainError(f"expected a v-profile, got {profile.meaning!r}")
    a, nu = params.alpha, params.nu
    r = profile.r
    if np.any(r <= 0.0):
        raise DomainError("all radii must be positive")
    t = (a / r) ** a
    y = a ** (-nu) * profile.values
    dy = None
    if profile.derivs is not None:
        # dy/dt = alpha^{-nu} v'(r) dr/dt,  dr/dt = -t^{-(alpha+1)/alpha}
        dy = a ** (-nu) * profile.derivs * (-(t ** (-(a + 1.0) / a)))
        dy = dy[::-1]
    return RadialProfile(RadialGrid(t[::-1], profile.grid.spacing),
                         y[::-1], derivs=dy, meaning="y")


def emden_fowler_inverse(params: ProblemParams, profile: RadialProfile
                         ) -> RadialProfile:
    """y(t) -> v(r), the exact inverse of emden_fowler_forward."""
    if profile.meaning != "y":
        raise DomainError(f"expected a y-profile, got {profile.meaning!r}")
    a, nu = params.alpha, params.nu
    t = profile.r
    r = a * t ** (-1.0 / a)
    v = a ** nu * profile.values
    dv = None
    if profile.derivs is not None:
        # dv/dr = alpha^{nu} y'(t) dt/dr,  dt/dr = -alpha^{alpha+1} r^{-alpha-1}
        dv = a ** nu * profile.derivs * (-(a ** (a + 1.0)) * r ** (-a - 1.0))
        dv = dv[::-1]
    return RadialProfile(RadialGrid(r[::-1], profile.grid.spacing),
                         v[::-1], derivs=dv, meaning="v")


def log_time_forward(profile: RadialProfile) -> RadialProfile:
    """y(t) -> x(s) on s = log t (values unchanged, abscissa relabeled)."""
    if profile.meaning != "y":
        raise DomainError(f"expected a y-profile, got {profile.meaning!r}")
    t = profile.r
    if np.any(t <= 0.0):
        raise DomainError("log time needs t > 0")
    s = np.log(t)
    dx = None if profile.derivs is None else profile.derivs * t
    grid = RadialGrid(s, "uniform") if s[0] > 0 else _shifted_grid(s)
    return RadialProfile(grid, profile.values.copy(), derivs=dx, meaning="x")


def _shifted_grid(s: np.ndarray) -> RadialGrid:
    # s = log t may start at or below 0; RadialGrid wants positive abscissas,
    # so x-profiles carry their s-offset in a side channel
    grid = RadialGrid.__new__(RadialGrid)
    object.__setattr__(grid, "radii", s)
    object.__setattr__(grid, "spacing", "uniform")
    return grid


def log_time_inverse(profile: RadialProfile) -> RadialProfile:
    """x(s) -> y(t) with t = e^s."""
    if profile.meaning != "x":
        raise DomainError(f"expected an x-profile, got {profile.meaning!r}")
    s = profile.r
    t = np.exp(s)
    dy = None if profile.derivs is None else profile.derivs / t
    return RadialProfile(RadialGrid(t, "log"), profile.values.copy(),
                         derivs=dy, meaning="y")


def kelvin_transform(params: ProblemParams, profile: RadialProfile
                     ) -> RadialProfile:
    """z(r) -> r^{-alpha} z(1/r) on the inverted grid.

    An involution: applying it twice returns the input exactly.  Maps the
    bounded-at-infinity tail r^{-alpha} to a profile bounded at the origin
    and vice versa.
    """
    a = params.alpha
    r = profile.r
    if np.any(r <= 0.0):
        raise DomainError("Kelvin inversion needs strictly positive radii")
    rr = (1.0 / r)[::-1]
    zz = (rr ** (-a)) * profile.values[::-1]
    dd = None
    if profile.derivs is not None:
        # d/dr [r^{-a} z(1/r)] = -a r^{-a-1} z(1/r) - r^{-a-2} z'(1/r)
        dd = (-a * rr ** (-a - 1.0) * profile.values[::-1]
              - rr ** (-a - 2.0) * profile.derivs[::-1])
    return RadialProfile(RadialGrid(rr, profile.grid.spacing), zz,
                         derivs=dd, meaning=profile.meaning)


# ---------------------------------------------------------------------------
# the critical-exponent logarithmic equation


def critical_emden_solve(params: ProblemParams, A: float, s_start: float,
                         s_end: float, cap: float = BLOWUP_CAP,
                         n_out: int = 800) -> RadialProfile:
    """Integrate x'' - x' - A x^q = 0 backward from a large-s asymptote.

    Valid only at the borderline exponent q = (2 + nu)/nu, where the
    absorption problem's singular amplitude picks up a logarithmic
    correction.  The initialization is the two-term expansion

        x(s) = (A (q-1) s)^{-1/(q-1)} (1 + q/(q-1)^2 * log(s)/s),

    accurate to O((log s / s)^2); integration runs from s_start down to
    s_end.  Raises BlowUpBackward if x leaves [0, cap].
    """
    der = derive(params)
    q = params.q
    if not math.isfinite(der.q_star) or abs(q - der.q_star) > 1e-12 * der.q_star:
        raise DomainError(
            f"log-corrected solver needs q = (2+nu)/nu = {der.q_star}, got {q}")
    if not s_start > s_end:
        raise DomainError("need s_start > s_end (integration runs backward)")
    m = 1.0 / (q - 1.0)
    k = q / (q - 1.0) ** 2
    c = (A * (q - 1.0)) ** (-m)

    s0 = s_start
    corr = 1.0 + k * math.log(s0) / s0
    x0 = c * s0 ** (-m) * corr
    dx0 = c * (-m * s0 ** (-m - 1.0) * corr
               + s0 ** (-m) * k * (1.0 - math.log(s0)) / s0 ** 2)

    def sys(sig, yv):  # sigma = -s runs forward
        x, xp = yv
        return [-xp, -(xp + A * max(x, 0.0) ** q)]

    def leaves_strip(sig, yv):
        return min(yv[0], cap - yv[0])

    leaves_strip.terminal = True
    leaves_strip.direction = -1

    sol = solve_ivp(sys, (-s_start, -s_end), [x0, dx0], method="LSODA",
                    rtol=1e-10, atol=1e-14, dense_output=True,
                    events=leaves_strip)
    if sol.t_events[0].size:
        raise BlowUpBackward(
            f"x left [0, {cap:g}] at s = {-sol.t_events[0][0]:.6g}")
    if sol.status != 0:
        raise StepUnderflow(sol.message)
    sig = np.linspace(-s_start, -s_end, n_out)
    vals = sol.sol(sig)
    s = -sig[::-1]
    x = vals[0][::-1]
    dx = vals[1][::-1]  # the state carries xp = dx/ds directly
    grid = _shifted_grid(s) if s[0] <= 0 else RadialGrid(s, "uniform")
    return RadialProfile(grid, x, derivs=dx, meaning="x")


# ---------------------------------------------------------------------------
# residual evaluation and the annulus barrier


def radial_residual(params: ProblemParams, profile: RadialProfile,
                    rhs_kind: str, A: float = 1.0,
                    d2v: Optional[np.ndarray] = None) -> np.ndarray:
    """Pointwise relative residual |L v - f(r, v)| / scale on interior nodes.

    Second derivatives come from ``d2v`` when supplied (closed-form
    profiles), else from a spline of ``derivs`` when present, else from the
    value spline.  Accuracy is therefore capped by the differentiation
    route; pass analytic arrays for certification-grade checks.
    """
    f = _rhs_factory(params, rhs_kind, A)
    r = profile.r
    v = profile.values
    if d2v is None:
        if profile.derivs is not None:
            d1 = profile.derivs
            d2v = CubicSpline(r, d1)(r, 1)
        else:
            sp = profile.spline()
            d1 = sp(r, 1)
            d2v = sp(r, 2)
    else:
        d1 = profile.derivs if profile.derivs is not None else profile.spline()(r, 1)
    drift = (params.N - 1.0 - 2.0 * params.nu) / r
    lhs = d2v + drift * d1
    rhs = f(r, v)
    scale = np.abs(d2v) + np.abs(drift * d1) + np.abs(rhs) + 1e-300
    return np.abs(lhs - rhs) / scale


def annulus_barrier(params: ProblemParams, A: float = 1.0,
                    beta: Optional[float] = None, n: int = 200):
    """Comparison barrier W = c [(9/16 - r^2)(r^2 - 1/16)]^{-beta} on (1/4, 3/4).

    Returns (c, margin, r_samples, W_samples) with c chosen by bisection so

        L W <= A r^{-(q-1) nu} W^q     at every sample,

    i.e. margin = max(L W - rhs) <= 0.  Requires beta > 2/(q-1) so the
    absorption side wins near both edges of the annulus.
    """
    q, nu = params.q, params.nu
    if beta is None:
        beta = 2.0 / (q - 1.0) + 0.5
    if beta <= 2.0 / (q - 1.0):
        raise DomainError(f"need beta > 2/(q-1) = {2.0 / (q - 1.0)}")
    r = np.linspace(0.25 + 1e-3, 0.75 - 1e-3, n)
    phi = (9.0 / 16.0 - r ** 2) * (r ** 2 - 1.0 / 16.0)
    dphi = 2.0 * r * (5.0 / 8.0 - 2.0 * r ** 2)
    d2phi = 5.0 / 4.0 - 12.0 * r ** 2
    drift = (params.N - 1.0 - 2.0 * params.nu) / r
    # L W = c * G(r) with W = c phi^{-beta}
    G = beta * ((beta + 1.0) * phi ** (-beta - 2.0) * dphi ** 2
                - phi ** (-beta - 1.0) * d2phi) \
        + drift * (-beta * phi ** (-beta - 1.0) * dphi)
    w_pow = A * r ** (-(q - 1.0) * nu) * phi ** (-beta * q)

    def margin(c):
        return float(np.max(c * G - c ** q * w_pow))

    lo, hi = 1e-8, 1e-8
    while margin(hi) > 0.0 and hi < 1e12:
        hi *= 4.0
    if margin(hi) > 0.0:
        raise DomainError("no barrier constant found; exponents out of range")
    for _ in range(80):  # bisect to the smallest workable c
        mid = math.sqrt(lo * hi)
        if margin(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    c = hi
    return c, margin(c), r, c * phi ** (-beta)
