"""Banach fixed-point solver for the singular Cauchy problem at the origin.

The absorption problem linearized at the origin admits, for q below the
borderline exponent (2+nu)/nu, a one-parameter family of solutions with
w(0) = delta produced by iterating the integral map

    T[w](r) = delta + int_0^r s^{2 nu + 1 - N} int_0^s t^{N-1-(q+1) nu}
              A w(t)^q dt ds.

T is order-preserving and, on a small enough window, a contraction; the
fixed point is the profile behind the lower barrier u >= C |x|^{-nu}.  The
nested quadrature integrates the power-law heads in closed form on the
innermost cell and corrects interior cells with the exact derivative
relations I'(s) = s^{N-1-(q+1)nu} A w^q and w'(r) = r^{2 nu + 1 - N} I(r),
pushing the composite rule to fourth order despite the degenerate weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .constants import ProblemParams, derive
from .errors import DivergentEnergy, DomainError, NoContraction
from .quadrature import weighted_ball_integral
from .radial_ode import RadialGrid, RadialProfile, integrate_radial

__all__ = [
    "PicardConfig",
    "PicardResult",
    "picard_map",
    "solve_picard",
    "solve_with_window_search",
    "energy_check",
    "cross_validate_ode",
]

_POLISH_ROUNDS = 6


@dataclass(frozen=True)
class PicardConfig:
    delta: float
    r_max: float = 1.0
    grid_points: int = 2000
    max_iters: int = 200
    tol: float = 1e-14
    A: float = 1.0          # absorption coefficient (0 degenerates to w == delta)

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise DomainError("delta must lie in (0, 1]")
        if self.r_max <= 0.0 or self.tol <= 0.0:
            raise DomainError("r_max and tol must be positive")
        if self.grid_points < 16 or self.max_iters < 1:
            raise DomainError("grid_points >= 16 and max_iters >= 1 required")
        if self.A < 0.0:
            raise DomainError("absorption coefficient must be nonnegative")


@dataclass
class PicardResult:
    profile: RadialProfile          # fixed point w, derivs = w'
    iterations: int
    converged: bool
    contraction_estimate: float
    config: PicardConfig


def _exponents(params: ProblemParams, q: float) -> tuple:
    nu = params.nu
    a_in = params.N - 1.0 - (q + 1.0) * nu     # inner weight power
    a_out = 2.0 * nu + 1.0 - params.N          # outer weight power
    theta = 2.0 - (q - 1.0) * nu               # leading Frobenius power
    return a_in, a_out, theta


def _inner_cum(grid, w, q, A, a_in, wp=None):
    """I(s) = int_0^s t^{a_in} A w^q dt, cumulative on the grid."""
    f = A * grid ** a_in * w ** q
    h = np.diff(grid)
    if wp is None:
        cells = h / 2.0 * (f[1:] + f[:-1])
    else:
        fp = A * (a_in * grid ** (a_in - 1.0) * w ** q
                  + q * grid ** a_in * w ** (q - 1.0) * wp)
        cells = h / 2.0 * (f[1:] + f[:-1]) + h ** 2 / 12.0 * (fp[:-1] - fp[1:])
    I = np.concatenate([[0.0], np.cumsum(cells)])
    # head: w is constant to leading order, so int_0^{r_0} is a closed form
    return I + A * w[0] ** q * grid[0] ** (a_in + 1.0) / (a_in + 1.0)


def _outer_cum(grid, I, q, A, delta, a_in, a_out, theta, Ip=None):
    """J(r) = int_0^r s^{a_out} I(s) ds with the closed-form Frobenius head."""
    f = grid ** a_out * I
    h = np.diff(grid)
    if Ip is None:
        cells = h / 2.0 * (f[1:] + f[:-1])
    else:
        fp = a_out * grid ** (a_out - 1.0) * I + grid ** a_out * Ip
        cells = h / 2.0 * (f[1:] + f[:-1]) + h ** 2 / 12.0 * (fp[:-1] - fp[1:])
    J = np.concatenate([[0.0], np.cumsum(cells)])
    return J + A * delta ** q * grid[0] ** theta / (theta * (a_in + 1.0))


def picard_map(params: ProblemParams, cfg: PicardConfig, w: np.ndarray,
               grid: Optional[np.ndarray] = None) -> np.ndarray:
    """One application of the integral map T (trapezoid-with-heads rule).

    Exposed so order preservation and iterate monotonicity can be checked
    on snapshots; :func:`solve_picard` adds the derivative-corrected cells.
    """
    q = params.q
    a_in, a_out, theta = _exponents(params, q)
    if grid is None:
        grid = np.geomspace(cfg.r_max * 1e-8, cfg.r_max, cfg.grid_points)
    I = _inner_cum(grid, w, q, cfg.A, a_in)
    return cfg.delta + _outer_cum(grid, I, q, cfg.A, cfg.delta, a_in, a_out,
                                  theta)


def solve_picard(params: ProblemParams, cfg: PicardConfig) -> PicardResult:
    """Iterate T from w == delta to its fixed point on (0, r_max].

    Requires q < (2+nu)/nu so the window exists at all.  Divergence of the
    successive-distance sequence (three consecutive increases, or no
    convergence within max_iters) raises NoContraction: the window is too
    wide and should be halved.
    """
    der = derive(params)
    q = params.q
    if not q < der.q_star:
        raise DomainError(
            f"fixed-point window needs q < (2+nu)/nu = {der.q_star}, got {q}")
    a_in, a_out, theta = _exponents(params, q)
    if a_in + 1.0 <= 0.0:
        raise DomainError("inner weight not integrable at 0")
    grid = np.geomspace(cfg.r_max * 1e-8, cfg.r_max, cfg.grid_points)
    w = np.full(cfg.grid_points, cfg.delta)
    dist_prev = math.inf
    increases = 0
    converged = False
    contraction = math.nan
    it = 0
    for it in range(1, cfg.max_iters + 1):
        w_new = picard_map(params, cfg, w, grid=grid)
        dist = float(np.max(np.abs(w_new - w)))
        w = w_new
        if dist < cfg.tol * max(1.0, cfg.delta):
            converged = True
            if math.isfinite(dist_prev) and dist_prev > 0.0:
                contraction = dist / dist_prev
            break
        if dist >= dist_prev:
            increases += 1
            if increases >= 3 or not math.isfinite(dist):
                raise NoContraction(
                    f"distances stopped contracting at iteration {it} "
                    f"(r_max = {cfg.r_max:g} too wide)")
        else:
            increases = 0
            contraction = dist / dist_prev if math.isfinite(dist_prev) else math.nan
        dist_prev = dist
    if not converged:
        raise NoContraction(
            f"no fixed point within {cfg.max_iters} iterations at "
            f"r_max = {cfg.r_max:g}")

    # polish with derivative-corrected cells; w'(r) = r^{a_out} I(r) exactly
    wp = grid ** a_out * _inner_cum(grid, w, q, cfg.A, a_in)
    for _ in range(_POLISH_ROUNDS):
        I = _inner_cum(grid, w, q, cfg.A, a_in, wp=wp)
        Ip = cfg.A * grid ** a_in * w ** q
        w = cfg.delta + _outer_cum(grid, I, q, cfg.A, cfg.delta, a_in, a_out,
                                   theta, Ip=Ip)
        wp = grid ** a_out * _inner_cum(grid, w, q, cfg.A, a_in, wp=wp)
    profile = RadialProfile(RadialGrid(grid, "log"), w, derivs=wp, meaning="w")
    return PicardResult(profile=profile, iterations=it, converged=converged,
                        contraction_estimate=float(contraction), config=cfg)


def solve_with_window_search(params: ProblemParams, cfg: PicardConfig,
                             max_halvings: int = 20) -> PicardResult:
    """Shrink r_max by halving until the fixed-point iteration contracts."""
    last: Exception = NoContraction("window search not started")
    for _ in range(max_halvings + 1):
        try:
            return solve_picard(params, cfg)
        except NoContraction as exc:
            last = exc
            cfg = replace(cfg, r_max=cfg.r_max / 2.0)
    raise NoContraction(
        f"no existence window found above r_max = {cfg.r_max:g}") from last


def energy_check(params: ProblemParams, result: PicardResult) -> tuple:
    """Weighted Dirichlet and absorption energies of the fixed point.

    Returns (integral of w'^2 r^{N-1-2nu}, integral of w^{q+1}
    r^{N-1-(q+1)nu}) over (0, r_max], the two integrals whose finiteness
    makes w an admissible comparison function.  The sub-grid head uses the
    fitted leading power (the Frobenius behavior w' ~ r^{theta-1}); a
    half-resolution re-evaluation must agree or DivergentEnergy is raised.
    """
    if not result.converged:
        raise DomainError("energy check needs a converged result")
    N, nu, q = params.N, params.nu, params.q
    grid = result.profile.r
    w = result.profile.values
    wp = result.profile.derivs

    def both(g, wv, wpv):
        dir_ = weighted_ball_integral(g, wpv ** 2, N - 1.0 - 2.0 * nu)
        absn = weighted_ball_integral(g, wv ** (q + 1.0),
                                      N - 1.0 - (q + 1.0) * nu)
        return dir_, absn

    d_full, a_full = both(grid, w, wp)
    d_half, a_half = both(grid[::2], w[::2], wp[::2])
    for fine, coarse, name in ((d_full, d_half, "dirichlet"),
                               (a_full, a_half, "absorption")):
        if not (math.isfinite(fine) and math.isfinite(coarse)):
            raise DivergentEnergy(f"{name} integral is not finite")
        if abs(fine - coarse) > 0.05 * max(abs(fine), 1e-300):
            raise DivergentEnergy(
                f"{name} integral not Cauchy under refinement: "
                f"{coarse:g} vs {fine:g}")
    return d_full, a_full


def cross_validate_ode(params: ProblemParams, result: PicardResult,
                       tol: float = 1e-10) -> float:
    """Re-integrate the differential form from a quarter-way node.

    Starts the adaptive integrator at (r0, w(r0), w'(r0)) with r0 the
    grid's quarter point and reports the maximum relative deviation from
    the fixed point on the shared nodes — an independent check that the
    integral-equation solution solves w'' + ((N-1-2nu)/r) w' =
    A r^{-(q-1)nu} w^q.
    """
    if not result.converged:
        raise DomainError("cross-validation needs a converged result")
    grid = result.profile.r
    w = result.profile.values
    wp = result.profile.derivs
    i0 = len(grid) // 4
    report = integrate_radial(params, "absorption_only", result.config.A,
                              (grid[i0], w[i0], wp[i0]), grid[-1], tol=tol,
                              sample_at=grid[i0:])
    vals = report.profile.values
    n = len(vals)
    ref = w[i0:i0 + n]
    return float(np.max(np.abs(vals - ref) / np.abs(ref)))
