"""Quadrature helpers for power-law-weighted radial integrals.

All volume integrals in the package have the shape

    integral_0^R  r^s * g(r) dr

with s possibly non-integer (the weights r^(N-1-k*nu)) and g smooth but
sampled on a log grid whose first node sits strictly above 0.  The rules
here split such an integral into a closed-form power-law head on
(0, r_0] -- fitted from the innermost samples -- and a spline integral in
log-radius over the sampled body.  Plain trapezoids lose several orders on
these weights; the head + log-spline combination keeps the composite rule
at spline order uniformly in the singularity.
"""
from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NonIntegrableTail

__all__ = [
    "power_cell_integral",
    "log_grid",
    "fit_power_head",
    "weighted_ball_integral",
    "gauss_cells",
]

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


def power_cell_integral(a, b, s):
    """Exact integral of r^s over [a, b], elementwise; handles s = -1."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0.0):
        raise ValueError("power cells must sit strictly inside (0, inf)")
    if s == -1.0:
        out = np.log(b / a)
    else:
        out = (b ** (s + 1.0) - a ** (s + 1.0)) / (s + 1.0)
    return out if out.ndim else float(out)


def log_grid(r_min: float, r_max: float, n: int) -> np.ndarray:
    if not 0.0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    return np.geomspace(r_min, r_max, n)


def gauss_cells(grid: np.ndarray, npts: int = 4):
    """Gauss-Legendre nodes and weights on every cell of a grid.

    Returns (nodes, weights), both shaped (n_cells, npts).
    """
    if npts == 4:
        gx, gw = _GAUSS_X, _GAUSS_W
    else:
        gx, gw = np.polynomial.legendre.leggauss(npts)
    lo = grid[:-1, None]
    hi = grid[1:, None]
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gx
    weights = 0.5 * (hi - lo) * gw
    return nodes, weights


def fit_power_head(grid: np.ndarray, values: np.ndarray, n_fit: int = 2):
    """Fit c * r^sigma through the innermost positive samples.

    Used to integrate the unsampled head (0, grid[0]] in closed form.
    Returns (c, sigma); (0, 0) when the inner samples vanish.
    """
    g = np.asarray(grid[:n_fit], dtype=float)
    v = np.asarray(values[:n_fit], dtype=float)
    if np.any(v <= 0.0):
        return 0.0, 0.0
    if n_fit == 2:
        sigma = np.log(v[1] / v[0]) / np.log(g[1] / g[0])
    else:
        sigma, _ = np.polyfit(np.log(g), np.log(v), 1)
    c = v[0] / g[0] ** sigma
    return float(c), float(sigma)


def weighted_ball_integral(grid: np.ndarray, values: np.ndarray, s: float,
                           head: str = "power") -> float:
    """integral_0^grid[-1] r^s * values(r) dr for sampled values.

    Body: cubic spline of r^(s+1) * values in y = log r (the log-Jacobian
    turns the weight into a smooth factor), integrated exactly as a spline.
    Head (0, grid[0]]: closed-form power-law extension fitted from the two
    innermost samples ('power'), or dropped ('none').

    Raises NonIntegrableTail when the fitted head exponent makes the
    integral divergent at the origin.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    y = np.log(grid)
    body = float(CubicSpline(y, grid ** (s + 1.0) * values).integrate(y[0], y[-1]))
    head_val = 0.0
    if head == "power":
        c, sigma = fit_power_head(grid, np.abs(values))
        if c > 0.0:
            if s + sigma <= -1.0:
                raise NonIntegrableTail(
                    f"head behaves like r^{s + sigma:.3f}, not integrable at 0")
            sgn = np.sign(values[0])
            head_val = sgn * c * grid[0] ** (s + sigma + 1.0) / (s + sigma + 1.0)
    return body + head_val
