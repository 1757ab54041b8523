"""Power-law-weighted radial quadrature: exactness and head handling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardylab.errors import NonIntegrableTail
from hardylab.quadrature import (
    fit_power_head,
    gauss_cells,
    log_grid,
    power_cell_integral,
    weighted_ball_integral,
)


def test_power_cell_exact():
    assert power_cell_integral(1.0, 2.0, 0.0) == pytest.approx(1.0, rel=1e-15)
    assert power_cell_integral(1.0, 2.0, 1.0) == pytest.approx(1.5, rel=1e-15)
    assert power_cell_integral(1.0, np.e, -1.0) == pytest.approx(1.0, rel=1e-14)
    # vectorized form
    out = power_cell_integral(np.array([1.0, 2.0]), np.array([2.0, 3.0]), 2.0)
    assert out == pytest.approx([7 / 3, 19 / 3], rel=1e-14)


def test_power_cell_rejects_nonpositive_left_end():
    with pytest.raises(ValueError):
        power_cell_integral(0.0, 1.0, 2.0)


@given(s=st.floats(min_value=-0.99, max_value=3.0))
@settings(max_examples=40, deadline=None)
def test_power_cell_matches_numpy_quadrature(s):
    r = np.linspace(1.0, 2.0, 20001)
    expected = np.trapezoid(r**s, r)
    assert power_cell_integral(1.0, 2.0, s) == pytest.approx(expected, rel=1e-7)


def test_log_grid_validation_and_shape():
    g = log_grid(1e-6, 1.0, 100)
    assert g[0] == pytest.approx(1e-6) and g[-1] == pytest.approx(1.0)
    ratios = g[1:] / g[:-1]
    assert np.ptp(ratios) < 1e-12  # geometric spacing
    with pytest.raises(ValueError):
        log_grid(1.0, 0.5, 10)
    with pytest.raises(ValueError):
        log_grid(0.0, 1.0, 10)


def test_gauss_cells_integrate_cubics_exactly():
    grid = np.geomspace(0.1, 1.0, 8)
    nodes, weights = gauss_cells(grid)
    # 4-point Gauss is exact through degree 7
    val = float(np.sum(weights * nodes**7))
    assert val == pytest.approx((1.0**8 - 0.1**8) / 8, rel=1e-14)


def test_fit_power_head_recovers_exact_power():
    grid = np.geomspace(1e-8, 1.0, 50)
    c, sigma = fit_power_head(grid, 3.0 * grid**-0.5)
    assert c == pytest.approx(3.0, rel=1e-10)
    assert sigma == pytest.approx(-0.5, abs=1e-10)


def test_fit_power_head_zero_inner_samples():
    grid = np.geomspace(1e-4, 1.0, 10)
    vals = np.zeros(10)
    assert fit_power_head(grid, vals) == (0.0, 0.0)


@given(
    sigma=st.floats(min_value=-0.8, max_value=1.5),
    s=st.floats(min_value=1.0, max_value=5.0),
)
@settings(max_examples=40, deadline=None)
def test_weighted_ball_integral_exact_on_powers(sigma, s):
    # integral_0^1 r^s * r^sigma dr = 1/(s + sigma + 1), head included
    grid = np.geomspace(1e-7, 1.0, 1200)
    val = weighted_ball_integral(grid, grid**sigma, s)
    assert val == pytest.approx(1.0 / (s + sigma + 1.0), rel=1e-7)


def test_weighted_ball_integral_smooth_integrand():
    # integral_0^1 r^2 exp(-r) dr = 2 - 5/e
    grid = np.geomspace(1e-7, 1.0, 1600)
    val = weighted_ball_integral(grid, np.exp(-grid), 2.0)
    assert val == pytest.approx(2.0 - 5.0 / np.e, rel=5e-10)


def test_weighted_ball_integral_divergent_head():
    grid = np.geomspace(1e-7, 1.0, 200)
    with pytest.raises(NonIntegrableTail):
        weighted_ball_integral(grid, grid**-2.5, 1.0)


def test_weighted_ball_integral_head_none_drops_origin_cell():
    grid = np.geomspace(1e-3, 1.0, 300)
    full = weighted_ball_integral(grid, np.ones_like(grid), 2.0, head="power")
    body = weighted_ball_integral(grid, np.ones_like(grid), 2.0, head="none")
    assert full == pytest.approx(1.0 / 3.0, rel=1e-7)
    assert full - body == pytest.approx(1e-9 / 3.0, rel=1e-3)
