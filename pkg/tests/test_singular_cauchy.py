"""Fixed-point construction of origin-bounded profiles and its safeguards."""

import numpy as np
import pytest

from hardylab.constants import ProblemParams
from hardylab.errors import DivergentEnergy, NoContraction
from hardylab.singular_cauchy import (
    PicardConfig,
    cross_validate_ode,
    energy_check,
    picard_map,
    solve_picard,
    solve_with_window_search,
)


def _params():
    return ProblemParams(N=4, mu=0.75, p=3.0, q=4.0)


def _solve(delta, r_max=0.05, n=2000, A=1.0):
    return solve_picard(_params(), PicardConfig(delta=delta, r_max=r_max,
                                                grid_points=n, A=A))


def test_fixed_point_frozen_values():
    res = _solve(1.0)
    assert res.converged
    assert res.profile.values[-1] == pytest.approx(1.557901860541852, rel=1e-9)
    # iterates increase from the constant seed, so the sup sits at r_max
    assert res.profile.values[-1] == np.max(res.profile.values)


def test_monotone_in_delta_pointwise():
    res_small = _solve(0.5)
    res_large = _solve(1.0)
    assert np.all(res_large.profile.values >= res_small.profile.values)
    assert np.all(res_small.profile.values >= 0.5)


def test_deviation_shrinks_superlinearly_in_delta():
    # sup(w_delta - delta) ~ delta^q: dropping delta 10x shrinks it >> 10x
    sups = {}
    for delta in (0.1, 0.5, 1.0):
        res = _solve(delta)
        sups[delta] = float(np.max(res.profile.values - delta))
    assert sups[1.0] == pytest.approx(0.557901860541852, rel=1e-9)
    assert sups[0.5] == pytest.approx(0.019741742802812157, rel=1e-8)
    assert sups[0.1] == pytest.approx(2.982757939505587e-05, rel=1e-7)
    assert sups[0.1] < sups[1.0] / 10.0
    assert sups[0.5] < sups[1.0] / 10.0  # even a 2x delta drop beats 10x here


def test_zero_absorption_degenerates_to_constant():
    res = _solve(1.0, n=500, A=0.0)
    assert np.max(np.abs(res.profile.values - 1.0)) == 0.0
    assert cross_validate_ode(_params(), res) < 1e-12


def test_picard_iterates_are_ordered():
    p = _params()
    cfg = PicardConfig(delta=1.0, r_max=0.05, grid_points=500)
    grid = np.geomspace(0.05e-6, 0.05, 500)
    w0 = np.ones(500)
    w1 = picard_map(p, cfg, w0, grid)
    w2 = picard_map(p, cfg, w1, grid)
    assert np.all(w1 >= w0 - 1e-15)
    assert np.all(w2 >= w1 - 1e-15)


def test_cross_validation_against_integrator():
    res = _solve(1.0)
    dev = cross_validate_ode(_params(), res)
    assert dev < 1e-6
    assert dev == pytest.approx(6.656270449089544e-11, rel=1e-2)


def test_energy_check_frozen_values():
    dirichlet, potential = energy_check(_params(), _solve(1.0))
    assert dirichlet == pytest.approx(0.00412971755229946, rel=1e-9)
    assert potential == pytest.approx(0.03760110312197177, rel=1e-9)


def test_wide_window_is_rejected():
    with pytest.raises(NoContraction):
        solve_picard(_params(), PicardConfig(delta=1.0, r_max=1.0, grid_points=800))


def test_window_search_halves_until_contraction():
    res = solve_with_window_search(
        _params(), PicardConfig(delta=1.0, r_max=1.0, grid_points=2000)
    )
    assert res.converged
    assert res.config.r_max == pytest.approx(0.125, rel=1e-15)
    assert res.profile.values[-1] == pytest.approx(3.0686693845134485, rel=1e-8)


def test_energy_guard_near_existence_boundary():
    # the window the search lands on admits a fixed point whose dirichlet
    # integral is not yet Cauchy under refinement; the guard must fire
    res = solve_with_window_search(
        _params(), PicardConfig(delta=1.0, r_max=1.0, grid_points=2000)
    )
    with pytest.raises(DivergentEnergy):
        energy_check(_params(), res)
    # one more halving restores an admissible energy
    res2 = solve_picard(
        _params(), PicardConfig(delta=1.0, r_max=0.0625, grid_points=2000)
    )
    dirichlet, potential = energy_check(_params(), res2)
    assert dirichlet == pytest.approx(0.009366489614232129, rel=1e-8)
    assert potential == pytest.approx(0.07181162880504173, rel=1e-8)
