import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrrte.spectral import (FrequencyGrid, invert_planck_mean, planck,
                            planck_dT, planck_mean)

# independent high-precision evaluation of nu^3/(exp(nu/T)-1) at nu=1, T=300/4798
PLANCK_1_300K = 1.1328792839976830e-07


def test_planck_vanishes_at_zero_temperature():
    assert planck(1.0, 0.0) == 0.0
    assert planck(1.0, 1e-12) == 0.0  # nu/T far beyond the underflow cutoff


@pytest.mark.parametrize("temp", [0.05, 0.3, 1.0])
def test_planck_at_nu_equal_temp(temp):
    # exponent is exactly one there
    assert planck(temp, temp) == pytest.approx(temp**3 / (math.e - 1.0), rel=1e-14)


def test_planck_frozen_value():
    assert planck(1.0, 300.0 / 4798.0) == pytest.approx(PLANCK_1_300K, rel=1e-13)


def test_planck_rejects_nonpositive_frequency():
    with pytest.raises(ValueError):
        planck(0.0, 0.1)
    with pytest.raises(ValueError):
        planck(np.array([1.0, -2.0]), 0.1)


def test_planck_no_overflow_and_hard_underflow():
    with np.errstate(over="raise"):
        assert planck(20.0, 20.0 / 699.0) > 0.0
        assert planck(20.0, 20.0 / 701.0) == 0.0


@settings(max_examples=60, deadline=None)
@given(nu=st.floats(0.011, 19.9), t1=st.floats(0.03, 1.9), dt=st.floats(1e-4, 0.5))
def test_planck_monotone_in_temperature(nu, t1, dt):
    # below the underflow cutoff both sides are exactly zero, so stay above it
    if nu / t1 > 690.0:
        t1 = nu / 690.0
    assert planck(nu, t1) < planck(nu, t1 + dt)


def test_grid_nodes_increasing_and_weights_positive():
    grid = FrequencyGrid.build()
    assert np.all(np.diff(grid.nodes) > 0.0)
    assert np.all(grid.nodes > 0.0)
    assert np.all(grid.weights > 0.0)


def test_grid_integrates_constant_to_range_length():
    grid = FrequencyGrid.build(0.01, 20.0)
    assert grid.integrate(np.ones(grid.size)) == pytest.approx(19.99, rel=1e-12)


def _richardson_blackbody(temp: float, nu_min=0.01, nu_max=20.0) -> float:
    # independent oracle: refined composite trapezoid + one Richardson step
    def trapz(n):
        nu = np.geomspace(nu_min, nu_max, n)
        return np.trapezoid(planck(nu, temp), nu)

    coarse, fine = trapz(20000), trapz(40000)
    return fine + (fine - coarse) / 3.0


def test_blackbody_integral_against_refined_quadrature():
    grid = FrequencyGrid.build()
    temp = 5700.0 / 4798.0
    got = grid.integrate(planck(grid.nodes, temp))
    assert got == pytest.approx(_richardson_blackbody(temp), rel=1e-6)


def test_blackbody_integral_stable_under_panel_doubling():
    temp = 5700.0 / 4798.0
    base = FrequencyGrid.build(panels=24)
    fine = FrequencyGrid.build(panels=48)
    a = base.integrate(planck(base.nodes, temp))
    b = fine.integrate(planck(fine.nodes, temp))
    assert abs(a - b) <= 1e-6 * abs(b)


def test_invert_zero_target_gives_zero():
    grid = FrequencyGrid.build(panels=6, order=4)
    assert invert_planck_mean(0.0, np.ones(grid.size), grid) == 0.0


def test_invert_rejects_bad_inputs():
    grid = FrequencyGrid.build(panels=6, order=4)
    with pytest.raises(ValueError):
        invert_planck_mean(-1.0, np.ones(grid.size), grid)
    with pytest.raises(ValueError):
        invert_planck_mean(1.0, np.zeros(grid.size), grid)


def test_invert_recovers_frozen_case():
    # kappa_a = 1, T0 = 0.0625: forward evaluation, then an independent
    # bisection oracle on a dense trapezoid integrand
    grid = FrequencyGrid.build()
    kappa = np.ones(grid.size)
    target = planck_mean(kappa, 0.0625, grid)
    assert target == pytest.approx(9.9070041531970014e-05, rel=1e-6)

    from scipy.optimize import bisect

    nu_dense = np.geomspace(0.01, 20.0, 20000)

    def residual(temp):
        return np.trapezoid(planck(nu_dense, temp), nu_dense) - target

    oracle = bisect(residual, 1e-4, 1.0, xtol=1e-12)
    assert oracle == pytest.approx(0.0625, rel=1e-6)
    assert invert_planck_mean(target, kappa, grid) == pytest.approx(0.0625, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(t0=st.floats(0.005, 2.0))
def test_invert_round_trip(t0):
    grid = FrequencyGrid.build(panels=12, order=5)
    kappa = 0.2 + np.sin(grid.nodes) ** 2
    target = planck_mean(kappa, t0, grid)
    got = invert_planck_mean(target, kappa, grid, rtol=1e-12)
    assert got == pytest.approx(t0, rel=1e-9)
    assert got >= 0.0


def test_planck_mean_derivative_consistency():
    grid = FrequencyGrid.build(panels=10, order=4)
    kappa = np.ones(grid.size)
    t0, h = 0.08, 1e-6
    fd = (planck_mean(kappa, t0 + h, grid) - planck_mean(kappa, t0 - h, grid)) / (2 * h)
    an = grid.integrate(kappa * planck_dT(grid.nodes, t0))
    assert an == pytest.approx(fd, rel=1e-6)
