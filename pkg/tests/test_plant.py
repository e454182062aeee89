import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from etconsensus.errors import FaultFactorOutOfRangeError, NonFiniteDerivativeError, UnknownPlantError
from etconsensus.plant import (
    NO_FAULT,
    SECTOR_BOUNDS,
    PlantState,
    SectorBounds,
    SensorFaultModel,
    apply_sensor_fault,
    check_sector_bounds,
    fault_rate_violations,
    get_plant,
    plant_derivative,
)

PLANT = get_plant("paper_sec5")


@pytest.mark.parametrize("x, u, expected", [
    ([0.0, 0.0], 0.0, [0.0, 0.0]),
    ([0.1, 0.05], 0.0, [0.150025, 0.005]),
    ([1.0, 1.0], 1.0, [2.2, 1.0 + 1.0 + 1.0 / 7.0]),
])
def test_demo_plant_hand_values(x, u, expected):
    np.testing.assert_allclose(plant_derivative(PLANT, PlantState(np.array(x)), u), expected, rtol=1e-15, atol=0)


def test_demo_plant_matches_symbolic_oracle():
    x1, x2, u = sp.symbols("x1 x2 u")
    rhs = sp.lambdify((x1, x2, u), [x1 + x2 + x2**3 / 5, x1 * x2 + u + u**3 / sp.Integer(7)], "mpmath")
    rng = np.random.default_rng(3)
    pts = rng.uniform(-3, 3, (1000, 3))
    got = plant_derivative(PLANT, pts[:, :2], pts[:, 2])
    for p, row in zip(pts, got):
        ref = np.array([float(v) for v in rhs(*p)])
        np.testing.assert_allclose(row, ref, rtol=1e-14, atol=1e-15)


def test_nonfinite_rate_raises():
    with pytest.raises(NonFiniteDerivativeError):
        plant_derivative(PLANT, [np.inf, 0.0], 0.0)


def test_unknown_plant():
    with pytest.raises(UnknownPlantError):
        get_plant("nope")


FAULT = SensorFaultModel(eta=0.6, tau_f=1.0)


@pytest.mark.parametrize("x, t, expected", [(1.0, 0.5, 1.0), (1.0, 2.0, 0.6), (0.0, 0.5, 0.0), (0.0, 7.0, 0.0)])
def test_fault_examples(x, t, expected):
    assert apply_sensor_fault(x, t, FAULT) == pytest.approx(expected, abs=1e-15)


def test_hard_switch_and_ramp():
    hard = SensorFaultModel(eta=0.6, tau_f=1.0, ramp_width=0.0)
    assert hard.factor(1.0) == 1.0 and hard.factor(1.0 + 1e-9) == 0.6
    assert math.isinf(hard.max_rate())
    assert FAULT.factor(1.05) == pytest.approx(0.8)
    assert FAULT.max_rate() == pytest.approx(0.4 * math.pi / 0.2)
    assert FAULT.eta_dot_bound > FAULT.max_rate()


def test_fault_rate_stays_below_bound_on_grid():
    times = np.arange(0, 20001) * 1e-3
    max_rate, n_over = fault_rate_violations(FAULT, times)
    assert n_over == 0 and 0 < max_rate < FAULT.eta_dot_bound
    etas = np.array([FAULT.factor(t) for t in times])
    assert np.all((etas > FAULT.eta_lower) & (etas <= 1.0))


def test_fault_factor_range():
    with pytest.raises(FaultFactorOutOfRangeError):
        SensorFaultModel(eta=1.5, tau_f=1.0)
    with pytest.raises(FaultFactorOutOfRangeError):
        SensorFaultModel(eta=0.6, tau_f=1.0, eta_lower=0.7)


@given(st.floats(-100, 100), st.floats(0, 30), st.floats(-10, 10))
def test_fault_identity_and_homogeneity(x, t, c):
    assert apply_sensor_fault(x, t, NO_FAULT) == x
    assert apply_sensor_fault(c * x, t, FAULT) == pytest.approx(c * apply_sensor_fault(x, t, FAULT), rel=1e-12, abs=1e-300)


LEVEL1_BOX = {"state": [(-1.0, 1.0)], "next": (0.0, 2.0)}


def test_sector_lower_holds():
    rep = check_sector_bounds(PLANT, 1, SectorBounds(ell_lower=1.0, phi_k1=0.0), LEVEL1_BOX)
    assert rep.holds and rep.worst_violation <= 0.0


def test_sector_upper_unit_slope_fails_by_cubic():
    rep = check_sector_bounds(PLANT, 1, SectorBounds(ell_upper=1.0, phi_k2=0.0), LEVEL1_BOX)
    assert not rep.holds
    assert rep.worst_violation == pytest.approx(2.0**3 / 5.0, rel=1e-12)
    assert rep.worst_point[-1] == 2.0


def test_sector_upper_steep_slope_holds():
    rep = check_sector_bounds(PLANT, 1, SectorBounds(ell_upper=1.8, phi_k2=0.0), LEVEL1_BOX)
    assert rep.holds


@pytest.mark.parametrize("level", [1, 2])
def test_registered_sector_bounds_hold_on_symmetric_box(level):
    vmax = 2.0
    box = {"state": [(-2.0, 2.0)] * level, "next": (-vmax, vmax)}
    rep = check_sector_bounds(PLANT, level, SECTOR_BOUNDS["paper_sec5"][level - 1](vmax), box, samples=20_000)
    assert rep.holds, rep


def test_sector_slopes_must_be_ordered():
    with pytest.raises(ValueError):
        SectorBounds(ell_lower=2.0, ell_upper=1.0)
