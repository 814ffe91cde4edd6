import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftconsensus.diagnosis import (FdeState, activate_fies, detection_decision, fde_step, fie_step,
                                   filter_step, isolation_decision)
from ftconsensus.errors import DimensionMismatch, EmptyFaultClass
from ftconsensus.plant import FaultCandidate, FunctionSpec, ParamSet, PlantModel
from ftconsensus.sim import closed_form_threshold, simulated_threshold

PLANT = PlantModel(2, FunctionSpec("zero"), FunctionSpec("zero"), FunctionSpec("constant", {"value": 0.6}))
PROCESS = FaultCandidate("process", FunctionSpec("x2cosx"), ParamSet.sphere(0.5, 0.5))
ACTUATOR = FaultCandidate("actuator", FunctionSpec("input"), ParamSet.sphere(-0.4, 0.4))


def test_threshold_free_decay_value():
    # zero drive, h = 2, nu(0) = 1: nu(1) = e^-2
    t, nu = simulated_threshold(2.0, 0.0, 1.0, 1e-3, 1.0)
    assert t[-1] == pytest.approx(1.0)
    assert nu[-1] == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert nu[-1] == pytest.approx(0.1353, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 20), st.floats(0, 5), st.floats(0, 5), st.floats(1e-4, 1e-2))
def test_filter_matches_closed_form(h, bound, x_bar, dt):
    t, nu = simulated_threshold(h, bound, x_bar, dt, 50 * dt)
    np.testing.assert_allclose(nu, closed_form_threshold(h, bound, x_bar, t), rtol=1e-10, atol=1e-12)


def test_filter_step_steady_state():
    assert filter_step(0.3, 2.0, 0.6, 1e-3) == pytest.approx(0.3)


def test_fde_tracks_healthy_plant_exactly():
    # with zero uncertainty and matching input the residual stays at zero
    x = np.array([1.0, 2.0])
    state = FdeState.initial(x, 2.0)
    u = np.array([0.5, -0.5])
    state = fde_step(state, PLANT, x, u, 0.0, 1e-3)
    x_next = x + 1e-3 * u
    np.testing.assert_allclose(state.residual(x_next), 0.0, atol=1e-15)
    assert detection_decision(state, x_next, 1e-3) is None


def test_detection_is_strict_and_reports_component():
    state = FdeState(np.zeros(2), 2.0, np.array([0.1, 0.1]), np.zeros(2))
    assert detection_decision(state, np.array([0.1, -0.1]), 1.0) is None
    ev = detection_decision(state, np.array([0.0, -0.2]), 1.0)
    assert ev.component == 1 and ev.t == 1.0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        fde_step(FdeState.initial(np.zeros(2), 2.0), PLANT, np.zeros(3), np.zeros(3), 0.0, 1e-3)


def test_activation():
    bank = activate_fies([PROCESS, ACTUATOR], np.array([1.0, 2.0]), 5.0, 10.0, 1.0)
    assert [f.index for f in bank] == [1, 2]
    np.testing.assert_array_equal(bank[0].theta_hat, [[0.5], [0.5]])
    np.testing.assert_array_equal(bank[1].theta_hat, [[-0.4], [-0.4]])
    np.testing.assert_array_equal(bank[0].x_hat, [1.0, 2.0])
    assert all(f.activation_time == 5.0 and not f.excluded for f in bank)
    with pytest.raises(EmptyFaultClass):
        activate_fies([], np.zeros(2), 0.0, 10.0, 1.0)


def test_fie_parameter_stays_in_set():
    fie = activate_fies([PROCESS], np.array([2.0, 3.0]), 0.0, 10.0, 50.0)[0]
    x = np.array([2.0, 3.0])
    for _ in range(200):
        # forcing a large residual drives the estimate towards the boundary
        fie = fie_step(fie, PLANT, x + 1.0, np.zeros(2), 0.0, 1e-2)
        assert PROCESS.param_set.contains(fie.theta_hat, tol=1e-12)


def test_fie_threshold_drive_uses_xi():
    fie = activate_fies([PROCESS], np.array([2.0, 0.0]), 0.0, 10.0, 1.0)[0]
    out = fie_step(fie, PLANT, np.array([2.0, 0.0]), np.zeros(2), 0.0, 1e-3)
    drive = 0.6 + 0.5 * abs(4.0 * math.cos(2.0))  # xi = R + |theta_hat - O| = 0.5 at the center
    assert out.mu[0] == pytest.approx(filter_step(0.0, 10.0, drive, 1e-3))
    assert out.mu[1] == pytest.approx(filter_step(0.0, 10.0, 0.6, 1e-3))


def _with(fie, x_hat, mu):
    from dataclasses import replace
    return replace(fie, x_hat=np.asarray(x_hat, float), mu=np.asarray(mu, float))


def test_isolation_by_exclusion():
    bank = activate_fies([PROCESS, ACTUATOR], np.zeros(2), 0.0, 10.0, 1.0)
    bank = [_with(bank[0], [0.0, 0.0], [0.1, 0.1]), _with(bank[1], [0.0, 0.5], [0.1, 0.1])]
    out = isolation_decision(bank, np.zeros(2), 1.0)
    assert out.exclusions == [(2, 1)]
    assert out.isolated == 1 and not out.unresolved
    assert out.bank[1].excluded_at == 1.0


def test_all_excluded_is_unresolved():
    bank = activate_fies([PROCESS, ACTUATOR], np.zeros(2), 0.0, 10.0, 1.0)
    bank = [_with(f, [1.0, 0.0], [0.1, 0.1]) for f in bank]
    out = isolation_decision(bank, np.zeros(2), 1.0)
    assert out.unresolved and out.isolated is None
    assert [s for s, _ in out.exclusions] == [1, 2]


def test_exclusion_is_permanent():
    bank = activate_fies([PROCESS, ACTUATOR], np.zeros(2), 0.0, 10.0, 1.0)
    bank = [_with(bank[0], [0.0, 0.0], [1.0, 1.0]), _with(bank[1], [0.0, 5.0], [1.0, 1.0])]
    first = isolation_decision(bank, np.zeros(2), 1.0)
    healed = [first.bank[0], _with(first.bank[1], [0.0, 0.0], [1.0, 1.0])]
    second = isolation_decision(healed, np.zeros(2), 2.0)
    assert second.bank[1].excluded and second.bank[1].excluded_at == 1.0
    assert second.exclusions == []
