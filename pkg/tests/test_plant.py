import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ftconsensus.errors import DimensionMismatch, NoBasisDeclared, UnknownFunction
from ftconsensus.plant import (BASIS_REGISTRY, FaultCandidate, FaultSpec, FunctionSpec, ParamSet,
                               PlantModel, eval_fault_basis, fault_term, plant_derivative, resolve)

PLANT = PlantModel(2, FunctionSpec("zero"), FunctionSpec("sinusoid", {"amp": 0.5, "freq": 1.0}),
                   FunctionSpec("constant", {"value": 0.6}))
PROCESS = FaultCandidate("process", FunctionSpec("x2cosx"), ParamSet.sphere(0.5, 0.5))
ACTUATOR = FaultCandidate("actuator", FunctionSpec("input"), ParamSet.sphere(-0.4, 0.4))


def test_process_basis_value():
    g = resolve(BASIS_REGISTRY, FunctionSpec("x2cosx"), 2)(np.array([2.0, 0.0]), np.zeros(2))
    assert g.shape == (2, 1)
    assert g[0, 0] == pytest.approx(-1.6646, abs=1e-4)
    assert g[1, 0] == 0.0


def test_derivative_switches_at_occurrence_time():
    fault = FaultSpec.from_candidate(PROCESS, 0.8, 5.0, 2)
    x, u = np.array([2.0, 1.0]), np.array([0.1, 0.2])
    healthy = u + 0.5 * math.sin(4.999)
    np.testing.assert_allclose(plant_derivative(PLANT, fault, x, u, 4.999), healthy)
    expected = u + 0.5 * math.sin(5.0) + 0.8 * x**2 * np.cos(x)
    np.testing.assert_allclose(plant_derivative(PLANT, fault, x, u, 5.0), expected)


def test_actuator_fault_scales_input():
    fault = FaultSpec.from_candidate(ACTUATOR, -0.8, 0.0, 2)
    u = np.array([1.0, -2.0])
    np.testing.assert_allclose(fault_term(fault, np.zeros(2), u, 2), -0.8 * u)
    dx = plant_derivative(PLANT, fault, np.zeros(2), u, 0.0)
    np.testing.assert_allclose(dx, 0.2 * u)
    assert eval_fault_basis(fault, 1, np.zeros(2), u)[0] == -2.0


def test_errors():
    with pytest.raises(UnknownFunction):
        PlantModel(2, FunctionSpec("cubic"))
    with pytest.raises(DimensionMismatch):
        plant_derivative(PLANT, FaultSpec.none(), np.zeros(3), np.zeros(2), 0.0)
    with pytest.raises(NoBasisDeclared):
        eval_fault_basis(FaultSpec.none(), 0, np.zeros(2), np.zeros(2))


def test_param_set_bounds_and_xi():
    s = ParamSet.sphere(0.5, 0.5)
    assert (s.lower, s.upper) == (0.0, 1.0)
    np.testing.assert_allclose(s.xi(np.array([[0.8], [0.5]])), [0.8, 0.5])
    iv = ParamSet.interval(-0.8, 0.0)
    assert iv.center == pytest.approx(-0.4) and iv.radius == pytest.approx(0.4)
    assert iv.to_dict() == {"shape": "interval", "lower": -0.8, "upper": 0.0}
    assert ParamSet.from_dict(s.to_dict()) == s


def test_sphere_projection_rescales_rows():
    s = ParamSet.sphere(0.0, 1.0)
    out = s.project(np.array([[3.0, 4.0], [0.3, 0.4]]))
    np.testing.assert_allclose(out, [[0.6, 0.8], [0.3, 0.4]])


theta_arrays = arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 3)),
                      elements=st.floats(-5, 5))


@settings(max_examples=200, deadline=None)
@given(theta_arrays, theta_arrays, st.floats(-1, 1), st.floats(0, 2))
def test_projection_properties(a, b, center, radius):
    s = ParamSet.sphere(center, radius)
    pa = s.project(a)
    assert s.contains(pa, tol=1e-9)
    np.testing.assert_allclose(s.project(pa), pa, atol=1e-12)
    if s.contains(a):
        np.testing.assert_array_equal(pa, a)
    if a.shape == b.shape:
        pb = s.project(b)
        # projection onto a convex set is nonexpansive, row by row
        assert np.all(np.linalg.norm(pa - pb, axis=1) <= np.linalg.norm(a - b, axis=1) + 1e-9)
