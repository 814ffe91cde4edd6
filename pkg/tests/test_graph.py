import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftconsensus.errors import DisconnectedGraph, InvalidEdge, NotSymmetric
from ftconsensus.graph import (augmented_laplacians, build_topology, jacobi_eigenvalues,
                               laplacian_check, spectral_check)
from ftconsensus.io import load_scenario


def test_single_follower_hand_case():
    lap = augmented_laplacians(build_topology(1, [], [(1, 1.0)]))
    np.testing.assert_array_equal(lap.L, [[1.0, -1.0], [0.0, 0.0]])
    np.testing.assert_array_equal(lap.Psi, [[1.0, -1.0], [-1.0, 1.0]])
    # Psi L + L^T Psi worked by hand
    np.testing.assert_array_equal(lap.Lbar, [[2.0, -2.0], [-2.0, 2.0]])
    eig, zeros = spectral_check(lap.Lbar)
    np.testing.assert_allclose(eig, [0.0, 4.0], atol=1e-12)
    assert zeros == 1


def test_jacobi_hand_cases():
    np.testing.assert_allclose(jacobi_eigenvalues(np.array([[2.0, 1.0], [1.0, 2.0]])), [1.0, 3.0])
    tridiag = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]])
    r2 = np.sqrt(2.0)
    np.testing.assert_allclose(jacobi_eigenvalues(tridiag), [2 - r2, 2.0, 2 + r2], atol=1e-12)


def test_example_topology_laplacian():
    topo = load_scenario("paper_process_fault").topology()
    lap = augmented_laplacians(topo)
    expected = np.array([
        [2, -1, 0, 0, -1],
        [-1, 3, 0, 0, -1],
        [0, 0, 2, -1, -1],
        [0, 0, -1, 2, -1],
        [-1, -1, -1, -1, 4],
    ], dtype=float)
    np.testing.assert_array_equal(lap.L[:5, :5], expected)
    np.testing.assert_array_equal(lap.L[:5, 5], [0, -1, 0, 0, 0])
    np.testing.assert_array_equal(lap.L[5], np.zeros(6))
    assert topo.hears_leader(1) and not topo.hears_leader(0)
    assert topo.neighbors(4) == [0, 1, 2, 3]
    assert laplacian_check(topo)["holds"]


@pytest.mark.parametrize("edges, links", [
    ([(1, 1, 1.0)], [(1, 1.0)]),
    ([(1, 3, 1.0)], [(1, 1.0)]),
    ([(1, 2, 0.0)], [(1, 1.0)]),
    ([(1, 2, 1.0)], [(2, -1.0)]),
])
def test_invalid_edges(edges, links):
    with pytest.raises(InvalidEdge):
        build_topology(2, edges, links)


def test_disconnected():
    with pytest.raises(DisconnectedGraph):
        build_topology(3, [(1, 2, 1.0)], [(1, 1.0)])
    with pytest.raises(DisconnectedGraph):
        build_topology(2, [(1, 2, 1.0)], [])


def test_not_symmetric():
    with pytest.raises(NotSymmetric):
        spectral_check(np.array([[1.0, 2.0], [0.0, 1.0]]))


@st.composite
def connected_topologies(draw):
    """Random spanning tree on followers + leader, plus extra edges."""
    M = draw(st.integers(2, 8))
    weight = st.floats(0.1, 5.0)
    order = draw(st.permutations(list(range(M + 1))))
    edges, links = {}, {}
    for k in range(1, M + 1):
        a, b = order[k], order[draw(st.integers(0, k - 1))]
        w = draw(weight)
        if M in (a, b):
            links[(a if b == M else b) + 1] = w
        else:
            edges[tuple(sorted((a + 1, b + 1)))] = w
    for i, j in draw(st.lists(st.tuples(st.integers(1, M), st.integers(1, M)), max_size=10)):
        if i != j:
            edges[tuple(sorted((i, j)))] = draw(weight)
    return build_topology(M, [(i, j, w) for (i, j), w in edges.items()], list(links.items()))


@settings(max_examples=100, deadline=None)
@given(connected_topologies())
def test_lbar_properties_random_topologies(topo):
    lap = augmented_laplacians(topo)
    np.testing.assert_array_equal(lap.Lbar, lap.Lbar.T)
    check = laplacian_check(topo)
    assert check["min_eigenvalue"] >= -1e-8
    assert check["zero_multiplicity"] == 1
    assert check["null_residual"] <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 7).flatmap(lambda m: st.lists(st.floats(-10, 10), min_size=m * m, max_size=m * m)))
def test_jacobi_matches_numpy(values):
    m = int(round(np.sqrt(len(values))))
    a = np.array(values).reshape(m, m)
    a = a + a.T
    np.testing.assert_allclose(jacobi_eigenvalues(a), np.linalg.eigvalsh(a), atol=1e-9 * (1 + np.abs(a).max()))
