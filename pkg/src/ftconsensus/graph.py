"""Communication topology and the Laplacian matrices used by the controllers.

Followers are indexed ``1..M`` in the public API (matching scenario files)
and ``0..M-1`` internally. The leader is node ``M`` internally, i.e. the
last row/column of every augmented matrix.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedGraph, InvalidEdge, NotSymmetric


@dataclass(frozen=True)
class GraphTopology:
    """Undirected follower graph plus directed leader links.

    Attributes:
        M: number of followers.
        weights: (M, M) symmetric adjacency ``a_ij`` with zero diagonal.
            The same numbers are used as controller gains ``k_ij``.
        leader_weights: (M,) gains ``k_i(M+1)``; zero where agent ``i``
            does not hear the leader.
    """

    M: int
    weights: np.ndarray
    leader_weights: np.ndarray

    def neighbors(self, i: int) -> list[int]:
        """Zero-based follower neighbors of zero-based agent ``i``."""
        return [int(j) for j in np.flatnonzero(self.weights[i])]

    def hears_leader(self, i: int) -> bool:
        return bool(self.leader_weights[i] > 0.0)


@dataclass(frozen=True)
class AugmentedLaplacians:
    L: np.ndarray
    Psi: np.ndarray
    Lbar: np.ndarray


def build_topology(M, edges=(), leader_links=()) -> GraphTopology:
    """Build and validate a topology from one-based edge lists.

    Args:
        M: follower count.
        edges: iterable of ``(i, j, weight)`` undirected follower edges.
        leader_links: iterable of ``(i, weight)``; follower ``i`` receives
            the leader state with gain ``weight``.

    Raises:
        InvalidEdge: self-loop, nonpositive weight, or index out of range.
        DisconnectedGraph: the (M+1)-node graph is not connected.
    """
    M = int(M)
    if M < 1:
        raise InvalidEdge(f"follower count must be positive, got {M}")
    weights = np.zeros((M, M))
    for edge in edges:
        i, j, w = edge
        i, j, w = int(i), int(j), float(w)
        if not (1 <= i <= M and 1 <= j <= M):
            raise InvalidEdge(f"edge ({i}, {j}) out of range 1..{M}")
        if i == j:
            raise InvalidEdge(f"self-loop on agent {i}")
        if not w > 0.0:
            raise InvalidEdge(f"edge ({i}, {j}) has nonpositive weight {w}")
        weights[i - 1, j - 1] = w
        weights[j - 1, i - 1] = w
    leader = np.zeros(M)
    for link in leader_links:
        i, w = link
        i, w = int(i), float(w)
        if not 1 <= i <= M:
            raise InvalidEdge(f"leader link to agent {i} out of range 1..{M}")
        if not w > 0.0:
            raise InvalidEdge(f"leader link to agent {i} has nonpositive weight {w}")
        leader[i - 1] = w
    weights.setflags(write=False)
    leader.setflags(write=False)
    topo = GraphTopology(M, weights, leader)
    _check_connected(topo)
    return topo


def _check_connected(topo: GraphTopology) -> None:
    # leader links count as undirected for reachability
    M = topo.M
    adj = np.zeros((M + 1, M + 1), dtype=bool)
    adj[:M, :M] = topo.weights > 0
    adj[:M, M] = topo.leader_weights > 0
    adj[M, :M] = topo.leader_weights > 0
    if not adj[M].any():
        raise DisconnectedGraph("no follower is linked to the leader")
    seen = {M}
    queue = deque([M])
    while queue:
        k = queue.popleft()
        for j in np.flatnonzero(adj[k]):
            if j not in seen:
                seen.add(int(j))
                queue.append(int(j))
    if len(seen) != M + 1:
        missing = sorted(j + 1 for j in range(M) if j not in seen)
        raise DisconnectedGraph(f"agents {missing} cannot reach the leader")


def augmented_laplacians(topology: GraphTopology) -> AugmentedLaplacians:
    """Return ``L`` (directed leader), ``Psi`` (undirected leader) and
    ``Lbar = Psi @ L + L.T @ Psi``."""
    M = topology.M
    A = np.zeros((M + 1, M + 1))
    A[:M, :M] = topology.weights
    A[:M, M] = topology.leader_weights
    L = np.diag(A.sum(axis=1)) - A

    S = A.copy()
    S[M, :M] = topology.leader_weights
    Psi = np.diag(S.sum(axis=1)) - S

    Lbar = Psi @ L + L.T @ Psi
    # remove rounding asymmetry; the product is symmetric in exact arithmetic
    Lbar = 0.5 * (Lbar + Lbar.T)
    return AugmentedLaplacians(L=L, Psi=Psi, Lbar=Lbar)


def jacobi_eigenvalues(matrix, tol=1e-12, max_sweeps=100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the Frobenius norm of the off-diagonal part drops
    below ``tol`` times the matrix norm (or below ``tol`` for a zero
    matrix). Returned sorted ascending.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    scale = max(np.linalg.norm(a), 1.0)
    # entries this small cannot matter for the stopping test; rotating them
    # would only risk overflow in the angle computation
    negligible = 1e-3 * tol * scale / max(n, 1)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= negligible:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
    return np.sort(np.diag(a))


def spectral_check(matrix, tol=1e-9):
    """Sorted eigenvalues and the number of them with ``|lambda| <= tol``.

    Raises:
        NotSymmetric: if ``max |A - A^T|`` exceeds ``tol``.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {a.shape}")
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > tol:
        raise NotSymmetric(f"asymmetry {asym:.3e} exceeds tolerance {tol:.3e}")
    eig = jacobi_eigenvalues(0.5 * (a + a.T))
    zero_multiplicity = int(np.count_nonzero(np.abs(eig) <= tol))
    return eig, zero_multiplicity


def laplacian_check(topology: GraphTopology, tol=1e-8) -> dict:
    """Verify the structural properties of ``Lbar`` for a topology.

    ``Lbar`` must be symmetric, positive semidefinite, have exactly one
    eigenvalue within ``tol`` of zero, and map the ones vector to zero.
    """
    lap = augmented_laplacians(topology)
    eig, zeros = spectral_check(lap.Lbar, tol)
    null_residual = float(np.max(np.abs(lap.Lbar @ np.ones(topology.M + 1))))
    ok = bool(eig[0] >= -tol and zeros == 1 and null_residual <= 1e-10)
    return {
        "eigenvalues": eig,
        "zero_multiplicity": zeros,
        "min_eigenvalue": float(eig[0]),
        "null_residual": null_residual,
        "holds": ok,
    }
