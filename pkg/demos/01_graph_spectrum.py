"""Communication graph and the spectrum of the combined Laplacian.

Run with ``python3 demos/01_graph_spectrum.py``.
"""

# %% Build the five-follower topology used by the bundled scenarios.
import numpy as np

from ftconsensus.graph import augmented_laplacians, build_topology, jacobi_eigenvalues, laplacian_check

edges = [(1, 2, 1.0), (1, 5, 1.0), (2, 5, 1.0), (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0)]
topo = build_topology(5, edges, leader_links=[(2, 1.0)])
lap = augmented_laplacians(topo)

# L treats the leader as a source (its row is zero); Psi treats the same
# link as undirected. The product form Psi L + L^T Psi mixes the two.
np.set_printoptions(precision=3, suppress=True)
print("L =\n", lap.L)
print("Psi =\n", lap.Psi)
print("Lbar =\n", lap.Lbar)

# %% Eigenvalues from the built-in Jacobi solver, cross-checked with LAPACK.
eig = jacobi_eigenvalues(lap.Lbar)
print("Jacobi :", eig)
print("LAPACK :", np.linalg.eigvalsh(lap.Lbar))
print("check  :", {k: v for k, v in laplacian_check(topo).items() if k != "eigenvalues"})

# %% The property is structural, so random connected graphs share it.
rng = np.random.default_rng(0)
worst = np.inf
for _ in range(200):
    M = int(rng.integers(2, 9))
    # a path through all followers guarantees connectivity; add random chords
    chain = [(k, k + 1, float(rng.uniform(0.1, 3))) for k in range(1, M)]
    chords = [(int(i), int(j), 1.0) for i, j in rng.integers(1, M + 1, size=(M, 2)) if i != j]
    t = build_topology(M, chain + chords, [(int(rng.integers(1, M + 1)), 1.0)])
    c = laplacian_check(t)
    assert c["holds"], c
    worst = min(worst, c["min_eigenvalue"])
print(f"200 random graphs: smallest eigenvalue seen {worst:.2e}, always one zero eigenvalue")
