"""Undirected weighted communication graphs.

Holds the adjacency, degree and Laplacian data of the agent network and
evaluates the Laplacian-weighted disagreement used as consensus error.
"""
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NegativeWeightError, NonSymmetricError, NonzeroDiagonalError

SYMMETRY_TOL = 1e-12
CONNECTIVITY_TOL = 1e-9


@dataclass(frozen=True)
class GraphTopology:
    n_agents: int
    adjacency: np.ndarray
    degrees: np.ndarray
    laplacian: np.ndarray

    def neighbors(self, i):
        return [j for j in range(self.n_agents) if self.adjacency[i, j] > 0.0]


def build_graph(adjacency):
    a = np.array(adjacency, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"adjacency must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NegativeWeightError("adjacency contains non-finite entries")
    if np.any(a < 0.0):
        raise NegativeWeightError("adjacency has negative weights")
    if np.any(np.diag(a) != 0.0):
        raise NonzeroDiagonalError("adjacency diagonal must be zero (no self-loops)")
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL:
        raise NonSymmetricError("adjacency must be symmetric (undirected graph)")
    # symmetrize exactly so the Laplacian is bit-symmetric
    a = 0.5 * (a + a.T)
    a.setflags(write=False)
    degrees = a.sum(axis=1)
    lap = np.diag(degrees) - a
    degrees.setflags(write=False)
    lap.setflags(write=False)
    return GraphTopology(n_agents=a.shape[0], adjacency=a, degrees=degrees, laplacian=lap)


def ring_adjacency(n, weight=1.0):
    a = np.zeros((n, n))
    if n == 2:
        a[0, 1] = a[1, 0] = weight
        return a
    for i in range(n):
        j = (i + 1) % n
        if i != j:
            a[i, j] = a[j, i] = weight
    return a


def jacobi_eigenvalues(m, tol=1e-14, max_sweeps=100):
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Returns them sorted ascending.
    """
    a = np.array(m, dtype=float)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0)
    scale = max(np.max(np.abs(a)), 1.0)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta   # theta^2 would overflow
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))


def laplacian_spectrum(g):
    return jacobi_eigenvalues(g.laplacian)


def is_connected_spectral(g):
    if g.n_agents == 1:
        return True
    return bool(laplacian_spectrum(g)[1] > CONNECTIVITY_TOL)


def is_connected_bfs(g):
    n = g.n_agents
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in range(n):
            if g.adjacency[i, j] > 0.0 and j not in seen:
                seen.add(j)
                queue.append(j)
    return len(seen) == n


def is_connected(g):
    return is_connected_spectral(g)


def consensus_error(g, values):
    """e_i = sum_j a_ij (values_i - values_j) for every agent."""
    v = np.asarray(values, dtype=float)
    if v.shape != (g.n_agents,):
        raise DimensionMismatchError(f"expected {g.n_agents} values, got shape {v.shape}")
    return g.degrees * v - g.adjacency @ v


def consensus_error_row(g, i, own, others):
    """Consensus error of agent ``i`` from its own value and a vector of
    (possibly differently held) values for everyone else."""
    return g.degrees[i] * own - g.adjacency[i] @ others


def neighbor_mean_matrix(g):
    """Row i averages the values of agent i's neighbors (unweighted).

    An isolated agent's row selects its own value.
    """
    n = g.n_agents
    mask = (g.adjacency > 0.0).astype(float)
    counts = mask.sum(axis=1)
    m = np.zeros((n, n))
    for i in range(n):
        if counts[i] > 0:
            m[i] = mask[i] / counts[i]
        else:
            m[i, i] = 1.0
    return m
