"""Graph topologies, consensus weight matrices and the averaging-consensus iteration.

Node indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Topology:
    """Undirected graph given by its neighbor sets.

    Construction checks symmetry and the absence of self loops. Connectivity
    is computed and exposed as ``is_connected`` but not enforced, so that
    disconnected graphs can still be fed to :func:`check_convergence`.
    """

    neighbors: tuple[frozenset[int], ...]

    def __post_init__(self):
        nb = tuple(frozenset(int(j) for j in s) for s in self.neighbors)
        object.__setattr__(self, "neighbors", nb)
        K = len(nb)
        if K < 1:
            raise ValueError("topology needs at least one node")
        for i, s in enumerate(nb):
            for j in s:
                if not 0 <= j < K:
                    raise ValueError(f"node {i} lists neighbor {j} outside 0..{K - 1}")
                if j == i:
                    raise ValueError(f"node {i} lists itself as a neighbor")
                if i not in nb[j]:
                    raise ValueError(f"asymmetric adjacency: {j} in N_{i} but {i} not in N_{j}")

    @classmethod
    def from_lists(cls, lists, index_base: int = 0) -> "Topology":
        """Build from a list of neighbor lists, optionally 1-based."""
        if index_base not in (0, 1):
            raise ValueError("index_base must be 0 or 1")
        return cls(tuple(frozenset(int(j) - index_base for j in s) for s in lists))

    @classmethod
    def from_edges(cls, node_count: int, edges) -> "Topology":
        nb = [set() for _ in range(node_count)]
        for i, j in edges:
            nb[i].add(j)
            nb[j].add(i)
        return cls(tuple(frozenset(s) for s in nb))

    @property
    def node_count(self) -> int:
        return len(self.neighbors)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(s) for s in self.neighbors])

    @property
    def edge_count(self) -> int:
        return int(self.degrees.sum()) // 2

    def adjacency(self) -> np.ndarray:
        K = self.node_count
        A = np.zeros((K, K))
        for i, s in enumerate(self.neighbors):
            A[i, list(s)] = 1.0
        return A

    @cached_property
    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in self.neighbors[i]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.node_count


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors as columns."""

    alphas: np.ndarray
    betas: np.ndarray


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Symmetric row-stochastic consensus weights, optionally tied to a topology."""

    entries: np.ndarray
    topology: Topology | None = None
    atol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        W = np.array(self.entries, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {W.shape}")
        if not np.all(np.isfinite(W)):
            raise ValueError("weight matrix has non-finite entries")
        if not np.allclose(W, W.T, rtol=0.0, atol=self.atol):
            raise ValueError("weight matrix is not symmetric")
        if not np.allclose(W.sum(axis=1), 1.0, rtol=0.0, atol=1e3 * self.atol):
            raise ValueError("weight matrix rows do not sum to 1")
        if self.topology is not None:
            K = self.topology.node_count
            if W.shape[0] != K:
                raise ValueError(f"weight matrix is {W.shape[0]}x{W.shape[0]} but topology has {K} nodes")
            allowed = self.topology.adjacency() + np.eye(K)
            bad = np.argwhere((allowed == 0) & (W != 0))
            if bad.size:
                i, j = bad[0]
                raise ValueError(f"nonzero weight between non-neighbors {i} and {j}")
        W.setflags(write=False)
        object.__setattr__(self, "entries", W)

    @property
    def node_count(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def spectrum(self) -> Spectrum:
        return spectral_decomposition(self)


@dataclass(frozen=True)
class ConvergenceReport:
    converges: bool
    spectral_gap: float
    failure_mode: str | None = None
    alphas: np.ndarray | None = field(default=None, repr=False)


@dataclass
class MessageCounter:
    """Running totals of consensus work.

    ``ac_instances`` counts scalar consensus problems, ``ac_iterations_total``
    sums their depths, and ``messages`` counts scalars sent over links.
    """

    ac_instances: int = 0
    ac_iterations_total: int = 0
    messages: int = 0

    def record(self, instances: int, depth: int, edge_count: int = 0):
        self.ac_instances += instances
        self.ac_iterations_total += instances * depth
        self.messages += 2 * edge_count * instances * depth

    def as_dict(self) -> dict:
        return {
            "ac_instances": self.ac_instances,
            "ac_iterations_total": self.ac_iterations_total,
            "messages": self.messages,
        }


def _entries(W) -> np.ndarray:
    return W.entries if isinstance(W, WeightMatrix) else np.asarray(W, dtype=float)


def build_metropolis_weights(topology: Topology) -> WeightMatrix:
    """Metropolis weights: 1/max(|N_i|, |N_j|) on each link, remainder on the diagonal."""
    K = topology.node_count
    deg = topology.degrees
    W = np.zeros((K, K))
    for i, s in enumerate(topology.neighbors):
        for j in s:
            W[i, j] = 1.0 / max(deg[i], deg[j])
        W[i, i] = 1.0 - W[i].sum()
    return WeightMatrix(W, topology)


def spectral_decomposition(W) -> Spectrum:
    """Eigen-decompose a symmetric weight matrix, eigenvalues descending.

    The first eigenvector is sign-fixed so that its first entry is positive.
    """
    A = _entries(W)
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12):
        raise ValueError("spectral decomposition needs a symmetric matrix")
    alphas, betas = np.linalg.eigh(A)
    order = np.argsort(alphas, kind="stable")[::-1]
    alphas = alphas[order]
    betas = betas[:, order]
    if betas[0, 0] < 0:
        betas[:, 0] = -betas[:, 0]
    K = A.shape[0]
    resid = np.abs(A @ betas - betas * alphas).max()
    if resid > 1e-10 * K:
        raise ArithmeticError(f"eigen residual {resid:.3e} exceeds {1e-10 * K:.1e}")
    return Spectrum(alphas, betas)


def check_convergence(W, tol: float = 1e-9) -> ConvergenceReport:
    """Check whether repeated application of W converges to the network average."""
    alphas = W.spectrum.alphas if isinstance(W, WeightMatrix) else spectral_decomposition(W).alphas
    K = alphas.size
    if K == 1:
        ok = abs(alphas[0] - 1.0) <= tol
        return ConvergenceReport(ok, 1.0, None if ok else "principal_eigenvalue", alphas)
    rest = np.abs(alphas[1:])
    gap = float(1.0 - rest.max())
    mode = None
    if abs(alphas[0] - 1.0) > tol:
        mode = "principal_eigenvalue"
    elif alphas[1] >= 1.0 - tol:
        mode = "disconnected"
    elif alphas[-1] <= -1.0 + tol:
        mode = "bipartite"
    elif rest.max() >= 1.0 - tol:
        mode = "not_contractive"
    return ConvergenceReport(mode is None, gap, mode, alphas)


def ac_iterate(W, x0, p: int, counter: MessageCounter | None = None) -> np.ndarray:
    """Run p rounds of averaging consensus x <- W x.

    ``x0`` may be a K-vector or a K x n array holding n independent
    consensus instances in its columns.
    """
    A = _entries(W)
    x = np.asarray(x0)
    if x.shape[0] != A.shape[0]:
        raise ValueError(f"x0 has leading dimension {x.shape[0]}, expected {A.shape[0]}")
    if p < 0:
        raise ValueError("p must be non-negative")
    for _ in range(int(p)):
        x = A @ x
    if counter is not None:
        n = 1 if x.ndim == 1 else int(np.prod(x.shape[1:]))
        edges = int(np.count_nonzero(np.triu(A, 1)))
        counter.record(n, int(p), edges)
    return x if int(p) > 0 else x.copy()
