"""Decentralized power method (d-PM) over averaging consensus.

Each node k holds the rows of the snapshot matrix that belong to its own
subarray, plus its slice of every eigenvector estimate. All network-wide sums
are replaced by a finite number of consensus rounds, and each node keeps its
own copy of the resulting scalars, so different nodes see slightly different
values when the number of rounds is small.

With exact projections and normalization, the iteration is the plain power
method on ``K (T W^P T^T) * R_hat`` (elementwise product), which
:func:`equivalent_covariance` evaluates directly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .array_model import ArrayGeometry, SnapshotSet, make_rng, sample_covariance
from .exceptions import ConsensusWarning, NonConvergenceError
from .network import MessageCounter, Topology, WeightMatrix, ac_iterate, check_convergence


@dataclass(frozen=True)
class DpmConfig:
    """Consensus depths and power-iteration settings.

    ``P`` rounds for the matrix-vector products, ``P1`` for the deflation
    projections, ``P2`` for the final normalization, ``P3`` for the
    ESPRIT pair products, ``Q`` power iterations per eigenvector.
    """

    P: int = 10
    P1: int = 500
    P2: int = 500
    P3: int = 500
    Q: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("P", "P1", "P2", "P3"):
            if int(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be non-negative")
        if int(self.Q) < 1:
            raise ValueError("Q must be at least 1")


@dataclass(frozen=True, eq=False)
class DistributedEigenbasis:
    per_node: tuple[np.ndarray, ...]
    provenance: dict = field(default_factory=dict)
    accounting: dict = field(default_factory=dict)

    @property
    def assembled(self) -> np.ndarray:
        return np.vstack(self.per_node)

    @property
    def n_vectors(self) -> int:
        return self.per_node[0].shape[1]


def selection_matrix(topology: Topology | None, geom: ArrayGeometry) -> np.ndarray:
    """M x K indicator with T[i, k] = 1 when sensor i belongs to node k."""
    if topology is not None and topology.node_count != geom.node_count:
        raise ValueError(f"topology has {topology.node_count} nodes, geometry has {geom.node_count} subarrays")
    T = np.zeros((geom.sensor_total, geom.node_count))
    for k, sl in enumerate(geom.node_slices()):
        T[sl, k] = 1.0
    return T


def _w(W) -> np.ndarray:
    return W.entries if isinstance(W, WeightMatrix) else np.asarray(W, dtype=float)


def equivalent_covariance(R_hat: np.ndarray, T: np.ndarray, W, P: int) -> np.ndarray:
    """Covariance whose exact power iteration the d-PM reproduces at consensus depth P."""
    A = _w(W)
    K = A.shape[0]
    taper = K * (T @ np.linalg.matrix_power(A, int(P)) @ T.T)
    R = taper * R_hat
    return 0.5 * (R + R.conj().T)


def initial_vectors(M: int, L: int, seed) -> np.ndarray:
    """Unit-norm circular complex Gaussian starting vectors, one per column."""
    rng = make_rng(seed)
    V = (rng.standard_normal((M, L)) + 1j * rng.standard_normal((M, L))) / np.sqrt(2.0)
    return V / np.linalg.norm(V, axis=0)


def _pow2_rescale(blocks: list[np.ndarray]) -> list[np.ndarray]:
    # exact in floating point, keeps iterates away from overflow/underflow
    peak = max(np.abs(b).max() for b in blocks)
    if peak == 0 or not np.isfinite(peak):
        return blocks
    e = -int(np.frexp(peak)[1])
    return [np.ldexp(b.real, e) + 1j * np.ldexp(b.imag, e) for b in blocks]


def _check_separable(R_tilde: np.ndarray, L_vec: int):
    lam = np.linalg.eigvalsh(R_tilde)[::-1]
    thr = 1e-10 * abs(lam[0])
    for l in range(min(L_vec, lam.size - 1)):
        if lam[l] - lam[l + 1] < thr:
            raise NonConvergenceError(
                f"eigenvalues {l} and {l + 1} of the equivalent covariance coincide "
                f"({lam[l]:.6g} vs {lam[l + 1]:.6g}); power iteration cannot separate them"
            )


def dpm_ac_budget(N: int, L_vec: int, cfg: DpmConfig) -> dict:
    """Consensus instances and rounds used by :func:`dpm_eigendecomposition`."""
    inst = iters = 0
    for l in range(L_vec):
        inst += cfg.Q * (N + l) + 1
        iters += cfg.Q * (N * cfg.P + l * cfg.P1) + cfg.P2
    return {"ac_instances": inst, "ac_iterations_total": iters}


def dpm_eigendecomposition(
    snaps: SnapshotSet,
    topology: Topology,
    W: WeightMatrix,
    L_vec: int,
    cfg: DpmConfig,
    counter: MessageCounter | None = None,
    init: np.ndarray | None = None,
) -> DistributedEigenbasis:
    """Message-level simulation of the d-PM.

    Args:
        snaps: per-node snapshot blocks.
        topology: communication graph, must match the number of blocks.
        W: consensus weights on that graph.
        L_vec: number of leading eigenvectors to compute.
        cfg: consensus depths, iteration count and seed for the start vectors.
        counter: optional counter that accumulates consensus work.
        init: optional M x L_vec start vectors, overriding ``cfg.seed``.

    Returns:
        The per-node slices of the estimated eigenvectors.
    """
    blocks = snaps.per_node
    K = len(blocks)
    if topology.node_count != K or W.node_count != K:
        raise ValueError("topology, weights and snapshot blocks disagree on the node count")
    M, N = sum(b.shape[0] for b in blocks), snaps.N
    if not 1 <= L_vec <= M:
        raise ValueError(f"L_vec must be in 1..{M}, got {L_vec}")
    report = check_convergence(W)
    if not report.converges:
        warnings.warn(f"weight matrix does not converge ({report.failure_mode})", ConsensusWarning, stacklevel=2)

    T = np.zeros((M, K))
    edges = np.cumsum([0] + [b.shape[0] for b in blocks])
    for k in range(K):
        T[edges[k] : edges[k + 1], k] = 1.0
    _check_separable(equivalent_covariance(sample_covariance(snaps), T, W, cfg.P), L_vec)

    V0 = initial_vectors(M, L_vec, cfg.seed) if init is None else np.asarray(init, dtype=complex)
    own = counter if counter is not None else MessageCounter()
    start = own.as_dict()
    done: list[list[np.ndarray]] = [[] for _ in range(K)]

    for l in range(L_vec):
        v = [V0[edges[k] : edges[k + 1], l].copy() for k in range(K)]
        for _ in range(cfg.Q):
            # scalars x(t)^H v, one consensus instance per snapshot
            y = np.stack([blocks[k].conj().T @ v[k] for k in range(K)])
            phi = K * ac_iterate(W, y, cfg.P, own)
            v = [blocks[k] @ phi[k] / N for k in range(K)]
            if l:
                z = np.stack([[done[k][i].conj() @ v[k] for i in range(l)] for k in range(K)])
                u = K * ac_iterate(W, z, cfg.P1, own)
                v = [v[k] - sum(done[k][i] * u[k, i] for i in range(l)) for k in range(K)]
            v = _pow2_rescale(v)
        nrm = K * ac_iterate(W, np.array([np.vdot(v[k], v[k]).real for k in range(K)]), cfg.P2, own)
        if np.any(nrm <= 0):
            raise NonConvergenceError(f"non-positive consensus norm estimate for vector {l}")
        for k in range(K):
            done[k].append(v[k] / np.sqrt(nrm[k]))

    used = {key: own.as_dict()[key] - start[key] for key in start}
    return DistributedEigenbasis(
        tuple(np.column_stack(d) for d in done),
        provenance={"P": cfg.P, "P1": cfg.P1, "P2": cfg.P2, "Q": cfg.Q, "seed": cfg.seed, "mode": "full"},
        accounting=used,
    )


def power_method(R: np.ndarray, L_vec: int, Q: int, init: np.ndarray) -> np.ndarray:
    """Sequential power iteration with deflation against earlier vectors."""
    M = R.shape[0]
    out = np.zeros((M, L_vec), complex)
    for l in range(L_vec):
        v = np.array(init[:, l], dtype=complex)
        prev = out[:, :l]
        for _ in range(Q):
            v = R @ v
            v = v - prev @ (prev.conj().T @ v)
            v = v / np.linalg.norm(v)
        out[:, l] = v
    return out


def dpm_centralized_emulation(R_hat, T, W, L_vec: int, P: int, Q: int, seed, init=None) -> np.ndarray:
    """Power method with deflation run directly on the equivalent covariance.

    Same start vectors as :func:`dpm_eigendecomposition` for the same seed,
    so the two agree when the projection and normalization depths are large.
    """
    R_tilde = equivalent_covariance(R_hat, T, W, P)
    M = R_tilde.shape[0]
    if not 1 <= L_vec <= M:
        raise ValueError(f"L_vec must be in 1..{M}, got {L_vec}")
    _check_separable(R_tilde, L_vec)
    V0 = initial_vectors(M, L_vec, seed) if init is None else np.asarray(init, dtype=complex)
    return power_method(R_tilde, L_vec, Q, V0)


def as_eigenbasis(V: np.ndarray, geom_or_counts, provenance=None) -> DistributedEigenbasis:
    """Split an assembled M x L basis into per-node slices."""
    counts = geom_or_counts.sensor_counts if hasattr(geom_or_counts, "sensor_counts") else geom_or_counts
    edges = np.cumsum([0, *counts])
    return DistributedEigenbasis(tuple(V[a:b] for a, b in zip(edges[:-1], edges[1:])), dict(provenance or {}))


def dpm_rayleigh_quotients(snaps: SnapshotSet, W: WeightMatrix, basis: DistributedEigenbasis, P: int, P1: int):
    """Per-node eigenvalue estimates v^H R v.

    One more product round (N instances of depth P) followed by a single
    consensus instance of depth P1 per vector on the local inner products.
    Returns a K x L array, row k holding node k's estimates.
    """
    blocks = snaps.per_node
    K, N = len(blocks), snaps.N
    out = np.zeros((K, basis.n_vectors))
    for l in range(basis.n_vectors):
        v = [basis.per_node[k][:, l] for k in range(K)]
        y = np.stack([blocks[k].conj().T @ v[k] for k in range(K)])
        phi = K * ac_iterate(W, y, P)
        local = np.array([np.vdot(v[k], blocks[k] @ phi[k] / N).real for k in range(K)])
        out[:, l] = K * ac_iterate(W, local, P1)
    return out
