"""ESPRIT on a partly calibrated array, centralized and over consensus.

Shift invariance is only used inside each subarray, so the unknown
subarray displacements never enter the estimate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .array_model import ArrayGeometry, SnapshotSet, eig_hermitian, sample_covariance
from .dpm import (
    DistributedEigenbasis,
    DpmConfig,
    as_eigenbasis,
    dpm_centralized_emulation,
    dpm_eigendecomposition,
    selection_matrix,
)
from .exceptions import RankDeficiencyError
from .network import MessageCounter, Topology, WeightMatrix, ac_iterate

COND_LIMIT = 1e12
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SelectionPair:
    """Upper and lower sensor selections, each (M - K') x M with K' subarrays contributing."""

    upper: np.ndarray
    lower: np.ndarray
    single_sensor_nodes: tuple[int, ...] = ()
    node_rows: tuple[slice, ...] = ()


@dataclass(frozen=True, eq=False)
class PsiEstimate:
    """Eigen-system of Psi: right eigenvectors as columns, left ones as rows with q_l r_l = 1."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray


@dataclass(frozen=True, eq=False)
class DoaEstimate:
    doas_deg: np.ndarray
    valid: np.ndarray
    psi: PsiEstimate | None
    node: int | str = "centralized"
    error: str | None = None


def build_selection_pair(geom: ArrayGeometry) -> SelectionPair:
    counts = geom.sensor_counts
    if all(m == 1 for m in counts):
        raise ValueError("no subarray has two or more sensors, so there is no shift invariance to exploit")
    M = geom.sensor_total
    rows = sum(m - 1 for m in counts)
    upper = np.zeros((rows, M))
    lower = np.zeros((rows, M))
    r, node_rows = 0, []
    for sl, m in zip(geom.node_slices(), counts):
        node_rows.append(slice(r, r + m - 1))
        for i in range(m - 1):
            upper[r + i, sl.start + i] = 1.0
            lower[r + i, sl.start + i + 1] = 1.0
        r += m - 1
    single = tuple(k for k, m in enumerate(counts) if m == 1)
    if single:
        warnings.warn(f"subarrays {single} have a single sensor and contribute no shift pairs", stacklevel=2)
    return SelectionPair(upper, lower, single, tuple(node_rows))


def psi_from_cf(C: np.ndarray, F: np.ndarray) -> PsiEstimate:
    """Solve C Psi = F and decompose Psi into eigenvalues, right and left eigenvectors."""
    # C is a Gram matrix, so its condition number is the square of the selected subspace's
    cond = np.linalg.cond(C)
    if not np.isfinite(cond) or cond > min(COND_LIMIT**2, 0.1 / np.finfo(float).eps):
        raise RankDeficiencyError(f"shift-invariance system is rank deficient (cond {cond:.3e})")
    Psi = np.linalg.solve(C, F)
    return _eig_psi(Psi)


def _eig_psi(Psi: np.ndarray) -> PsiEstimate:
    w, Rr = np.linalg.eig(Psi)
    Ql = np.linalg.inv(Rr)
    scale = max(1.0, np.abs(Psi).max())
    res_r = np.abs(Psi @ Rr - Rr * w).max()
    res_l = np.abs(Ql @ Psi - w[:, None] * Ql).max()
    if max(res_r, res_l) > RESIDUAL_TOL * scale * max(1.0, np.linalg.cond(Rr)):
        raise RankDeficiencyError(f"eigen residual of Psi too large ({max(res_r, res_l):.3e})")
    return PsiEstimate(Psi, w, Rr, Ql)


def psi_from_subspace(U_s: np.ndarray, sel: SelectionPair) -> PsiEstimate:
    """Least-squares Psi from upper U_s Psi = lower U_s."""
    Ub = sel.upper @ U_s
    Uu = sel.lower @ U_s
    cond = np.linalg.cond(Ub)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise RankDeficiencyError(f"upper selected subspace is rank deficient (cond {cond:.3e})")
    C = Ub.conj().T @ Ub
    F = Ub.conj().T @ Uu
    return _eig_psi(np.linalg.solve(C, F))


def extract_doas(psi: PsiEstimate, d: float, node: int | str = "centralized") -> DoaEstimate:
    """Angles arcsin(arg(psi) / (pi d)) in degrees, ascending.

    Eigenvalues whose phase maps outside [-1, 1] give NaN and ``valid=False``
    and are sorted last.
    """
    s = np.angle(psi.eigenvalues) / (np.pi * d)
    valid = np.abs(s) <= 1.0
    th = np.full(s.shape, np.nan)
    th[valid] = np.rad2deg(np.arcsin(s[valid]))
    order = np.argsort(np.where(valid, th, np.inf), kind="stable")
    return DoaEstimate(th[order], valid[order], psi, node)


def centralized_esprit(R_hat: np.ndarray, geom: ArrayGeometry, L: int) -> DoaEstimate:
    U_s = eig_hermitian(R_hat, warn_degenerate=False).vectors[:, :L]
    return extract_doas(psi_from_subspace(U_s, build_selection_pair(geom)), geom.d)


def _pair_products(basis: DistributedEigenbasis):
    """Local Gram blocks (Jb V_k)^H (Jb V_k) and (Jb V_k)^H (Ju V_k) per node."""
    C, F = [], []
    for V in basis.per_node:
        m = V.shape[0]
        up, lo = V[: m - 1], V[1:]
        C.append(up.conj().T @ up)
        F.append(up.conj().T @ lo)
    return np.stack(C), np.stack(F)


def desprit(
    snaps: SnapshotSet,
    topology: Topology,
    W: WeightMatrix,
    geom: ArrayGeometry,
    L: int,
    cfg: DpmConfig,
    mode: str = "a3-shortcut",
    dpm_mode: str = "full",
    counter: MessageCounter | None = None,
    init: np.ndarray | None = None,
) -> list[DoaEstimate]:
    """Decentralized ESPRIT, one estimate per node.

    Args:
        snaps: per-node snapshot blocks.
        topology: communication graph.
        W: consensus weights.
        geom: array geometry, used for the subarray sizes and spacing only.
        L: number of sources.
        cfg: consensus depths and power-iteration settings.
        mode: ``"full"`` assembles each node's own Psi system through P3
            consensus rounds; ``"a3-shortcut"`` solves one shared system
            from the assembled subspace.
        dpm_mode: ``"full"`` runs the message-level d-PM, ``"emulated"``
            the equivalent-covariance power method.
        counter: optional consensus work counter.
        init: optional M x L start vectors for the power method.

    Returns:
        A list of K estimates. Nodes whose system is singular carry
        ``error`` and NaN angles.
    """
    if mode not in ("full", "a3-shortcut"):
        raise ValueError(f"mode must be 'full' or 'a3-shortcut', got {mode!r}")
    K = topology.node_count
    if dpm_mode == "full":
        basis = dpm_eigendecomposition(snaps, topology, W, L, cfg, counter, init)
    elif dpm_mode == "emulated":
        T = selection_matrix(topology, geom)
        V = dpm_centralized_emulation(sample_covariance(snaps), T, W, L, cfg.P, cfg.Q, cfg.seed, init)
        basis = as_eigenbasis(V, geom, {"P": cfg.P, "Q": cfg.Q, "seed": cfg.seed, "mode": "emulated"})
    else:
        raise ValueError(f"dpm_mode must be 'full' or 'emulated', got {dpm_mode!r}")

    if mode == "a3-shortcut":
        try:
            psi = psi_from_subspace(basis.assembled, build_selection_pair(geom))
        except RankDeficiencyError as e:
            return [_failed(L, k, str(e)) for k in range(K)]
        shared = extract_doas(psi, geom.d)
        return [DoaEstimate(shared.doas_deg, shared.valid, psi, k) for k in range(K)]

    Cloc, Floc = _pair_products(basis)
    flat = np.concatenate([Cloc.reshape(K, -1), Floc.reshape(K, -1)], axis=1)
    agg = K * ac_iterate(W, flat, cfg.P3, counter)
    out = []
    for k in range(K):
        C = agg[k, : L * L].reshape(L, L)
        F = agg[k, L * L :].reshape(L, L)
        try:
            out.append(extract_doas(psi_from_cf(C, F), geom.d, k))
        except RankDeficiencyError as e:
            out.append(_failed(L, k, str(e)))
    return out


def _failed(L: int, node, msg: str) -> DoaEstimate:
    return DoaEstimate(np.full(L, np.nan), np.zeros(L, bool), None, node, msg)
