"""Predicted DOA error of decentralized ESPRIT.

The eigenvalue error of Psi is linear in the subspace error,
``dpsi_l = mu_l^H dU r_l``, so its second moments follow from the eigenvector
moments in :mod:`desprit.perf_analysis`. The DOA variance then comes from
the phase of ``dpsi_l`` relative to ``psi_l``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import ArrayGeometry
from .esprit import SelectionPair, build_selection_pair
from .exceptions import NumericalRegimeError
from .perf_analysis import AnalysisInputs, eigvec_second_order

UNIT_CIRCLE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EspritAnalysisContext:
    """True-model quantities, with sources ordered by ascending DOA."""

    inputs: AnalysisInputs
    sel: SelectionPair
    d: float
    L: int
    U_s: np.ndarray
    G: np.ndarray
    psi: np.ndarray
    right: np.ndarray
    left: np.ndarray
    doas_rad: np.ndarray

    @classmethod
    def build(cls, inputs: AnalysisInputs, geom: ArrayGeometry, L: int, doas_deg=None) -> "EspritAnalysisContext":
        sel = build_selection_pair(geom)
        U_s = inputs.eig.vectors[:, :L]
        Ub = sel.upper @ U_s
        G = np.linalg.solve(Ub.conj().T @ Ub, Ub.conj().T)
        Psi = G @ (sel.lower @ U_s)
        psi, Rr = np.linalg.eig(Psi)
        Ql = np.linalg.inv(Rr)
        if np.abs(np.abs(psi) - 1).max() > UNIT_CIRCLE_TOL:
            raise NumericalRegimeError(f"true Psi eigenvalues are off the unit circle: |psi| = {np.abs(psi)}")
        th = np.arcsin(np.angle(psi) / (np.pi * geom.d))
        order = np.argsort(th)
        psi, Rr, Ql, th = psi[order], Rr[:, order], Ql[order], th[order]
        if doas_deg is not None:
            ref = np.exp(1j * np.pi * geom.d * np.sin(np.deg2rad(np.sort(np.asarray(doas_deg, float)))))
            if np.abs(psi - ref).max() > UNIT_CIRCLE_TOL:
                raise NumericalRegimeError("true Psi eigenvalues do not match the source directions")
        return cls(inputs, sel, geom.d, L, U_s, G, psi, Rr, Ql, th)


@dataclass(frozen=True)
class DpsiMoments:
    abs_sq: float
    sq: complex


def gamma_mu_vectors(ctx: EspritAnalysisContext, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the M-vectors gamma_l and mu_l; ``gamma.conj() @ x`` applies gamma_l^H."""
    qG = ctx.left[l] @ ctx.G
    J1, J2, p = ctx.sel.upper, ctx.sel.lower, ctx.psi[l]
    gH = qG @ (J1 - np.conj(p) * J2)
    muH = qG @ (J2 - p * J1)
    return gH.conj(), muH.conj()


def _moments(ctx: EspritAnalysisContext, l: int, part: str) -> DpsiMoments:
    r = ctx.right[:, l]
    M = ctx.U_s.shape[0]
    E1 = np.zeros((M, M), complex)
    E2 = np.zeros((M, M), complex)
    for i in range(ctx.L):
        for j in range(ctx.L):
            c = eigvec_second_order(ctx.inputs, i, j)
            herm = {"all": c.herm, "finite": c.herm_finite, "bias": c.herm_bias}[part]
            trans = {"all": c.trans, "finite": c.trans_finite, "bias": c.trans_bias}[part]
            E1 += r[i] * np.conj(r[j]) * herm
            E2 += r[i] * r[j] * trans
    gamma, mu = gamma_mu_vectors(ctx, l)
    abs_sq = (gamma.conj() @ E1 @ gamma).real
    # mu_l^* as a column is (mu_l^H)^T, i.e. mu.conj()
    sq = mu.conj() @ E2 @ mu.conj()
    return DpsiMoments(float(abs_sq), complex(sq))


def expected_dpsi_moments(ctx: EspritAnalysisContext, l: int) -> DpsiMoments:
    """E[|dpsi_l|^2] and E[dpsi_l^2] for source l (ascending DOA order)."""
    return _moments(ctx, l, "all")


def doa_variances(ctx: EspritAnalysisContext, part: str = "all") -> np.ndarray:
    """Per-source DOA error variance in rad^2."""
    out = np.empty(ctx.L)
    for l in range(ctx.L):
        c = np.cos(ctx.doas_rad[l])
        if abs(c) < 1e-6:
            raise NumericalRegimeError(f"source {l} is at endfire; the DOA error is not defined to first order")
        m = _moments(ctx, l, part)
        out[l] = (m.abs_sq - np.real(np.conj(ctx.psi[l]) ** 2 * m.sq)) / (2 * (np.pi * ctx.d * c) ** 2)
    if np.any(out < -1e-12 * max(1.0, np.abs(out).max())):
        raise NumericalRegimeError(f"negative predicted DOA variance {out}; the first-order analysis does not apply")
    return out


def armse_desprit(ctx: EspritAnalysisContext, l_set=None) -> float:
    """Predicted DOA RMSE in degrees over the sources in ``l_set`` (all by default)."""
    var = doa_variances(ctx)
    idx = range(ctx.L) if l_set is None else list(l_set)
    return float(np.rad2deg(np.sqrt(np.mean(var[list(idx)]))))
