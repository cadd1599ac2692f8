"""Closed-form first- and second-order statistics of d-PM eigenvector errors.

The eigenvector error splits into a zero-mean finite-sample part, driven
by the sample covariance error, and a deterministic consensus bias ``h_l``
caused by stopping consensus after P rounds. Indices ``l`` and ``m`` are
0-based. ``P=None`` means infinitely many rounds (no bias) and
``N=math.inf`` removes the finite-sample part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array_model import EigenPairs, eig_hermitian
from .exceptions import EigenGapError
from .network import Spectrum, WeightMatrix, spectral_decomposition

GAP_REL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class AnalysisInputs:
    """Covariance, its eigenpairs, the weight spectrum, node selection, N and P.

    Build it from the true covariance for the predictions proper. A sample
    covariance also works, which is handy for exploration.
    """

    R: np.ndarray
    eig: EigenPairs
    w_spec: Spectrum
    T: np.ndarray
    N: float
    P: int | None

    @classmethod
    def from_covariance(cls, R, W, T, N, P) -> "AnalysisInputs":
        spec = W.spectrum if isinstance(W, WeightMatrix) else spectral_decomposition(W)
        if N <= 0:
            raise ValueError("N must be positive")
        if P is not None and P < 0:
            raise ValueError("P must be non-negative or None")
        return cls(np.asarray(R), eig_hermitian(R, warn_degenerate=False), spec, np.asarray(T, float), N, P)

    def with_(self, N=None, P=...) -> "AnalysisInputs":
        return AnalysisInputs(self.R, self.eig, self.w_spec, self.T, self.N if N is None else N, self.P if P is ... else P)

    @property
    def node_count(self) -> int:
        return self.w_spec.alphas.size


@dataclass(frozen=True, eq=False)
class EigvecCov:
    """E[dv_l dv_m^H] and E[dv_l dv_m^T], each split into finite-sample and bias parts."""

    l: int
    m: int
    herm_finite: np.ndarray
    herm_bias: np.ndarray
    trans_finite: np.ndarray
    trans_bias: np.ndarray

    @property
    def herm(self) -> np.ndarray:
        return self.herm_finite + self.herm_bias

    @property
    def trans(self) -> np.ndarray:
        return self.trans_finite + self.trans_bias


def _check_gap(inputs: AnalysisInputs, a: int, b: int):
    lam = inputs.eig.values
    if abs(lam[a] - lam[b]) < GAP_REL_TOL * abs(lam[0]):
        raise EigenGapError(
            f"eigenvalues {a} and {b} are too close ({lam[a]:.6g} vs {lam[b]:.6g})", pair=(a, b)
        )


def deflation_matrix(inputs: AnalysisInputs, l: int) -> np.ndarray:
    """B_l = sum over i != l of v_i v_i^H / (lambda_i - lambda_l)."""
    lam, V = inputs.eig.values, inputs.eig.vectors
    idx = [i for i in range(lam.size) if i != l]
    for i in idx:
        _check_gap(inputs, l, i)
    Vo = V[:, idx]
    return (Vo / (lam[idx] - lam[l])) @ Vo.conj().T


def consensus_bias_vector(inputs: AnalysisInputs, l: int) -> np.ndarray:
    """Consensus bias h_l = K sum_{k>=2} alpha_k^P diag(T b_k) R diag(T b_k) v_l."""
    M = inputs.R.shape[0]
    if inputs.P is None:
        return np.zeros(M, complex)
    K = inputs.node_count
    a, B = inputs.w_spec.alphas, inputs.w_spec.betas
    v = inputs.eig.vectors[:, l]
    h = np.zeros(M, complex)
    for k in range(1, K):
        t = inputs.T @ B[:, k]
        h += a[k] ** inputs.P * (t * (inputs.R @ (t * v)))
    return K * h


def first_order_error(inputs: AnalysisInputs, l: int, delta_R: np.ndarray) -> np.ndarray:
    """First-order eigenvector error -B_l (dR v_l + h_l)."""
    v = inputs.eig.vectors[:, l]
    return -deflation_matrix(inputs, l) @ (delta_R @ v + consensus_bias_vector(inputs, l))


def _finite_herm(inputs: AnalysisInputs, l: int) -> np.ndarray:
    lam, V = inputs.eig.values, inputs.eig.vectors
    if math.isinf(inputs.N):
        return np.zeros((lam.size, lam.size), complex)
    idx = [i for i in range(lam.size) if i != l]
    w = lam[idx] / (lam[l] - lam[idx]) ** 2
    Vo = V[:, idx]
    return (lam[l] / inputs.N) * (Vo * w) @ Vo.conj().T


def eigvec_second_order(inputs: AnalysisInputs, l: int, m: int) -> EigvecCov:
    """Second-order moments of the first-order errors of eigenvectors l and m."""
    lam, V = inputs.eig.values, inputs.eig.vectors
    M = lam.size
    zero = np.zeros((M, M), complex)
    bl = deflation_matrix(inputs, l) @ consensus_bias_vector(inputs, l)
    bm = bl if m == l else deflation_matrix(inputs, m) @ consensus_bias_vector(inputs, m)
    herm_f = _finite_herm(inputs, l) if l == m else zero
    if l != m and not math.isinf(inputs.N):
        _check_gap(inputs, l, m)
        # circular Gaussian fourth moments put v_m on the left here
        trans_f = -(lam[l] * lam[m]) / (inputs.N * (lam[l] - lam[m]) ** 2) * np.outer(V[:, m], V[:, l])
    else:
        trans_f = zero
    return EigvecCov(l, m, herm_f, np.outer(bl, bm.conj()), trans_f, np.outer(bl, bm))


def armse_dpm_terms(inputs: AnalysisInputs, L_sig: int) -> tuple[float, float]:
    """Mean squared error per eigenvector, split into (finite-sample, bias)."""
    if not 1 <= L_sig <= inputs.R.shape[0]:
        raise ValueError(f"L_sig must be in 1..{inputs.R.shape[0]}")
    fin = bias = 0.0
    for l in range(L_sig):
        c = eigvec_second_order(inputs, l, l)
        fin += np.trace(c.herm_finite).real
        bias += np.trace(c.herm_bias).real
    return fin / L_sig, bias / L_sig


def armse_dpm(inputs: AnalysisInputs, L_sig: int) -> float:
    """Predicted RMSE of the aligned d-PM signal eigenvectors."""
    fin, bias = armse_dpm_terms(inputs, L_sig)
    return float(np.sqrt(fin + bias))
