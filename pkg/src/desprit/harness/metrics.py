"""Phase alignment and squared-error metrics for Monte Carlo trials."""

import numpy as np

from ..exceptions import OrthogonalEstimateError


def align_eigenvector(est: np.ndarray, ref: np.ndarray, norm_tol: float = 1e-6) -> np.ndarray:
    """Rotate ``est`` by the unit-modulus scalar that brings it closest to ``ref``."""
    est = np.asarray(est)
    ref = np.asarray(ref)
    for name, v in (("est", est), ("ref", ref)):
        if abs(np.linalg.norm(v) - 1.0) > norm_tol:
            raise ValueError(f"{name} must have unit norm, got {np.linalg.norm(v):.6g}")
    c = np.vdot(ref, est)
    if abs(c) < 1e-12:
        raise OrthogonalEstimateError("estimate is orthogonal to the reference; phase is undefined")
    return est * (np.conj(c) / abs(c))


def align_columns(est: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return np.column_stack([align_eigenvector(est[:, l], ref[:, l]) for l in range(ref.shape[1])])


def subspace_se(est: np.ndarray, ref: np.ndarray) -> float:
    """||aligned est - ref||_F^2 divided by the number of columns."""
    err = align_columns(est, ref) - ref
    return float(np.vdot(err, err).real / ref.shape[1])


def doa_se(est_deg, true_deg) -> float:
    """Mean squared DOA error in deg^2 after pairing sorted estimates with sorted truths."""
    est = np.sort(np.asarray(est_deg, float))
    tru = np.sort(np.asarray(true_deg, float))
    if est.shape != tru.shape:
        raise ValueError("estimate and truth differ in length")
    return float(np.mean((est - tru) ** 2))


def rmse(squared_errors) -> float:
    """Root of the mean, summed in index order for reproducibility."""
    se = np.asarray(squared_errors, float)
    return float(np.sqrt(np.sum(se) / se.size))
