"""Partly calibrated subarray model: steering vectors, snapshots and covariances.

Positions and spacing are measured in half wavelengths, so a phase of
``pi * distance`` corresponds to the geometric delay. Angles are in degrees
from broadside.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DegenerateSpectrumWarning


@dataclass(frozen=True)
class Subarray:
    xi: tuple[float, float]
    m: int


@dataclass(frozen=True)
class ArrayGeometry:
    """Subarrays with unknown relative displacements but a shared internal spacing ``d``."""

    subarrays: tuple[Subarray, ...]
    d: float = 1.0

    def __post_init__(self):
        subs = tuple(s if isinstance(s, Subarray) else Subarray(tuple(s[0]), int(s[1])) for s in self.subarrays)
        subs = tuple(Subarray((float(s.xi[0]), float(s.xi[1])), int(s.m)) for s in subs)
        object.__setattr__(self, "subarrays", subs)
        if not subs:
            raise ValueError("geometry needs at least one subarray")
        if self.d <= 0:
            raise ValueError(f"spacing d must be positive, got {self.d}")
        for k, s in enumerate(subs):
            if s.m < 1:
                raise ValueError(f"subarray {k} has {s.m} sensors")
        if subs[0].xi != (0.0, 0.0):
            raise ValueError(f"first subarray is the reference and must sit at (0, 0), got {subs[0].xi}")

    @classmethod
    def from_positions(cls, positions, sensor_counts, d: float = 1.0) -> "ArrayGeometry":
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        if np.isscalar(sensor_counts):
            sensor_counts = [int(sensor_counts)] * len(positions)
        if len(sensor_counts) != len(positions):
            raise ValueError("one sensor count per subarray position is required")
        return cls(tuple(Subarray(tuple(p), int(m)) for p, m in zip(positions, sensor_counts)), d)

    @property
    def node_count(self) -> int:
        return len(self.subarrays)

    @property
    def sensor_counts(self) -> tuple[int, ...]:
        return tuple(s.m for s in self.subarrays)

    @property
    def sensor_total(self) -> int:
        return sum(self.sensor_counts)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.xi for s in self.subarrays])

    def node_slices(self) -> list[slice]:
        """Row range of each subarray inside the stacked sensor vector."""
        edges = np.concatenate([[0], np.cumsum(self.sensor_counts)])
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass(frozen=True, eq=False)
class SourceScenario:
    doas_deg: np.ndarray
    source_cov: np.ndarray
    noise_var: float = 1.0

    def __post_init__(self):
        doas = np.atleast_1d(np.asarray(self.doas_deg, dtype=float))
        P = np.atleast_2d(np.asarray(self.source_cov, dtype=complex)) if doas.size else np.zeros((0, 0), complex)
        if np.any(np.abs(doas) >= 90):
            raise ValueError("DOAs must lie strictly between -90 and 90 degrees")
        if len(np.unique(doas)) != doas.size:
            raise ValueError("DOAs must be distinct")
        if P.shape != (doas.size, doas.size):
            raise ValueError(f"source covariance must be {doas.size}x{doas.size}, got {P.shape}")
        if doas.size:
            if not np.allclose(P, P.conj().T, atol=1e-12 * max(1.0, np.abs(P).max())):
                raise ValueError("source covariance is not Hermitian")
            if np.linalg.eigvalsh(P).min() < -1e-12 * max(1.0, np.abs(P).max()):
                raise ValueError("source covariance is not positive semidefinite")
        if self.noise_var < 0:
            raise ValueError("noise variance must be non-negative")
        object.__setattr__(self, "doas_deg", doas)
        object.__setattr__(self, "source_cov", P)

    @classmethod
    def equal_power(cls, doas_deg, snr_db: float, noise_var: float = 1.0, snr_db_factor: float = 10.0):
        """Uncorrelated sources of equal power ``noise_var * 10**(snr_db / snr_db_factor)``.

        ``snr_db_factor=10`` is the usual power ratio in decibels; 20 treats
        the decibel value as an amplitude ratio.
        """
        doas = np.atleast_1d(np.asarray(doas_deg, dtype=float))
        power = noise_var * snr_to_power(snr_db, snr_db_factor)
        return cls(doas, power * np.eye(doas.size), noise_var)

    @property
    def source_count(self) -> int:
        return self.doas_deg.size


def snr_to_power(snr_db: float, snr_db_factor: float = 10.0) -> float:
    return float(10.0 ** (snr_db / snr_db_factor))


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    per_node: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(np.atleast_2d(np.asarray(b, dtype=complex)) for b in self.per_node)
        if len({b.shape[1] for b in blocks}) != 1:
            raise ValueError("all node blocks must hold the same number of snapshots")
        object.__setattr__(self, "per_node", blocks)

    @classmethod
    def from_stacked(cls, X: np.ndarray, sensor_counts) -> "SnapshotSet":
        X = np.asarray(X, dtype=complex)
        if X.shape[0] != sum(sensor_counts):
            raise ValueError(f"stacked snapshots have {X.shape[0]} rows, expected {sum(sensor_counts)}")
        edges = np.cumsum([0, *sensor_counts])
        return cls(tuple(X[a:b] for a, b in zip(edges[:-1], edges[1:])))

    @property
    def N(self) -> int:
        return self.per_node[0].shape[1]

    @property
    def sensor_counts(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.per_node)

    def stacked(self) -> np.ndarray:
        return np.vstack(self.per_node)

    def save(self, path) -> None:
        """Write to ``.npz`` (arrays ``x`` and ``sensor_counts``) or ``.csv``.

        The CSV layout is one row per sensor and snapshot:
        ``node,sensor,t,re,im`` with 0-based indices.
        """
        path = Path(path)
        if path.suffix == ".npz":
            np.savez(path, x=self.stacked(), sensor_counts=np.array(self.sensor_counts))
        elif path.suffix == ".csv":
            with open(path, "w") as f:
                f.write("node,sensor,t,re,im\n")
                for k, b in enumerate(self.per_node):
                    for m in range(b.shape[0]):
                        for t in range(b.shape[1]):
                            f.write(f"{k},{m},{t},{float(b[m, t].real)!r},{float(b[m, t].imag)!r}\n")
        else:
            raise ValueError(f"unsupported snapshot format {path.suffix!r}; use .npz or .csv")

    @classmethod
    def load(cls, path) -> "SnapshotSet":
        path = Path(path)
        if path.suffix == ".npz":
            with np.load(path) as z:
                return cls.from_stacked(z["x"], [int(m) for m in z["sensor_counts"]])
        if path.suffix == ".csv":
            raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            node, sensor, t = (raw[:, i].astype(int) for i in range(3))
            K = node.max() + 1
            counts = [int(sensor[node == k].max()) + 1 for k in range(K)]
            blocks = [np.zeros((counts[k], t.max() + 1), complex) for k in range(K)]
            for (k, m, tt), v in zip(zip(node, sensor, t), raw[:, 3] + 1j * raw[:, 4]):
                blocks[k][m, tt] = v
            return cls(tuple(blocks))
        raise ValueError(f"unsupported snapshot format {path.suffix!r}; use .npz or .csv")


@dataclass(frozen=True, eq=False)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray

    def degenerate_pairs(self, rel_tol: float = 1e-8) -> list[tuple[int, int]]:
        gaps = -np.diff(self.values)
        thr = rel_tol * abs(self.values[0]) if self.values.size else 0.0
        return [(i, i + 1) for i in np.flatnonzero(gaps < thr)]


def _check_angle(theta_deg):
    if np.any(np.abs(theta_deg) >= 90):
        raise ValueError(f"angle {theta_deg} outside (-90, 90) degrees")


def steering_vector(geom: ArrayGeometry, k: int, theta_deg: float) -> np.ndarray:
    _check_angle(theta_deg)
    th = np.deg2rad(theta_deg)
    sub = geom.subarrays[k]
    kappa = np.array([np.sin(th), np.cos(th)])
    offset = np.exp(1j * np.pi * (np.array(sub.xi) @ kappa))
    return offset * np.exp(1j * np.pi * geom.d * np.arange(sub.m) * np.sin(th))


def full_steering_matrix(geom: ArrayGeometry, doas_deg) -> np.ndarray:
    doas = np.atleast_1d(np.asarray(doas_deg, dtype=float))
    A = np.empty((geom.sensor_total, doas.size), complex)
    for l, th in enumerate(doas):
        A[:, l] = np.concatenate([steering_vector(geom, k, th) for k in range(geom.node_count)])
    return A


def true_covariance(geom: ArrayGeometry, scen: SourceScenario) -> np.ndarray:
    M = geom.sensor_total
    R = scen.noise_var * np.eye(M, dtype=complex)
    if scen.source_count:
        A = full_steering_matrix(geom, scen.doas_deg)
        R = R + A @ scen.source_cov @ A.conj().T
    return 0.5 * (R + R.conj().T)


def _psd_factor(P: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(P)
        return V * np.sqrt(np.clip(w, 0.0, None))


def make_rng(seed) -> np.random.Generator:
    """Philox generator from an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def _circular_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def generate_snapshots(geom: ArrayGeometry, scen: SourceScenario, N: int, seed) -> SnapshotSet:
    """Draw N snapshots of sources plus white noise.

    Source waveforms are drawn before the noise, so two scenarios that differ
    only in powers reuse the same underlying normals for a given seed.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    rng = make_rng(seed)
    M, L = geom.sensor_total, scen.source_count
    s = _circular_normal(rng, (L, N))
    n = _circular_normal(rng, (M, N))
    X = np.sqrt(scen.noise_var) * n
    if L:
        A = full_steering_matrix(geom, scen.doas_deg)
        X = X + A @ (_psd_factor(scen.source_cov) @ s)
    return SnapshotSet.from_stacked(X, geom.sensor_counts)


def sample_covariance(snaps) -> np.ndarray:
    X = snaps.stacked() if isinstance(snaps, SnapshotSet) else np.asarray(snaps)
    R = X @ X.conj().T / X.shape[1]
    return 0.5 * (R + R.conj().T)


def fix_gauge(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    V = np.array(V, dtype=complex)
    idx = np.argmax(np.abs(V), axis=0)
    piv = V[idx, np.arange(V.shape[1])]
    return V * (np.abs(piv) / piv)


def eig_hermitian(R: np.ndarray, warn_degenerate: bool = True) -> EigenPairs:
    """Hermitian eigendecomposition with descending eigenvalues and a canonical phase per column."""
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {R.shape}")
    scale = np.linalg.norm(R)
    if np.linalg.norm(R - R.conj().T) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian")
    w, V = np.linalg.eigh(0.5 * (R + R.conj().T))
    w, V = w[::-1].copy(), V[:, ::-1]
    out = EigenPairs(w, fix_gauge(V))
    if warn_degenerate and out.degenerate_pairs():
        warnings.warn(
            f"near-equal eigenvalues at index pairs {out.degenerate_pairs()}; their eigenvectors are not unique",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
    return out
