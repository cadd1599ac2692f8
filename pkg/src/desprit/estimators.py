"""scikit-learn style wrappers.

Snapshots follow the sklearn layout: ``X`` is (n_samples, n_features) with
one row per time snapshot and one column per sensor, sensors grouped by node.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted

from ._validation import check_sensor_layout, check_snapshots
from .array_model import ArrayGeometry, SnapshotSet, sample_covariance
from .dpm import DpmConfig, dpm_centralized_emulation, dpm_eigendecomposition, initial_vectors, selection_matrix
from .esprit import desprit
from .network import MessageCounter, Topology, build_metropolis_weights


def _seed(random_state):
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    return int(check_random_state(random_state).randint(2**31 - 1))


def _layout(est, X):
    neighbors, counts = check_sensor_layout(est.neighbors, est.sensor_counts, X.shape[1], est.index_base)
    topo = Topology.from_lists(neighbors, est.index_base)
    return topo, counts, build_metropolis_weights(topo)


class DecentralizedPowerMethod(TransformerMixin, BaseEstimator):
    """Leading covariance eigenvectors computed with consensus-based power iteration.

    Parameters
    ----------
    n_components : int
        Number of eigenvectors.
    neighbors : list of lists or None
        Neighbor indices per node. None builds a complete graph.
    sensor_counts : int or list of int
        Sensors per node, in feature order.
    index_base : {0, 1}
        Whether ``neighbors`` counts from 0 or 1.
    P, P1, P2 : int
        Consensus rounds for products, projections and normalization.
    Q : int
        Power iterations per eigenvector.
    mode : {"emulated", "full"}
        ``"full"`` simulates every consensus message; ``"emulated"`` runs the
        equivalent centralized iteration, which assumes exact projections.
    random_state : int, RandomState or None
        Seed for the start vectors.

    Attributes
    ----------
    components_ : ndarray of shape (n_components, n_features)
        Unit-norm eigenvector estimates, one per row.
    node_components_ : list of ndarray
        Node k's slice of each eigenvector, shape (M_k, n_components).
    ac_accounting_ : dict
        Consensus instances and rounds (full mode only, else empty).
    """

    def __init__(self, n_components=1, neighbors=None, sensor_counts=1, index_base=0,
                 P=10, P1=500, P2=500, Q=10, mode="emulated", random_state=0):
        self.n_components = n_components
        self.neighbors = neighbors
        self.sensor_counts = sensor_counts
        self.index_base = index_base
        self.P = P
        self.P1 = P1
        self.P2 = P2
        self.Q = Q
        self.mode = mode
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_snapshots(X)
        if self.mode not in ("emulated", "full"):
            raise ValueError(f"mode must be 'emulated' or 'full', got {self.mode!r}.")
        if not 1 <= self.n_components <= X.shape[1]:
            raise ValueError(f"n_components={self.n_components} must be between 1 and n_features={X.shape[1]}.")
        topo, counts, W = _layout(self, X)
        snaps = SnapshotSet.from_stacked(X.T, counts)
        cfg = DpmConfig(P=self.P, P1=self.P1, P2=self.P2, Q=self.Q, seed=_seed(self.random_state))
        V0 = initial_vectors(X.shape[1], self.n_components, cfg.seed)
        if self.mode == "full":
            counter = MessageCounter()
            basis = dpm_eigendecomposition(snaps, topo, W, self.n_components, cfg, counter, V0)
            V = basis.assembled
            self.ac_accounting_ = counter.as_dict()
        else:
            T = selection_matrix(topo, ArrayGeometry.from_positions(np.zeros((len(counts), 2)), counts))
            V = dpm_centralized_emulation(sample_covariance(snaps), T, W, self.n_components, self.P, self.Q, None, V0)
            self.ac_accounting_ = {}
        edges = np.cumsum([0, *counts])
        self.components_ = V.T
        self.node_components_ = [V[a:b] for a, b in zip(edges[:-1], edges[1:])]
        self.weights_ = W
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_snapshots(X, self.n_features_in_)
        return X @ self.components_.conj().T


class DecentralizedESPRIT(BaseEstimator):
    """Direction-of-arrival estimation with ESPRIT on a consensus-computed signal subspace.

    Only the sensor spacing inside each subarray is needed. Subarray
    positions relative to each other are never used.

    Parameters
    ----------
    n_sources : int
    neighbors, sensor_counts, index_base : see DecentralizedPowerMethod
    spacing : float
        Sensor spacing inside a subarray, in half wavelengths.
    P, P1, P2, P3, Q : int
        Consensus depths and power iterations.
    mode : {"emulated", "full"}
        How the subspace is computed.
    desprit_mode : {"a3-shortcut", "full"}
        ``"full"`` gives each node its own estimate from consensus-averaged
        normal equations; ``"a3-shortcut"`` solves one shared system.
    random_state : int, RandomState or None

    Attributes
    ----------
    doas_ : ndarray of shape (n_sources,)
        Estimated DOAs in degrees (node 0's estimate), ascending.
    node_doas_ : ndarray of shape (n_nodes, n_sources)
    estimates_ : list of DoaEstimate
    """

    def __init__(self, n_sources=1, neighbors=None, sensor_counts=2, index_base=0, spacing=1.0,
                 P=10, P1=500, P2=500, P3=500, Q=2, mode="emulated", desprit_mode="a3-shortcut",
                 random_state=0):
        self.n_sources = n_sources
        self.neighbors = neighbors
        self.sensor_counts = sensor_counts
        self.index_base = index_base
        self.spacing = spacing
        self.P = P
        self.P1 = P1
        self.P2 = P2
        self.P3 = P3
        self.Q = Q
        self.mode = mode
        self.desprit_mode = desprit_mode
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_snapshots(X)
        if not 1 <= self.n_sources < X.shape[1]:
            raise ValueError(f"n_sources={self.n_sources} must be between 1 and n_features - 1.")
        topo, counts, W = _layout(self, X)
        # relative subarray positions are unknown and unused
        geom = ArrayGeometry.from_positions(np.zeros((len(counts), 2)), counts, self.spacing)
        snaps = SnapshotSet.from_stacked(X.T, counts)
        cfg = DpmConfig(P=self.P, P1=self.P1, P2=self.P2, P3=self.P3, Q=self.Q, seed=_seed(self.random_state))
        counter = MessageCounter()
        self.estimates_ = desprit(snaps, topo, W, geom, self.n_sources, cfg, self.desprit_mode, self.mode, counter)
        self.node_doas_ = np.array([e.doas_deg for e in self.estimates_])
        self.doas_ = self.node_doas_[0]
        self.ac_accounting_ = counter.as_dict()
        self.n_features_in_ = X.shape[1]
        return self
