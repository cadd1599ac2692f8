import numpy as np


def check_snapshots(X, n_features=None, min_samples=1):
    """Validate a complex (n_samples, n_features) snapshot array.

    sklearn's ``check_array`` rejects complex input, hence this helper.
    """
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError(f"Expected 2D array of shape (n_samples, n_features), got {X.ndim}D array instead.")
    if not (np.issubdtype(X.dtype, np.number) or X.dtype == bool):
        raise ValueError(f"Expected numeric data, got dtype {X.dtype}.")
    X = X.astype(complex)
    if not np.all(np.isfinite(X)):
        raise ValueError("Input contains NaN or infinity.")
    if X.shape[0] < min_samples:
        raise ValueError(f"Found array with {X.shape[0]} sample(s) while a minimum of {min_samples} is required.")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, but this estimator is expecting {n_features} features as input.")
    return X


def check_sensor_layout(neighbors, sensor_counts, n_features, index_base=0):
    """Resolve neighbor lists and sensor counts against the number of features.

    ``neighbors=None`` means a complete graph. ``sensor_counts`` may be an
    int (same count at every node) or a sequence.
    """
    if sensor_counts is None:
        raise ValueError("sensor_counts is required to split features into nodes.")
    if np.isscalar(sensor_counts):
        m = int(sensor_counts)
        if m < 1 or n_features % m:
            raise ValueError(f"{n_features} features cannot be split into nodes of {m} sensors.")
        counts = [m] * (n_features // m)
    else:
        counts = [int(c) for c in sensor_counts]
    if sum(counts) != n_features:
        raise ValueError(f"sensor_counts sum to {sum(counts)} but X has {n_features} features.")
    K = len(counts)
    if neighbors is None:
        neighbors = [[j + index_base for j in range(K) if j != i] for i in range(K)]
    if len(neighbors) != K:
        raise ValueError(f"{len(neighbors)} neighbor lists for {K} nodes.")
    return neighbors, counts
