import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from desprit import DecentralizedESPRIT, DecentralizedPowerMethod
from desprit.array_model import eig_hermitian, generate_snapshots, sample_covariance
from desprit.harness.metrics import subspace_se
from desprit.scenarios import SIX_NODE_NEIGHBORS, reference_scenario


@pytest.fixture(scope="module")
def X(geom):
    return generate_snapshots(geom, reference_scenario(10), 500, 0).stacked().T


def test_params_and_clone():
    est = DecentralizedPowerMethod(n_components=3, P=20)
    assert est.get_params()["P"] == 20
    c = clone(est.set_params(Q=5))
    assert c.get_params()["Q"] == 5 and c is not est
    assert clone(DecentralizedESPRIT(n_sources=2)).get_params()["n_sources"] == 2


def test_power_method_fit_transform(X):
    est = DecentralizedPowerMethod(3, SIX_NODE_NEIGHBORS, 2, P=400, Q=100).fit(X)
    assert est.components_.shape == (3, 12) and est.n_features_in_ == 12
    U = eig_hermitian(sample_covariance(X.T), warn_degenerate=False).vectors[:, :3]
    assert subspace_se(est.components_.T, U) < 1e-6
    Z = est.transform(X)
    assert Z.shape == (500, 3)
    assert [b.shape for b in est.node_components_] == [(2, 3)] * 6
    with pytest.raises(ValueError):
        est.transform(X[:, :10])


def test_power_method_full_matches_emulated(X):
    kw = dict(n_components=2, neighbors=SIX_NODE_NEIGHBORS, sensor_counts=2, P=10, Q=20)
    a = DecentralizedPowerMethod(mode="emulated", **kw).fit(X)
    b = DecentralizedPowerMethod(mode="full", **kw).fit(X)
    assert subspace_se(b.components_.T, a.components_.T) < 1e-8
    assert b.ac_accounting_["ac_instances"] > 0 and a.ac_accounting_ == {}


def test_not_fitted():
    with pytest.raises(NotFittedError):
        DecentralizedPowerMethod().transform(np.ones((2, 2)))


def test_input_checks(X):
    with pytest.raises(ValueError):
        DecentralizedPowerMethod(sensor_counts=5).fit(X)
    with pytest.raises(ValueError):
        DecentralizedPowerMethod(n_components=13, sensor_counts=2).fit(X)
    with pytest.raises(ValueError):
        DecentralizedPowerMethod(sensor_counts=2).fit(np.full((3, 12), np.nan))


def test_esprit_fit(X):
    est = DecentralizedESPRIT(3, SIX_NODE_NEIGHBORS, 2, P=30, Q=10).fit(X)
    assert est.node_doas_.shape == (6, 3)
    np.testing.assert_allclose(est.doas_, [-14, -10, 5], atol=1.0)
    full = DecentralizedESPRIT(3, SIX_NODE_NEIGHBORS, 2, P=30, Q=10, desprit_mode="full", mode="emulated").fit(X)
    np.testing.assert_allclose(full.node_doas_, np.tile(est.doas_, (6, 1)), atol=1e-6)


def test_complete_graph_default(X):
    est = DecentralizedESPRIT(3, sensor_counts=2, P=5, Q=10, mode="emulated").fit(X)
    assert np.isfinite(est.doas_).all()
