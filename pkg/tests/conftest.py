import sys

import numpy as np
import pytest

from desprit.array_model import true_covariance
from desprit.dpm import selection_matrix
from desprit.network import build_metropolis_weights
from desprit.perf_analysis import AnalysisInputs
from desprit.scenarios import reference_scenario, six_node_topology, six_subarray_geometry


@pytest.fixture(scope="session")
def topo():
    return six_node_topology()


@pytest.fixture(scope="session")
def W(topo):
    return build_metropolis_weights(topo)


@pytest.fixture(scope="session")
def geom():
    return six_subarray_geometry()


@pytest.fixture(scope="session")
def T(topo, geom):
    return selection_matrix(topo, geom)


@pytest.fixture(scope="session")
def inputs_at(geom, W, T):
    """inputs_at(snr_db, N, P, snr_db_factor=10) -> AnalysisInputs for the reference scenario."""

    def make(snr_db, N, P, snr_db_factor=10):
        R = true_covariance(geom, reference_scenario(snr_db, snr_db_factor))
        return AnalysisInputs.from_covariance(R, W, T, N, P)

    return make


def random_hermitian(rng, M, rank=None):
    A = rng.standard_normal((M, rank or M)) + 1j * rng.standard_normal((M, rank or M))
    return A @ A.conj().T / M


def unit(rng, M):
    v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(mod.RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(line)
