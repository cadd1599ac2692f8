import numpy as np
import pytest

from desprit.array_model import ArrayGeometry, SnapshotSet, eig_hermitian, generate_snapshots, sample_covariance
from desprit.dpm import (
    DpmConfig,
    dpm_ac_budget,
    dpm_centralized_emulation,
    dpm_eigendecomposition,
    dpm_rayleigh_quotients,
    equivalent_covariance,
    initial_vectors,
    power_method,
    selection_matrix,
)
from desprit.exceptions import ConsensusWarning, NonConvergenceError
from desprit.harness.metrics import subspace_se
from desprit.network import MessageCounter, Topology, WeightMatrix
from desprit.perf_analysis import armse_dpm_terms
from desprit.scenarios import reference_scenario


def leading(R, L):
    return eig_hermitian(R, warn_degenerate=False).vectors[:, :L]


def max_aligned_error(V, ref):
    return np.sqrt(subspace_se(V, ref) * ref.shape[1])


@pytest.fixture(scope="module")
def draw(geom):
    snaps = generate_snapshots(geom, reference_scenario(10), 100, 11)
    return snaps, sample_covariance(snaps)


class TestSelection:
    def test_single_node(self):
        g = ArrayGeometry.from_positions([(0, 0)], [4])
        np.testing.assert_array_equal(selection_matrix(None, g), np.ones((4, 1)))

    def test_one_sensor_per_node(self):
        g = ArrayGeometry.from_positions(np.zeros((5, 2)), 1)
        np.testing.assert_array_equal(selection_matrix(None, g), np.eye(5))

    def test_reference(self, T):
        assert T.shape == (12, 6)
        np.testing.assert_array_equal(T.sum(axis=1), 1)
        np.testing.assert_array_equal(T.sum(axis=0), 2)
        for k in range(6):
            assert T[2 * k, k] == T[2 * k + 1, k] == 1

    def test_node_mismatch(self, topo):
        with pytest.raises(ValueError):
            selection_matrix(topo, ArrayGeometry.from_positions([(0, 0)], [2]))


class TestEquivalentCovariance:
    def test_entrywise_oracle(self, draw, T, W):
        _, Rh = draw
        P = 7
        WP = np.eye(6)
        for _ in range(P):
            WP = WP @ W.entries
        R = equivalent_covariance(Rh, T, W, P)
        node = np.repeat(np.arange(6), 2)
        for i in range(12):
            for j in range(12):
                assert R[i, j] == pytest.approx(6 * WP[node[i], node[j]] * Rh[i, j], rel=1e-12, abs=1e-12)

    def test_large_P_limit(self, draw, T, W):
        _, Rh = draw
        assert np.abs(equivalent_covariance(Rh, T, W, 10**4) - Rh).max() < 1e-8

    def test_zero_rounds_is_block_diagonal(self, draw, T, W):
        _, Rh = draw
        mask = np.kron(np.eye(6), np.ones((2, 2)))
        np.testing.assert_allclose(equivalent_covariance(Rh, T, W, 0), 6 * mask * Rh)

    def test_single_node(self, draw):
        _, Rh = draw
        for P in (0, 3, 50):
            np.testing.assert_allclose(equivalent_covariance(Rh, np.ones((12, 1)), [[1.0]], P), Rh)

    @pytest.mark.parametrize("snr", [0, 10])
    def test_distance_shrinks_with_P(self, geom, T, W, snr):
        for seed in range(5):
            Rh = sample_covariance(generate_snapshots(geom, reference_scenario(snr), 100, seed))
            d = [np.linalg.norm(equivalent_covariance(Rh, T, W, P) - Rh) for P in range(101)]
            assert np.all(np.diff(d) <= 1e-9 * d[0])


class TestDpm:
    def test_single_node_is_power_method(self):
        g = ArrayGeometry.from_positions([(0, 0)], [12])
        snaps = generate_snapshots(g, reference_scenario(10), 200, 3)
        Rh = sample_covariance(snaps)
        t = Topology((frozenset(),))
        B = dpm_eigendecomposition(snaps, t, WeightMatrix([[1.0]], t), 3, DpmConfig(P=5, Q=200, seed=4))
        assert max_aligned_error(B.assembled, leading(Rh, 3)) < 1e-6

    def test_large_depths_match_sample_eigenvectors(self, draw, topo, W):
        snaps, Rh = draw
        B = dpm_eigendecomposition(snaps, topo, W, 3, DpmConfig(P=500, P1=500, P2=500, Q=100, seed=1))
        assert max_aligned_error(B.assembled, leading(Rh, 3)) < 1e-4

    @pytest.mark.parametrize("P", [5, 10, 30])
    def test_matches_equivalent_covariance(self, draw, topo, W, T, P):
        snaps, Rh = draw
        B = dpm_eigendecomposition(snaps, topo, W, 3, DpmConfig(P=P, P1=500, P2=500, Q=100, seed=2))
        assert max_aligned_error(B.assembled, leading(equivalent_covariance(Rh, T, W, P), 3)) < 1e-4

    def test_deflated_vectors_orthonormal(self, draw, topo, W):
        snaps, _ = draw
        V = dpm_eigendecomposition(snaps, topo, W, 4, DpmConfig(P=10, Q=50, seed=0)).assembled
        G = V.conj().T @ V
        assert np.abs(G - np.diag(np.diag(G))).max() <= 1e-4
        np.testing.assert_allclose(np.diag(G).real, 1, atol=1e-6)

    def test_small_depth_nodes_disagree(self, draw, topo, W):
        # with few normalization rounds each node rescales by its own norm estimate
        snaps, _ = draw
        B = dpm_eigendecomposition(snaps, topo, W, 1, DpmConfig(P=10, P2=2, Q=20, seed=0))
        assert abs(np.linalg.norm(B.assembled) - 1) > 1e-3

    def test_counter_matches_budget(self, draw, topo, W):
        snaps, _ = draw
        cfg = DpmConfig(P=7, P1=20, P2=30, Q=3, seed=0)
        c = MessageCounter()
        B = dpm_eigendecomposition(snaps, topo, W, 3, cfg, c)
        budget = dpm_ac_budget(100, 3, cfg)
        assert c.ac_instances == B.accounting["ac_instances"] == budget["ac_instances"] == 3 * (3 * 100 + 3) + 3
        assert c.ac_iterations_total == budget["ac_iterations_total"]

    def test_rejects_too_many_vectors(self, draw, topo, W):
        snaps, _ = draw
        with pytest.raises(ValueError):
            dpm_eigendecomposition(snaps, topo, W, 13, DpmConfig())

    def test_flags_non_convergent_weights(self):
        t = Topology.from_edges(2, [(0, 1)])
        snaps = SnapshotSet.from_stacked(np.random.default_rng(0).standard_normal((2, 20)), [1, 1])
        with pytest.warns(ConsensusWarning):
            dpm_eigendecomposition(snaps, t, WeightMatrix([[0.0, 1.0], [1.0, 0.0]], t), 1, DpmConfig(Q=2))

    def test_degenerate_spectrum_raises(self, T, W):
        with pytest.raises(NonConvergenceError):
            dpm_centralized_emulation(np.eye(12), T, W, 2, 10, 5, 0)

    def test_rayleigh_quotients(self, draw, topo, W, T):
        snaps, Rh = draw
        B = dpm_eigendecomposition(snaps, topo, W, 2, DpmConfig(P=300, P1=300, P2=300, Q=100, seed=0))
        lam = dpm_rayleigh_quotients(snaps, W, B, 300, 300)
        np.testing.assert_allclose(lam, np.tile(eig_hermitian(Rh, warn_degenerate=False).values[:2], (6, 1)), rtol=1e-6)


class TestEmulation:
    @pytest.mark.parametrize("P", [0, 5, 10, 30])
    def test_agrees_with_message_level(self, draw, topo, W, T, P):
        snaps, Rh = draw
        cfg = DpmConfig(P=P, P1=500, P2=500, Q=100, seed=8)
        full = dpm_eigendecomposition(snaps, topo, W, 3, cfg).assembled
        emu = dpm_centralized_emulation(Rh, T, W, 3, P, 100, 8)
        assert max_aligned_error(full, emu) < 1e-4

    def test_large_P_is_centralized_power_method(self, draw, T, W):
        _, Rh = draw
        V0 = initial_vectors(12, 3, 5)
        np.testing.assert_allclose(
            dpm_centralized_emulation(Rh, T, W, 3, 10**4, 30, 5), power_method(Rh, 3, 30, V0), atol=1e-8
        )

    def test_seed_determinism(self, draw, T, W):
        _, Rh = draw
        a = dpm_centralized_emulation(Rh, T, W, 3, 10, 10, 5)
        b = dpm_centralized_emulation(Rh, T, W, 3, 10, 10, 5)
        assert a.tobytes() == b.tobytes()


def test_inconsistency_floor(geom, topo, W, T, inputs_at):
    # at P = 10 the error against the true eigenvectors stops shrinking with N
    U = leading(inputs_at(10, 1, 10).R, 3)
    errs = {}
    for N in (1000, 100_000):
        se = []
        for seed in range(10):
            Rh = sample_covariance(generate_snapshots(geom, reference_scenario(10), N, seed))
            se.append(subspace_se(dpm_centralized_emulation(Rh, T, W, 3, 10, 100, seed), U))
        errs[N] = np.sqrt(np.mean(se))
    _, bias = armse_dpm_terms(inputs_at(10, np.inf, 10), 3)
    assert errs[100_000] > 0.3
    assert errs[100_000] == pytest.approx(np.sqrt(bias), rel=0.05)
    assert abs(errs[100_000] - errs[1000]) / errs[1000] < 0.1
