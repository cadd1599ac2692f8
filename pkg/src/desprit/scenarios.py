"""The six-subarray reference setup used by the presets and tests."""

from .array_model import ArrayGeometry, SourceScenario
from .network import Topology

# 0-based neighbor lists
SIX_NODE_NEIGHBORS = ([1, 2], [0, 2], [0, 1, 3], [2, 4, 5], [3, 5], [3, 4])
SIX_NODE_POSITIONS = ((0.0, 0.0), (0.45, 0.99), (3.02, 0.45), (5.61, 0.90), (8.03, 1.46), (8.70, 0.50))
REFERENCE_DOAS_DEG = (-14.0, -10.0, 5.0)


def six_node_topology() -> Topology:
    return Topology.from_lists(SIX_NODE_NEIGHBORS)


def six_subarray_geometry(d: float = 1.0) -> ArrayGeometry:
    return ArrayGeometry.from_positions(SIX_NODE_POSITIONS, 2, d)


def reference_scenario(snr_db: float, snr_db_factor: float = 10.0, noise_var: float = 1.0) -> SourceScenario:
    return SourceScenario.equal_power(REFERENCE_DOAS_DEG, snr_db, noise_var, snr_db_factor)
