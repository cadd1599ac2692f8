"""Decentralized eigendecomposition and ESPRIT over averaging consensus."""

from .array_model import (
    ArrayGeometry,
    EigenPairs,
    SnapshotSet,
    SourceScenario,
    Subarray,
    eig_hermitian,
    full_steering_matrix,
    generate_snapshots,
    sample_covariance,
    steering_vector,
    true_covariance,
)
from .dpm import (
    DistributedEigenbasis,
    DpmConfig,
    dpm_centralized_emulation,
    dpm_eigendecomposition,
    equivalent_covariance,
    selection_matrix,
)
from .estimators import DecentralizedESPRIT, DecentralizedPowerMethod
from .esprit import (
    DoaEstimate,
    PsiEstimate,
    SelectionPair,
    build_selection_pair,
    centralized_esprit,
    desprit,
    extract_doas,
    psi_from_subspace,
)
from .esprit_mse import EspritAnalysisContext, armse_desprit, expected_dpsi_moments, gamma_mu_vectors
from .network import (
    MessageCounter,
    Topology,
    WeightMatrix,
    ac_iterate,
    build_metropolis_weights,
    check_convergence,
    spectral_decomposition,
)
from .perf_analysis import (
    AnalysisInputs,
    EigvecCov,
    armse_dpm,
    consensus_bias_vector,
    deflation_matrix,
    eigvec_second_order,
    first_order_error,
)

__version__ = "0.1.0"
