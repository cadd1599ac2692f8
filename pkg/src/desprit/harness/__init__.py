from .config import CURVE_KINDS, PRESETS, ExperimentConfig, load_config, load_preset, parse_config
from .metrics import align_columns, align_eigenvector, doa_se, rmse, subspace_se
from .runner import (
    CurvePoint,
    analytical_points,
    rmse_desprit_mc,
    rmse_dpm_mc,
    run_experiment,
    to_csv,
    trial_streams,
    write_outputs,
)

__all__ = [
    "CURVE_KINDS",
    "PRESETS",
    "CurvePoint",
    "ExperimentConfig",
    "align_columns",
    "align_eigenvector",
    "analytical_points",
    "doa_se",
    "load_config",
    "load_preset",
    "parse_config",
    "rmse",
    "rmse_desprit_mc",
    "rmse_dpm_mc",
    "run_experiment",
    "subspace_se",
    "to_csv",
    "trial_streams",
    "write_outputs",
]
