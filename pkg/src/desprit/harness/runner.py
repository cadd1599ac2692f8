"""Monte Carlo and analytical curve generation.

Trial ``i`` draws from the stream ``SeedSequence(base_seed, spawn_key=(i,))``,
split into one child for the snapshots and one for the power-method start
vectors. The same trial streams are reused at every sweep point and P,
so curves share their random numbers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import partial
from pathlib import Path

import numpy as np

from ..array_model import eig_hermitian, generate_snapshots, sample_covariance, true_covariance
from ..dpm import (
    dpm_ac_budget,
    dpm_centralized_emulation,
    dpm_eigendecomposition,
    initial_vectors,
    selection_matrix,
)
from ..esprit import build_selection_pair, centralized_esprit, desprit, extract_doas, psi_from_subspace
from ..esprit_mse import EspritAnalysisContext, armse_desprit
from ..exceptions import NumericalRegimeError
from ..network import build_metropolis_weights, check_convergence
from ..perf_analysis import AnalysisInputs, armse_dpm
from .config import ExperimentConfig
from .metrics import doa_se, rmse, subspace_se

CSV_FIELDS = (
    "sweep_axis",
    "sweep_value",
    "P",
    "curve_kind",
    "value",
    "trials_used",
    "ac_instances",
    "ac_iterations_total",
)


@dataclass(frozen=True)
class CurvePoint:
    sweep_axis: str
    sweep_value: float
    P: int | None
    curve_kind: str
    value: float
    trials_used: int
    ac_instances: int = 0
    ac_iterations_total: int = 0

    def __post_init__(self):
        if not self.value >= 0:
            raise NumericalRegimeError(f"{self.curve_kind} at {self.sweep_value}: value {self.value} is not >= 0")


def trial_streams(base_seed: int, trial: int):
    """(snapshot stream, start-vector stream) for one trial."""
    snap, init = np.random.SeedSequence(base_seed, spawn_key=(trial,)).spawn(2)
    return snap, init


@dataclass(frozen=True)
class PointSetup:
    """Everything a trial at one sweep point needs. Picklable for worker processes."""

    cfg: ExperimentConfig
    snr_db: float
    N: int

    @property
    def L(self) -> int:
        return self.cfg.source_count


def _dpm_trial(setup: PointSetup, trial: int) -> np.ndarray:
    cfg = setup.cfg
    geom, topo = cfg.geometry, cfg.topology
    W = build_metropolis_weights(topo)
    scen = cfg.scenario(setup.snr_db)
    U = eig_hermitian(true_covariance(geom, scen), warn_degenerate=False).vectors[:, : setup.L]
    snap_ss, init_ss = trial_streams(cfg.base_seed, trial)
    snaps = generate_snapshots(geom, scen, setup.N, snap_ss)
    V0 = initial_vectors(geom.sensor_total, setup.L, init_ss)
    Rh = sample_covariance(snaps)
    T = selection_matrix(topo, geom)
    out = np.full(len(cfg.p_values), np.nan)
    for i, P in enumerate(cfg.p_values):
        try:
            if cfg.mode == "full":
                V = dpm_eigendecomposition(snaps, topo, W, setup.L, replace(cfg.dpm, P=P), init=V0).assembled
            else:
                V = dpm_centralized_emulation(Rh, T, W, setup.L, P, cfg.dpm.Q, None, init=V0)
            out[i] = subspace_se(V, U)
        except NumericalRegimeError:
            pass
    return out


def _desprit_trial(setup: PointSetup, trial: int) -> np.ndarray:
    cfg = setup.cfg
    geom, topo = cfg.geometry, cfg.topology
    W = build_metropolis_weights(topo)
    scen = cfg.scenario(setup.snr_db)
    snap_ss, init_ss = trial_streams(cfg.base_seed, trial)
    snaps = generate_snapshots(geom, scen, setup.N, snap_ss)
    V0 = initial_vectors(geom.sensor_total, setup.L, init_ss)
    Rh = sample_covariance(snaps)
    T = selection_matrix(topo, geom)
    sel = build_selection_pair(geom)
    out = np.full(len(cfg.p_values) + 1, np.nan)
    for i, P in enumerate(cfg.p_values):
        try:
            if cfg.mode == "full" or cfg.desprit_mode == "full":
                est = desprit(snaps, topo, W, geom, setup.L, replace(cfg.dpm, P=P), cfg.desprit_mode, cfg.mode, init=V0)[0]
            else:
                V = dpm_centralized_emulation(Rh, T, W, setup.L, P, cfg.dpm.Q, None, init=V0)
                est = extract_doas(psi_from_subspace(V, sel), geom.d)
            if est.valid.all():
                out[i] = doa_se(est.doas_deg, cfg.doas_deg)
        except NumericalRegimeError:
            pass
    try:
        est = centralized_esprit(Rh, geom, setup.L)
        if est.valid.all():
            out[-1] = doa_se(est.doas_deg, cfg.doas_deg)
    except NumericalRegimeError:
        pass
    return out


def _run_trials(fn, setup: PointSetup, trials: int, workers: int) -> np.ndarray:
    f = partial(fn, setup)
    if workers <= 1:
        return np.array([f(t) for t in range(trials)])
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return np.array(list(ex.map(f, range(trials), chunksize=max(1, trials // (4 * workers)))))


def _aggregate(se: np.ndarray) -> tuple[float, int]:
    ok = se[np.isfinite(se)]
    if ok.size == 0:
        raise NumericalRegimeError("every trial failed at this point")
    return rmse(ok), int(ok.size)


def rmse_dpm_mc(cfg: ExperimentConfig, sweep_value) -> list[CurvePoint]:
    """Monte Carlo eigenvector RMSE at one sweep point, one point per P."""
    snr, N = cfg.point(sweep_value)
    se = _run_trials(_dpm_trial, PointSetup(cfg, snr, N), cfg.trials, cfg.workers)
    pts = []
    for i, P in enumerate(cfg.p_values):
        val, used = _aggregate(se[:, i])
        acc = dpm_ac_budget(N, cfg.source_count, replace(cfg.dpm, P=P))
        pts.append(CurvePoint(cfg.sweep_axis, sweep_value, P, "mc_dpm", val, used, **acc))
    return pts


def rmse_desprit_mc(cfg: ExperimentConfig, sweep_value, centralized: bool = True) -> list[CurvePoint]:
    """Monte Carlo DOA RMSE in degrees at one sweep point: d-ESPRIT per P, then centralized ESPRIT."""
    snr, N = cfg.point(sweep_value)
    se = _run_trials(_desprit_trial, PointSetup(cfg, snr, N), cfg.trials, cfg.workers)
    L = cfg.source_count
    pts = []
    for i, P in enumerate(cfg.p_values):
        val, used = _aggregate(se[:, i])
        acc = dpm_ac_budget(N, L, replace(cfg.dpm, P=P))
        acc["ac_instances"] += 2 * L * L
        acc["ac_iterations_total"] += 2 * L * L * cfg.dpm.P3
        pts.append(CurvePoint(cfg.sweep_axis, sweep_value, P, "mc_desprit", val, used, **acc))
    if centralized:
        val, used = _aggregate(se[:, -1])
        pts.append(CurvePoint(cfg.sweep_axis, sweep_value, None, "mc_centralized_esprit", val, used))
    return pts


def analytical_points(cfg: ExperimentConfig, sweep_value) -> list[CurvePoint]:
    snr, N = cfg.point(sweep_value)
    geom, topo = cfg.geometry, cfg.topology
    W = build_metropolis_weights(topo)
    T = selection_matrix(topo, geom)
    R = true_covariance(geom, cfg.scenario(snr))
    L = cfg.source_count
    pts = []
    want = set(cfg.curves)
    if "analytical_dpm" in want:
        for P in cfg.p_values:
            v = armse_dpm(AnalysisInputs.from_covariance(R, W, T, N, P), L)
            pts.append(CurvePoint(cfg.sweep_axis, sweep_value, P, "analytical_dpm", v, 0))
    if "analytical_desprit" in want:
        for P in cfg.p_values:
            ctx = EspritAnalysisContext.build(AnalysisInputs.from_covariance(R, W, T, N, P), geom, L, cfg.doas_deg)
            pts.append(CurvePoint(cfg.sweep_axis, sweep_value, P, "analytical_desprit", armse_desprit(ctx), 0))
    if "analytical_centralized_esprit" in want:
        ctx = EspritAnalysisContext.build(AnalysisInputs.from_covariance(R, W, T, N, None), geom, L, cfg.doas_deg)
        pts.append(CurvePoint(cfg.sweep_axis, sweep_value, None, "analytical_centralized_esprit", armse_desprit(ctx), 0))
    return pts


def run_experiment(cfg: ExperimentConfig, progress=None) -> list[CurvePoint]:
    """All requested curves over the sweep, MC points first at each sweep value."""
    report = check_convergence(build_metropolis_weights(cfg.topology))
    if not report.converges:
        raise NumericalRegimeError(f"consensus weights do not converge ({report.failure_mode})")
    want = set(cfg.curves)
    order = {k: i for i, k in enumerate(("mc_dpm", "analytical_dpm", "mc_desprit", "analytical_desprit",
                                         "mc_centralized_esprit", "analytical_centralized_esprit"))}
    points = []
    for j, sv in enumerate(cfg.sweep_values):
        pts = []
        if "mc_dpm" in want:
            pts += rmse_dpm_mc(cfg, sv)
        if want & {"mc_desprit", "mc_centralized_esprit"}:
            mc = rmse_desprit_mc(cfg, sv)
            pts += [p for p in mc if p.curve_kind in want]
        pts += analytical_points(cfg, sv)
        pts.sort(key=lambda p: (order[p.curve_kind], -1 if p.P is None else p.P))
        points += pts
        if progress:
            progress(j + 1, len(cfg.sweep_values))
    return points


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return repr(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)
    return str(int(x)) if isinstance(x, np.integer) else str(x)


def to_csv(points: list[CurvePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for p in points:
        w.writerow([_fmt(getattr(p, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def manifest(cfg: ExperimentConfig, points: list[CurvePoint]) -> dict:
    return {
        "name": cfg.name,
        "config_hash": cfg.config_hash(),
        "config": cfg.raw,
        "base_seed": cfg.base_seed,
        "trials": cfg.trials,
        "trial_seed_rule": "SeedSequence(base_seed, spawn_key=(trial,)).spawn(2) -> (snapshots, start vectors)",
        "mode": cfg.mode,
        "desprit_mode": cfg.desprit_mode,
        "numpy_version": np.__version__,
        "points": [
            {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in asdict(p).items()} for p in points
        ],
    }


def write_outputs(cfg: ExperimentConfig, points: list[CurvePoint], stem=None, formats=None) -> list[Path]:
    stem = Path(stem if stem is not None else cfg.output_path or cfg.name)
    written = []
    for f in formats or cfg.formats:
        path = stem.with_name(stem.name + "." + f)
        path.parent.mkdir(parents=True, exist_ok=True)
        if f == "csv":
            path.write_text(to_csv(points))
        else:
            path.write_text(json.dumps(manifest(cfg, points), indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written
