"""Acceptance checks, one PASS/FAIL line each.

The lines are collected in ``RESULTS`` and printed as a block at the end of
the pytest run. Also runnable as ``python3 tests/test_acceptance.py``.
"""

import copy
import functools
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from desprit.array_model import SourceScenario, eig_hermitian, generate_snapshots, sample_covariance, true_covariance
from desprit.dpm import DpmConfig, dpm_centralized_emulation, dpm_eigendecomposition, equivalent_covariance, selection_matrix
from desprit.esprit_mse import EspritAnalysisContext, armse_desprit
from desprit.harness.config import load_preset, parse_config
from desprit.harness.metrics import align_columns, align_eigenvector
from desprit.harness.runner import run_experiment
from desprit.network import build_metropolis_weights
from desprit.perf_analysis import AnalysisInputs, armse_dpm, eigvec_second_order, first_order_error
from desprit.scenarios import REFERENCE_DOAS_DEG, reference_scenario, six_node_topology, six_subarray_geometry

TOPO = six_node_topology()
W = build_metropolis_weights(TOPO)
GEOM = six_subarray_geometry()
T = selection_matrix(TOPO, GEOM)
RESULTS = []


def report(num, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {num}: {detail}"
    RESULTS.append((num, line))
    print(line)
    assert ok, line


def within(x, target, rel):
    return abs(x - target) <= rel * target


def inputs(snr, N, P, factor):
    R = true_covariance(GEOM, reference_scenario(snr, factor))
    return AnalysisInputs.from_covariance(R, W, T, N, P)


def mc(preset, **kw):
    return _mc(preset, json.dumps(kw, sort_keys=True))


@functools.lru_cache(maxsize=None)
def _mc(preset, kw_json):
    raw = copy.deepcopy(load_preset(preset).raw)
    raw.update(json.loads(kw_json))
    return {(p.sweep_value, p.P, p.curve_kind): p.value for p in run_experiment(parse_config(raw))}


@pytest.mark.parametrize("P", [0, 5, 10, 30])
def test_criterion_1_message_level_matches_equivalent_covariance(P):
    worst = 0.0
    for draw in range(20):
        snaps = generate_snapshots(GEOM, reference_scenario(10), 100, 1000 + draw)
        cfg = DpmConfig(P=P, P1=500, P2=500, Q=100, seed=draw)
        V = dpm_eigendecomposition(snaps, TOPO, W, 3, cfg).assembled
        U = eig_hermitian(equivalent_covariance(sample_covariance(snaps), T, W, P), warn_degenerate=False).vectors[:, :3]
        worst = max(worst, np.linalg.norm(align_columns(V, U) - U))
    report(1, worst <= 1e-4, f"P={P} worst subspace error over 20 draws {worst:.3e} (limit 1e-4)")


@pytest.mark.parametrize("P,target", [(10, 0.352), (20, 0.154), (30, 0.139)])
def test_criterion_2_analytical_dpm(P, target):
    v = armse_dpm(inputs(10, 100, P, 20), 3)
    report(2, within(v, target, 0.03), f"P={P} armse_dpm {v:.4f} vs {target} (3%)")


def test_criterion_2_high_snr_floor():
    vals = [armse_dpm(inputs(snr, 100, 10, 20), 3) for snr in (40, 50, 60, 70)]
    ok = all(within(v, 0.341, 0.03) for v in vals)
    report(2, ok, f"P=10 floor at 40..70 dB {', '.join(f'{v:.4f}' for v in vals)} vs 0.341 (3%)")


@pytest.mark.parametrize("P,target", [(10, 0.366), (20, 0.151), (30, 0.135)])
def test_criterion_3_monte_carlo_dpm(P, target):
    v = mc("fig2", sweep={"snr_db": [10]}, curves=["mc_dpm"], trials=200)[(10.0, P, "mc_dpm")]
    report(3, within(v, target, 0.15), f"P={P} MC RMSE {v:.4f} vs {target} (15%)")


def test_criterion_4_inconsistency_floor():
    res = mc("fig3", sweep={"n_samples": [400, 1000]}, curves=["mc_dpm"], p_values=[10], trials=200)
    a, b = res[(400, 10, "mc_dpm")], res[(1000, 10, "mc_dpm")]
    lo, hi = 0.33 * 0.85, 0.34 * 1.15
    ok = abs(a - b) / b < 0.05 and lo <= a <= hi and lo <= b <= hi
    report(4, ok, f"MC RMSE N=400 {a:.4f}, N=1000 {b:.4f} (differ < 5%, within [{lo:.3f}, {hi:.3f}])")


def test_criterion_4_analytical():
    v = armse_dpm(inputs(10, 1000, 10, 20), 3)
    report(4, within(v, 0.327, 0.03), f"analytical N=1000 {v:.4f} vs 0.327 (3%)")


@pytest.mark.parametrize("snr,N,P,target", [(20, 100, 30, 0.140), (50, 100, 10, 1.390), (10, 1000, 30, 0.141)])
def test_criterion_5_analytical_desprit(snr, N, P, target):
    ctx = EspritAnalysisContext.build(inputs(snr, N, P, 10), GEOM, 3, REFERENCE_DOAS_DEG)
    v = armse_desprit(ctx)
    report(5, within(v, target, 0.03), f"SNR={snr} N={N} P={P} armse_desprit {v:.4f} deg vs {target} (3%)")


@pytest.mark.parametrize("N,target", [(100, 0.363), (1000, 0.153)])
def test_criterion_6_monte_carlo_desprit(N, target):
    res = mc("fig5", sweep={"n_samples": [N]}, curves=["mc_desprit"], p_values=[30], trials=200)
    v = res[(N, 30, "mc_desprit")]
    report(6, within(v, target, 0.15), f"N={N} P=30 MC d-ESPRIT {v:.4f} deg vs {target} (15%)")


def test_criterion_7_centralized_analysis():
    ctx = EspritAnalysisContext.build(inputs(10, 1000, None, 10), GEOM, 3, REFERENCE_DOAS_DEG)
    v = armse_desprit(ctx)
    report(7, within(v, 0.109, 0.03), f"h=0 armse_desprit N=1000 {v:.4f} deg vs 0.109 (3%)")


def test_criterion_7_centralized_monte_carlo():
    res = mc("fig5", sweep={"n_samples": [100]}, curves=["mc_centralized_esprit"], p_values=[30], trials=200)
    v = res[(100, None, "mc_centralized_esprit")]
    report(7, within(v, 0.343, 0.15), f"MC centralized ESPRIT N=100 {v:.4f} deg vs 0.343 (15%)")


def test_criterion_8_first_order_ratio():
    rng = np.random.default_rng(8)
    ratios = []
    for _ in range(10):
        doas = np.sort(rng.choice(np.arange(-60, 61, 3), 3, replace=False)).astype(float)
        scen = SourceScenario.equal_power(doas, rng.uniform(0, 20))
        inp = AnalysisInputs.from_covariance(true_covariance(GEOM, scen), W, T, 100, int(rng.integers(5, 31)))
        D = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        D = (D + D.conj().T) / 2
        bias = equivalent_covariance(inp.R, T, W, inp.P) - inp.R
        for l in range(3):
            v = inp.eig.vectors[:, l]
            pred = first_order_error(inp, l, D)
            err = []
            for eps in (1e-4, 5e-5):
                u = eig_hermitian(inp.R + eps * (D + bias), warn_degenerate=False).vectors[:, l]
                err.append(np.linalg.norm(align_eigenvector(u, v) - v - eps * pred))
            ratios.append(err[0] / err[1])
    ok = all(3.5 <= r <= 4.5 for r in ratios)
    report(8, ok, f"error ratios over 10 scenarios x 3 vectors in [{min(ratios):.3f}, {max(ratios):.3f}] (need [3.5, 4.5])")


@pytest.mark.parametrize("P", [10, 30])
def test_criterion_9_second_order(P):
    inp = inputs(10, 100, P, 10)
    v = inp.eig.vectors[:, 0]
    acc = np.zeros((12, 12), complex)
    n = 2000
    for seed in range(n):
        Rh = sample_covariance(generate_snapshots(GEOM, reference_scenario(10), 100, seed))
        e = dpm_centralized_emulation(Rh, T, W, 1, P, 100, seed)[:, 0]
        d = align_eigenvector(e, v) - v
        acc += np.outer(d, d.conj())
    pred = eigvec_second_order(inp, 0, 0).herm
    rel = np.linalg.norm(acc / n - pred) / np.linalg.norm(pred)
    report(9, rel <= 0.15, f"P={P} relative Frobenius error {rel:.4f} (limit 0.15)")


def test_criterion_10_property_suite():
    here = Path(__file__).parent
    r = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(here), "--ignore", str(Path(__file__))],
        capture_output=True, text=True,
    )
    tail = r.stdout.strip().splitlines()[-1] if r.stdout.strip() else r.stderr.strip()[-200:]
    report(10, r.returncode == 0, f"module property and unit suites: {tail}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
