"""Command-line entry point: ``desprit run|preset|validate|spectrum``."""

import argparse
import sys

import numpy as np

from ..exceptions import ConfigError, NumericalRegimeError
from ..network import build_metropolis_weights, check_convergence
from .config import PRESETS, load_config, load_preset
from .runner import run_experiment, to_csv, write_outputs

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _run_flags(p):
    p.add_argument("--trials", type=int, help="override the number of Monte Carlo trials")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--out", help="output path stem; '.csv' / '.json' are appended. '-' writes CSV to stdout")
    p.add_argument("--mode", choices=["full", "emulated"], help="message-level or equivalent-covariance d-PM")
    p.add_argument("--format", choices=["csv", "json"], help="write only this format")
    p.add_argument("--workers", type=int, help="worker processes for Monte Carlo trials")
    p.add_argument("-q", "--quiet", action="store_true", help="no progress output")


def build_parser():
    ap = argparse.ArgumentParser(prog="desprit", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run the experiment described by a config file")
    p.add_argument("config")
    _run_flags(p)
    p = sub.add_parser("preset", help="run one of the shipped figure presets")
    p.add_argument("name", choices=PRESETS)
    _run_flags(p)
    p = sub.add_parser("validate", help="check a config file and print a summary")
    p.add_argument("config")
    p = sub.add_parser("spectrum", help="print the consensus weight spectrum and spectral gap")
    p.add_argument("config")
    return ap


def _execute(cfg, args):
    cfg = cfg.with_overrides(
        trials=args.trials,
        seed=args.seed,
        mode=args.mode,
        workers=args.workers,
        formats=[args.format] if args.format else None,
    )

    def progress(i, n):
        print(f"[{cfg.name}] sweep point {i}/{n}", file=sys.stderr)

    points = run_experiment(cfg, None if args.quiet else progress)
    if args.out == "-":
        sys.stdout.write(to_csv(points))
        return
    for path in write_outputs(cfg, points, stem=args.out):
        print(path)


def _summary(cfg):
    sv = cfg.sweep_values
    return "\n".join(
        [
            f"name: {cfg.name}",
            f"nodes: {cfg.topology.node_count}, sensors: {cfg.geometry.sensor_total}, sources: {cfg.source_count}",
            f"sweep: {cfg.sweep_axis} {sv[0]:g}..{sv[-1]:g} ({len(sv)} points)",
            f"P values: {list(cfg.p_values)}",
            f"curves: {', '.join(cfg.curves)}",
            f"trials: {cfg.trials}, base seed: {cfg.base_seed}, mode: {cfg.mode}",
            f"config hash: {cfg.config_hash()}",
        ]
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "preset":
            _execute(load_preset(args.name), args)
        elif args.command == "run":
            _execute(load_config(args.config), args)
        elif args.command == "validate":
            print(_summary(load_config(args.config)))
        elif args.command == "spectrum":
            cfg = load_config(args.config)
            W = build_metropolis_weights(cfg.topology)
            rep = check_convergence(W)
            print("alphas: " + " ".join(f"{a:.6f}" for a in W.spectrum.alphas))
            print(f"spectral gap: {rep.spectral_gap:.6f}")
            print(f"second largest |alpha|: {np.abs(W.spectrum.alphas[1:]).max():.6f}")
            print("converges: yes" if rep.converges else f"converges: no ({rep.failure_mode})")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalRegimeError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
