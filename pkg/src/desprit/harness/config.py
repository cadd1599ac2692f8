"""Experiment configuration: YAML loading, validation and the preset files.

A config is a YAML mapping with these keys (see ``presets/fig2.yaml``):

    name: str
    geometry: {spacing: float, subarrays: [{position: [x, y], sensors: int}, ...]}
    topology: {index_base: 0|1, neighbors: [[int, ...], ...]}
    scenario: {doas_deg: [float, ...], noise_var: float, snr_db_factor: 10|20}
    sweep: {snr_db: list or {start, stop, step}}  or  {n_samples: ...}
    fixed: {n_samples: int}  or  {snr_db: float}
    p_values: [int, ...]
    curves: [mc_dpm, analytical_dpm, mc_desprit, analytical_desprit,
             mc_centralized_esprit, analytical_centralized_esprit]
    dpm: {P1, P2, P3, Q, seed}
    trials: int
    base_seed: int
    mode: emulated|full
    desprit_mode: a3-shortcut|full
    workers: int
    output: {path: str, formats: [csv, json]}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..array_model import ArrayGeometry, SourceScenario
from ..dpm import DpmConfig
from ..exceptions import ConfigError
from ..network import Topology

CURVE_KINDS = (
    "mc_dpm",
    "analytical_dpm",
    "mc_desprit",
    "analytical_desprit",
    "mc_centralized_esprit",
    "analytical_centralized_esprit",
)
PRESETS = ("fig2", "fig3", "fig4", "fig5")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    geometry: ArrayGeometry
    topology: Topology
    doas_deg: tuple[float, ...]
    noise_var: float
    snr_db_factor: float
    sweep_axis: str
    sweep_values: tuple
    fixed_value: float
    p_values: tuple[int, ...]
    curves: tuple[str, ...]
    dpm: DpmConfig
    trials: int
    base_seed: int
    mode: str = "emulated"
    desprit_mode: str = "a3-shortcut"
    workers: int = 1
    output_path: str | None = None
    formats: tuple[str, ...] = ("csv", "json")
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def source_count(self) -> int:
        return len(self.doas_deg)

    def point(self, sweep_value):
        """(snr_db, N) for one sweep value."""
        if self.sweep_axis == "snr_db":
            return float(sweep_value), int(self.fixed_value)
        return float(self.fixed_value), int(sweep_value)

    def scenario(self, snr_db: float) -> SourceScenario:
        return SourceScenario.equal_power(self.doas_deg, snr_db, self.noise_var, self.snr_db_factor)

    def with_overrides(self, trials=None, seed=None, mode=None, out=None, formats=None, workers=None):
        raw = json.loads(json.dumps(self.raw))
        kw = {}
        if trials is not None:
            if trials < 1:
                raise ConfigError("must be at least 1", "trials")
            kw["trials"] = raw["trials"] = int(trials)
        if seed is not None:
            kw["base_seed"] = raw["base_seed"] = int(seed)
        if mode is not None:
            if mode not in ("emulated", "full"):
                raise ConfigError("must be 'emulated' or 'full'", "mode")
            kw["mode"] = raw["mode"] = mode
        if workers is not None:
            kw["workers"] = int(workers)
        if out is not None:
            kw["output_path"] = str(out)
        if formats is not None:
            kw["formats"] = tuple(formats)
        return replace(self, raw=raw, **kw)

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _get(d, key, path, kind=None, default=...):
    if not isinstance(d, dict):
        raise ConfigError("expected a mapping", path)
    if key not in d:
        if default is ...:
            raise ConfigError("missing required field", f"{path}.{key}" if path else key)
        return default
    v = d[key]
    p = f"{path}.{key}" if path else key
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if kind is not None and (not isinstance(v, kinds) or isinstance(v, bool) and bool not in kinds):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ConfigError(f"expected {names}, got {type(v).__name__}", p)
    return v


def _number_list(v, path, integer=False):
    if isinstance(v, dict):
        for k in ("start", "stop", "step"):
            _get(v, k, path, (int, float))
        if v["step"] <= 0:
            raise ConfigError("step must be positive", f"{path}.step")
        n = int(np.floor((v["stop"] - v["start"]) / v["step"] + 1e-9)) + 1
        if n < 1:
            raise ConfigError("empty range", path)
        vals = [v["start"] + i * v["step"] for i in range(n)]
    elif isinstance(v, list) and v:
        vals = v
    else:
        raise ConfigError("expected a non-empty list or a {start, stop, step} range", path)
    out = []
    for i, x in enumerate(vals):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(f"expected a number, got {x!r}", f"{path}[{i}]")
        if integer and (x != int(x) or x < 1):
            raise ConfigError(f"expected a positive integer, got {x!r}", f"{path}[{i}]")
        out.append(int(x) if integer else float(x))
    return tuple(out)


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level")
    name = str(_get(raw, "name", "", default="experiment"))

    g = _get(raw, "geometry", "", dict)
    subs = _get(g, "subarrays", "geometry", list)
    positions, counts = [], []
    for i, s in enumerate(subs):
        p = f"geometry.subarrays[{i}]"
        pos = _get(s, "position", p, list)
        if len(pos) != 2 or not all(isinstance(x, (int, float)) for x in pos):
            raise ConfigError("expected [x, y]", f"{p}.position")
        positions.append(pos)
        counts.append(_get(s, "sensors", p, int))
    try:
        geom = ArrayGeometry.from_positions(positions, counts, float(_get(g, "spacing", "geometry", (int, float), 1.0)))
    except ValueError as e:
        raise ConfigError(str(e), "geometry") from None

    t = _get(raw, "topology", "", dict)
    nb = _get(t, "neighbors", "topology", list)
    for i, row in enumerate(nb):
        if not isinstance(row, list) or not all(isinstance(j, int) for j in row):
            raise ConfigError("expected a list of node indices", f"topology.neighbors[{i}]")
    try:
        topo = Topology.from_lists(nb, _get(t, "index_base", "topology", int, 0))
    except ValueError as e:
        raise ConfigError(str(e), "topology") from None
    if topo.node_count != geom.node_count:
        raise ConfigError(f"{topo.node_count} nodes but {geom.node_count} subarrays", "topology.neighbors")

    sc = _get(raw, "scenario", "", dict)
    doas = _number_list(_get(sc, "doas_deg", "scenario"), "scenario.doas_deg")
    noise_var = float(_get(sc, "noise_var", "scenario", (int, float), 1.0))
    factor = float(_get(sc, "snr_db_factor", "scenario", (int, float), 10))
    if factor not in (10.0, 20.0):
        raise ConfigError("must be 10 or 20", "scenario.snr_db_factor")
    try:
        SourceScenario.equal_power(doas, 0.0, noise_var)
    except ValueError as e:
        raise ConfigError(str(e), "scenario") from None
    if noise_var <= 0:
        raise ConfigError("must be positive", "scenario.noise_var")

    sw = _get(raw, "sweep", "", dict)
    if len(sw) != 1 or next(iter(sw)) not in ("snr_db", "n_samples"):
        raise ConfigError("exactly one of snr_db or n_samples is required", "sweep")
    axis = next(iter(sw))
    values = _number_list(sw[axis], f"sweep.{axis}", integer=axis == "n_samples")
    fx = _get(raw, "fixed", "", dict)
    other = "n_samples" if axis == "snr_db" else "snr_db"
    fixed = _get(fx, other, "fixed", (int, float))
    if other == "n_samples" and (fixed != int(fixed) or fixed < 1):
        raise ConfigError("expected a positive integer", "fixed.n_samples")

    pv = _number_list(_get(raw, "p_values", "", default=[10]), "p_values")
    for i, p in enumerate(pv):
        if p != int(p) or p < 0:
            raise ConfigError(f"expected a non-negative integer, got {p!r}", f"p_values[{i}]")
    pv = tuple(int(p) for p in pv)

    curves = _get(raw, "curves", "", list, list(CURVE_KINDS))
    for i, c in enumerate(curves):
        if c not in CURVE_KINDS:
            raise ConfigError(f"unknown curve kind {c!r}; choose from {', '.join(CURVE_KINDS)}", f"curves[{i}]")

    d = _get(raw, "dpm", "", dict, {})
    allowed = {"P1", "P2", "P3", "Q", "seed"}
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown field; allowed: {', '.join(sorted(allowed))}", f"dpm.{k}")
        _get(d, k, "dpm", int)
    try:
        dpm = DpmConfig(P=pv[0], **d)
    except ValueError as e:
        raise ConfigError(str(e), "dpm") from None

    trials = _get(raw, "trials", "", int, 200)
    if trials < 1:
        raise ConfigError("must be at least 1", "trials")
    mode = _get(raw, "mode", "", str, "emulated")
    if mode not in ("emulated", "full"):
        raise ConfigError("must be 'emulated' or 'full'", "mode")
    dmode = _get(raw, "desprit_mode", "", str, "a3-shortcut")
    if dmode not in ("a3-shortcut", "full"):
        raise ConfigError("must be 'a3-shortcut' or 'full'", "desprit_mode")
    workers = _get(raw, "workers", "", int, 1)
    if workers < 1:
        raise ConfigError("must be at least 1", "workers")

    out = _get(raw, "output", "", dict, {})
    formats = tuple(_get(out, "formats", "output", list, ["csv", "json"]))
    for i, f in enumerate(formats):
        if f not in ("csv", "json"):
            raise ConfigError(f"unknown format {f!r}", f"output.formats[{i}]")
    path = _get(out, "path", "output", str, None)

    known = {"name", "geometry", "topology", "scenario", "sweep", "fixed", "p_values", "curves", "dpm",
             "trials", "base_seed", "mode", "desprit_mode", "workers", "output"}
    for k in raw:
        if k not in known:
            raise ConfigError("unknown field", k)

    return ExperimentConfig(
        name=name,
        geometry=geom,
        topology=topo,
        doas_deg=doas,
        noise_var=noise_var,
        snr_db_factor=factor,
        sweep_axis=axis,
        sweep_values=values,
        fixed_value=float(fixed),
        p_values=pv,
        curves=tuple(curves),
        dpm=dpm,
        trials=trials,
        base_seed=_get(raw, "base_seed", "", int, 0),
        mode=mode,
        desprit_mode=dmode,
        workers=workers,
        output_path=path,
        formats=formats,
        raw=json.loads(json.dumps(raw)),
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", str(path)) from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}", str(path)) from None
    return parse_config(raw)


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files(__package__).joinpath("presets", f"{name}.yaml").read_text()
    return parse_config(yaml.safe_load(text))
