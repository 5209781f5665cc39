"""Run configuration: a single JSON file describing model, state and runs.

Curves are given either as a constant (number / vector / matrix, extended
over the whole horizon) or in full form as
{"breakpoints": [...], "values": [...], "interpolation": "piecewise-linear"}.
The resolved configuration dictionary is hashed (sha256 over canonical JSON)
and the hash is stamped into every output file, so identical configs are
identifiable and reruns byte-comparable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .curves import CoefficientCurve
from .errors import ConfigError
from .hjbi import GridSpec
from .model import MarketModel, StatePoint
from .montecarlo import SimConfig
from .restricted import GammaSet

DEFAULT_NODES = 2048
DEFAULT_ETA_OFFSETS = (-0.2, -0.1, 0.05, 0.1, 0.2)
DEFAULT_PI_OFFSETS = (-0.2, -0.1, 0.05, 0.1, 0.2)


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline command needs, already parsed and validated."""

    model: MarketModel
    initial_state: StatePoint
    quadrature_nodes: int
    robust: bool
    sim: SimConfig
    eta_offsets: tuple
    pi_offsets: tuple
    gap_antithetic: bool
    dump_paths: bool
    gamma_set: GammaSet | None
    grid: GridSpec
    isaacs_eta_points: int
    isaacs_pi_points: int
    output_dir: str
    config_hash: str


def _curve_from_spec(name, spec, horizon, kind) -> CoefficientCurve:
    if isinstance(spec, dict):
        try:
            return CoefficientCurve(
                np.asarray(spec["breakpoints"], dtype=float),
                np.asarray(spec["values"], dtype=float),
                spec.get("interpolation", "piecewise-linear"))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"model.{name}: {exc}") from exc
    try:
        value = np.asarray(spec, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model.{name}: not a number/array: {spec!r}") from exc
    want = {"scalar": 0, "vector": 1, "matrix": 2}[kind]
    if value.ndim != want:
        raise ConfigError(
            f"model.{name}: expected a constant {kind} (ndim {want}), "
            f"got shape {value.shape}")
    return CoefficientCurve.constant(value, horizon)


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required key {where}.{key}")
    return section[key]


def parse_model(section: dict) -> MarketModel:
    horizon = float(_require(section, "horizon", "model"))
    return MarketModel(
        n=int(_require(section, "n", "model")),
        horizon=horizon,
        gamma=float(_require(section, "gamma", "model")),
        kappa=_curve_from_spec("kappa", _require(section, "kappa", "model"),
                               horizon, "scalar"),
        b=_curve_from_spec("b", _require(section, "b", "model"),
                           horizon, "scalar"),
        lam=_curve_from_spec("lambda", _require(section, "lambda", "model"),
                             horizon, "vector"),
        a=_curve_from_spec("a", _require(section, "a", "model"),
                           horizon, "vector"),
        sigma=_curve_from_spec("sigma", _require(section, "sigma", "model"),
                               horizon, "matrix"),
    )


def parse_gamma_set(section: dict | None) -> GammaSet | None:
    if section is None:
        return None
    shape = _require(section, "shape", "gamma_set")
    if shape == "box":
        return GammaSet.box(_require(section, "lo", "gamma_set"),
                            _require(section, "hi", "gamma_set"))
    if shape == "ball":
        return GammaSet.ball(_require(section, "center", "gamma_set"),
                             float(_require(section, "radius", "gamma_set")))
    raise ConfigError(f"gamma_set.shape must be 'box' or 'ball', got {shape!r}")


def config_hash(resolved: dict) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def load_run_config(path: str, overrides: dict | None = None) -> RunConfig:
    """Parse, apply command-line overrides, validate, and hash a config file.

    Raises ConfigError for structural problems; model-invariant violations
    are raised by MarketModel.require_valid at the call sites (the CLI maps
    both to exit code 2).
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "paths":
            raw.setdefault("sim", {})["paths"] = int(value)
        elif key == "seed":
            raw.setdefault("sim", {})["seed"] = int(value)
        elif key == "nodes":
            raw["quadrature_nodes"] = int(value)
        elif key == "output":
            raw["output_dir"] = str(value)

    model = parse_model(_require(raw, "model", "<root>"))

    state = raw.get("initial_state", {})
    try:
        initial_state = StatePoint(x=float(state.get("x", 1.0)),
                                   r=float(state.get("r", 0.0)),
                                   t=float(state.get("t", 0.0)))
    except ValueError as exc:
        raise ConfigError(f"initial_state: {exc}") from exc

    sim_raw = raw.get("sim", {})
    try:
        sim = SimConfig(paths=int(sim_raw.get("paths", 100_000)),
                        steps=int(sim_raw.get("steps", 128)),
                        seed=int(sim_raw.get("seed", 0)),
                        antithetic=bool(sim_raw.get("antithetic", False)),
                        budget=int(sim_raw.get("budget", 10**9)))
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from exc

    grids = raw.get("grids", {})
    grid = GridSpec(
        t_points=int(grids.get("t_points", 21)),
        r_points=int(grids.get("r_points", 21)),
        pi_points=int(grids.get("pi_points", 21)),
        eta_points=int(grids.get("eta_points", 21)),
        r_lo=float(grids.get("r_lo", -0.05)),
        r_hi=float(grids.get("r_hi", 0.15)),
        pi_halfwidth=float(grids.get("pi_halfwidth", 5.0)),
        eta_halfwidth=float(grids.get("eta_halfwidth", 5.0)),
    )

    return RunConfig(
        model=model,
        initial_state=initial_state,
        quadrature_nodes=int(raw.get("quadrature_nodes", DEFAULT_NODES)),
        robust=bool(raw.get("robust", True)),
        sim=sim,
        eta_offsets=tuple(sim_raw.get("eta_offsets", DEFAULT_ETA_OFFSETS)),
        pi_offsets=tuple(sim_raw.get("pi_offsets", DEFAULT_PI_OFFSETS)),
        gap_antithetic=bool(sim_raw.get("gap_antithetic", True)),
        dump_paths=bool(sim_raw.get("dump_paths", False)),
        gamma_set=parse_gamma_set(raw.get("gamma_set")),
        grid=grid,
        isaacs_eta_points=int(grids.get("isaacs_eta_points", 101)),
        isaacs_pi_points=int(grids.get("isaacs_pi_points", 101)),
        output_dir=str(raw.get("output_dir", "out")),
        config_hash=config_hash(raw),
    )
