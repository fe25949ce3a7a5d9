"""Experiment configuration (JSON) and CSV/JSON emission.

Every key is optional; missing keys take the defaults below. Validation
collects all problems before raising, naming each field by its dotted path.
"""

from __future__ import annotations

import copy
import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import presets
from .field import BC, BoundarySpec, SpaceTimeField, SpatialMesh
from .hysteresis import PlayConfig, TimeGrid
from .solver import SolverParams
from .verification import DEFAULT_EPSILON_GRID, DEFAULT_LADDER

DEFAULTS = {
    "mesh": {"X": 1.0, "n_x": 129},
    "time": {"T": 1.0, "n_t": 257},
    "boundary": {"left": "dirichlet", "right": "dirichlet"},
    "play": {"r": 0.4, "w_init": 0.0, "enabled": True},
    "solver": {"fp_tol": 1e-10, "fp_max_iter": 100, "dt_guard": True},
    "norms": {"epsilon": 0.5, "epsilon_grid": list(DEFAULT_EPSILON_GRID)},
    "problem": {
        "u_preset": "desk",
        "u_file": None,
        "y0_preset": "neg_sine",
        "h_preset": "desk",
        "lambda_ladder": list(DEFAULT_LADDER),
    },
    "estimates": {"T_grid": [0.25, 0.5, 1.0, 2.0], "f_value": 1.0, "r": 0.05},
    "newton": {"perturbation": 0.5, "perturbation_preset": "desk", "tol": 1e-8, "max_iter": 10},
    "max_principle": {"samples": 100},
    "seed": 0,
}


class ConfigError(Exception):
    pass


class ConfigFileMissing(ConfigError):
    pass


class ConfigSyntaxError(ConfigError):
    pass


class ConfigValidationError(ConfigError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid configuration: " + "; ".join(errors))


@dataclass
class ExperimentConfig:
    raw: dict
    base_dir: Path

    def section(self, name):
        return self.raw[name]

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def mesh(self) -> SpatialMesh:
        return SpatialMesh(float(self.raw["mesh"]["X"]), int(self.raw["mesh"]["n_x"]))

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(float(self.raw["time"]["T"]), int(self.raw["time"]["n_t"]))

    @property
    def boundary(self) -> BoundarySpec:
        b = self.raw["boundary"]
        return BoundarySpec(b["left"], b["right"])

    @property
    def play(self) -> PlayConfig | None:
        p = self.raw["play"]
        return PlayConfig(float(p["r"]), float(p["w_init"])) if p["enabled"] else None

    @property
    def solver(self) -> SolverParams:
        s = self.raw["solver"]
        return SolverParams(float(s["fp_tol"]), int(s["fp_max_iter"]), bool(s["dt_guard"]))

    @property
    def epsilon(self) -> float:
        return float(self.raw["norms"]["epsilon"])

    def control(self) -> SpaceTimeField:
        prob = self.raw["problem"]
        if prob["u_file"]:
            path = Path(prob["u_file"])
            if not path.is_absolute():
                path = self.base_dir / path
            return read_field_csv(path, self.mesh, self.grid)
        return presets.make_field(prob["u_preset"], self.mesh, self.grid, self.seed, "control")

    def direction(self) -> SpaceTimeField:
        return presets.make_field(self.raw["problem"]["h_preset"], self.mesh, self.grid, self.seed)

    def initial_state(self) -> np.ndarray:
        return presets.make_state(
            self.raw["problem"]["y0_preset"], self.mesh,
            self.boundary.dirichlet_mask(self.mesh.n_x), self.seed,
        )


def _merge(defaults, given, path, errors):
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            errors.append(f"{where}: unknown key")
        elif isinstance(defaults[key], dict):
            if isinstance(value, dict):
                out[key] = _merge(defaults[key], value, where, errors)
            else:
                errors.append(f"{where}: expected an object")
        else:
            out[key] = value
    return out


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def validate(raw: dict) -> list[str]:
    errors = []

    def need(ok, where, msg):
        if not ok:
            errors.append(f"{where}: {msg}")

    m, t, p, s = raw["mesh"], raw["time"], raw["play"], raw["solver"]
    need(_is_num(m["X"]) and m["X"] > 0, "mesh.X", "must be a positive number")
    need(_is_int(m["n_x"]) and m["n_x"] >= 3, "mesh.n_x", "must be an integer >= 3")
    need(_is_num(t["T"]) and t["T"] > 0, "time.T", "must be a positive number")
    need(_is_int(t["n_t"]) and t["n_t"] >= 2, "time.n_t", "must be an integer >= 2")
    sides = [b.value for b in BC]
    bsides = (raw["boundary"]["left"], raw["boundary"]["right"])
    for name, side in zip(("left", "right"), bsides):
        need(side in sides, f"boundary.{name}", f"must be one of {sides}")
    if all(side in sides for side in bsides):
        need("dirichlet" in bsides, "boundary", "at least one side must be dirichlet")
    need(_is_num(p["r"]) and p["r"] > 0, "play.r", "must be a positive number")
    need(_is_num(p["w_init"]), "play.w_init", "must be a finite number")
    need(isinstance(p["enabled"], bool), "play.enabled", "must be true or false")
    need(_is_num(s["fp_tol"]) and s["fp_tol"] > 0, "solver.fp_tol", "must be a positive number")
    need(_is_int(s["fp_max_iter"]) and s["fp_max_iter"] >= 1, "solver.fp_max_iter",
         "must be an integer >= 1")
    need(isinstance(s["dt_guard"], bool), "solver.dt_guard", "must be true or false")
    eps = raw["norms"]["epsilon"]
    need(_is_num(eps) and eps > 0, "norms.epsilon", "must be a positive number")
    grid = raw["norms"]["epsilon_grid"]
    need(isinstance(grid, list) and all(_is_num(v) and v > 0 for v in grid),
         "norms.epsilon_grid", "must be a list of positive numbers")

    prob = raw["problem"]
    if prob["u_file"] is None:
        need(isinstance(prob["u_preset"], str) and presets.is_field_preset(prob["u_preset"], "control"),
             "problem.u_preset",
             f"unknown preset; available: {presets.available_field_presets('control')}")
    else:
        need(isinstance(prob["u_file"], str), "problem.u_file", "must be a path string")
    need(isinstance(prob["h_preset"], str) and presets.is_field_preset(prob["h_preset"]),
         "problem.h_preset", f"unknown preset; available: {presets.available_field_presets()}")
    need(prob["y0_preset"] in presets.STATE_PRESETS, "problem.y0_preset",
         f"unknown preset; available: {list(presets.STATE_PRESETS)}")
    lad = prob["lambda_ladder"]
    need(
        isinstance(lad, list) and len(lad) >= 1 and all(_is_num(v) and v > 0 for v in lad)
        and all(b < a for a, b in zip(lad, lad[1:])),
        "problem.lambda_ladder", "must be a nonempty strictly decreasing list of positives",
    )
    est = raw["estimates"]
    need(isinstance(est["T_grid"], list) and est["T_grid"] and all(_is_num(v) and v > 0 for v in est["T_grid"]),
         "estimates.T_grid", "must be a nonempty list of positive numbers")
    need(_is_num(est["f_value"]), "estimates.f_value", "must be a finite number")
    need(_is_num(est["r"]) and est["r"] > 0, "estimates.r", "must be a positive number")
    nw = raw["newton"]
    need(_is_num(nw["perturbation"]), "newton.perturbation", "must be a finite number")
    need(isinstance(nw["perturbation_preset"], str) and presets.is_field_preset(nw["perturbation_preset"]),
         "newton.perturbation_preset",
         f"unknown preset; available: {presets.available_field_presets()}")
    need(_is_num(nw["tol"]) and nw["tol"] > 0, "newton.tol", "must be a positive number")
    need(_is_int(nw["max_iter"]) and nw["max_iter"] >= 1, "newton.max_iter", "must be an integer >= 1")
    mp = raw["max_principle"]["samples"]
    need(_is_int(mp) and mp >= 1, "max_principle.samples", "must be an integer >= 1")
    need(_is_int(raw["seed"]) and raw["seed"] >= 0, "seed", "must be a nonnegative integer")
    return errors


def build_config(given: dict | None = None, base_dir: Path | str = ".") -> ExperimentConfig:
    errors = []
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigValidationError(["<root>: expected a JSON object"])
    raw = _merge(DEFAULTS, given, "", errors)
    if not errors:
        errors = validate(raw)
    if errors:
        raise ConfigValidationError(errors)
    return ExperimentConfig(raw, Path(base_dir))


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigFileMissing(f"config file not found: {path}")
    try:
        given = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(f"{path}: malformed JSON: {exc}") from exc
    return build_config(given, path.parent)


# --------------------------------------------------------------------------
# output


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_field_csv(path, field: SpaceTimeField):
    """Header ``x,t,value``, rows ordered by time node then space node."""
    x, t = field.mesh.nodes, field.grid.nodes
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("x,t,value\n")
        for k in range(field.grid.n_t):
            tk = fmt(t[k])
            col = field.values[:, k]
            fh.writelines(f"{fmt(x[i])},{tk},{fmt(col[i])}\n" for i in range(field.mesh.n_x))


def read_field_csv(path, mesh: SpatialMesh, grid: TimeGrid) -> SpaceTimeField:
    path = Path(path)
    if not path.is_file():
        raise ConfigFileMissing(f"control grid file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "t", "value"]:
            raise ConfigSyntaxError(f"{path}: expected header x,t,value")
        values = [float(row[2]) for row in reader if row]
    n = mesh.n_x * grid.n_t
    if len(values) != n:
        raise ConfigValidationError(
            [f"problem.u_file: {len(values)} values, mesh and time grid need {n}"]
        )
    return SpaceTimeField(mesh, grid, np.array(values).reshape(grid.n_t, mesh.n_x).T)


def write_rows_csv(path, rows):
    rows = list(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow([fmt(v) for v in row.values()])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_summary(path, summary: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
