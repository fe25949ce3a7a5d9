"""Named controls, directions and initial states.

Separable shapes are written ``<space>_<time>`` with space in ``sin<m>``
(sin(m*pi*x/X)) or ``bump`` (Gaussian bump centred at X/2) and time in
``one``, ``t`` or ``osc`` (sin(2*pi*t/T)). Random presets draw from
numpy's PCG64 generator seeded with the experiment seed, so they are
reproducible across platforms.
"""

from __future__ import annotations

import re

import numpy as np

from .field import SpaceTimeField, SpatialMesh
from .hysteresis import TimeGrid

_SHAPE = re.compile(r"^(sin(\d+)|bump)_(one|t|osc)$")

FIELD_ALIASES = {
    "desk": ("sin2_t", 1.0),  # h = sin(2 pi x) t
}
CONTROL_ALIASES = {
    "desk": ("sin1_one", 2.0),  # u = 2 sin(pi x)
    "frozen": ("sin1_one", 0.1),
}
STATE_PRESETS = ("zero", "sine", "neg_sine", "random")


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _space_profile(name: str, mesh: SpatialMesh, m: str | None) -> np.ndarray:
    x = mesh.nodes / mesh.X
    if name == "bump":
        return np.exp(-(((x - 0.5) / 0.15) ** 2))
    return np.sin(int(m) * np.pi * x)


def _time_profile(name: str, grid: TimeGrid) -> np.ndarray:
    t = grid.nodes
    if name == "one":
        return np.ones_like(t)
    if name == "t":
        return t
    return np.sin(2 * np.pi * t / grid.T)


def _separable(shape: str, mesh: SpatialMesh, grid: TimeGrid) -> np.ndarray:
    match = _SHAPE.match(shape)
    a = _space_profile(match.group(1), mesh, match.group(2))
    b = _time_profile(match.group(3), grid)
    return np.outer(a, b)


def is_field_preset(name: str, kind: str = "direction") -> bool:
    aliases = CONTROL_ALIASES if kind == "control" else FIELD_ALIASES
    return name in aliases or name in ("zero", "random") or bool(_SHAPE.match(name))


def available_field_presets(kind: str = "direction") -> list[str]:
    aliases = CONTROL_ALIASES if kind == "control" else FIELD_ALIASES
    return sorted(aliases) + ["zero", "random", "sin<m>_{one,t,osc}", "bump_{one,t,osc}"]


def make_field(
    name: str, mesh: SpatialMesh, grid: TimeGrid, seed: int = 0, kind: str = "direction"
) -> SpaceTimeField:
    aliases = CONTROL_ALIASES if kind == "control" else FIELD_ALIASES
    scale = 1.0
    if name in aliases:
        name, scale = aliases[name]
    if name == "zero":
        values = np.zeros((mesh.n_x, grid.n_t))
    elif name == "random":
        values = rng(seed).uniform(-1.0, 1.0, size=(mesh.n_x, grid.n_t))
    elif _SHAPE.match(name):
        values = _separable(name, mesh, grid)
    else:
        raise ValueError(
            f"unknown preset {name!r}; available: {available_field_presets(kind)}"
        )
    return SpaceTimeField(mesh, grid, scale * values)


def make_state(name: str, mesh: SpatialMesh, dirichlet: np.ndarray, seed: int = 0) -> np.ndarray:
    x = mesh.nodes / mesh.X
    if name == "zero":
        y0 = np.zeros(mesh.n_x)
    elif name == "sine":
        y0 = np.sin(np.pi * x)
    elif name == "neg_sine":
        y0 = -np.sin(np.pi * x)
    elif name == "random":
        y0 = rng(seed).uniform(0.0, 1.0, size=mesh.n_x)
    else:
        raise ValueError(f"unknown initial state {name!r}; available: {list(STATE_PRESETS)}")
    return np.where(dirichlet, 0.0, y0)
