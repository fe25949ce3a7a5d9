"""Space-indexed lifts of the scalar play: W[y](x, t) = V[y(x, .)](t)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .hysteresis import PlayConfig, TimeGrid, derivative_memory, play_memory


class BC(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class SpatialMesh:
    """Uniform nodes x_i = i*dx on [0, X], boundary nodes included."""

    X: float
    n_x: int

    def __post_init__(self):
        if not np.isfinite(self.X) or self.X <= 0:
            raise ValueError(f"X must be a positive finite number, got {self.X!r}")
        if int(self.n_x) != self.n_x or self.n_x < 3:
            raise ValueError(f"n_x must be an integer >= 3, got {self.n_x!r}")

    @property
    def dx(self) -> float:
        return self.X / (self.n_x - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_x) * self.dx

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights; they sum to X."""
        w = np.full(self.n_x, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


@dataclass(frozen=True)
class BoundarySpec:
    left: BC = BC.DIRICHLET
    right: BC = BC.DIRICHLET

    def __post_init__(self):
        object.__setattr__(self, "left", BC(self.left))
        object.__setattr__(self, "right", BC(self.right))
        if BC.DIRICHLET not in (self.left, self.right):
            raise ValueError("at least one boundary side must be Dirichlet")

    def dirichlet_mask(self, n_x: int) -> np.ndarray:
        mask = np.zeros(n_x, dtype=bool)
        mask[0] = self.left is BC.DIRICHLET
        mask[-1] = self.right is BC.DIRICHLET
        return mask


@dataclass(frozen=True)
class SpaceTimeField:
    """Values on the (n_x, n_t) node grid; row i is the time series at x_i."""

    mesh: SpatialMesh
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        shape = (self.mesh.n_x, self.grid.n_t)
        if values.shape != shape:
            raise ValueError(f"field has shape {values.shape}, expected {shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, mesh: SpatialMesh, grid: TimeGrid) -> "SpaceTimeField":
        return cls(mesh, grid, np.zeros((mesh.n_x, grid.n_t)))

    @classmethod
    def from_function(cls, mesh, grid, fn) -> "SpaceTimeField":
        x, t = np.meshgrid(mesh.nodes, grid.nodes, indexing="ij")
        return cls(mesh, grid, np.broadcast_to(fn(x, t), x.shape).astype(float))

    def like(self, values) -> "SpaceTimeField":
        return SpaceTimeField(self.mesh, self.grid, values)

    def __add__(self, other):
        _check_shapes(self, other)
        return self.like(self.values + other.values)

    def __sub__(self, other):
        _check_shapes(self, other)
        return self.like(self.values - other.values)

    def __mul__(self, a):
        return self.like(a * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.values)

    def truncate(self, m: int) -> "SpaceTimeField":
        return SpaceTimeField(self.mesh, self.grid.truncate(m), self.values[:, :m])


def _check_shapes(a: SpaceTimeField, b: SpaceTimeField):
    if a.mesh != b.mesh or a.grid != b.grid:
        raise ValueError("fields live on different meshes or time grids")


def apply_W(y: SpaceTimeField, cfg: PlayConfig) -> SpaceTimeField:
    return y.like(play_memory(y.values, cfg.r, cfg.w_init))


def apply_W_bouligand(
    y: SpaceTimeField, d: SpaceTimeField, cfg: PlayConfig
) -> SpaceTimeField:
    _check_shapes(y, d)
    return y.like(derivative_memory(y.values, d.values, cfg.r, cfg.w_init, "bouligand"))


def apply_W_newton(
    y_base: SpaceTimeField, d: SpaceTimeField, cfg: PlayConfig
) -> SpaceTimeField:
    """Rowwise Newton selection at ``y_base`` applied to ``d``; linear in ``d``."""
    _check_shapes(y_base, d)
    return y_base.like(
        derivative_memory(y_base.values, d.values, cfg.r, cfg.w_init, "newton")
    )
