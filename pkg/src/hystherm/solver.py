"""Implicit Euler finite differences for the heat equation with play forcing.

Every problem here is marched with the same scheme: on each step the
linear system

    (I - dt*Lap_h) z^{k+1} = z^k + dt*g^{k+1}(z^{k+1})

is solved by Picard iteration on the source ``g``, which may depend on
``z^{k+1}`` through a play memory (state problem) or through a derivative
recursion (first-order problem). The discrete Laplacian uses identity rows
on Dirichlet nodes and ghost-node reflection on Neumann nodes, so the
system matrix is an M-matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import BoundarySpec, SpaceTimeField, SpatialMesh, _check_shapes
from .hysteresis import (
    PlayConfig,
    TimeGrid,
    _bouligand_step,
    _newton_step,
    _play_step,
)

_DERIVATIVE_STEPS = {"bouligand": _bouligand_step, "newton": _newton_step}


class FixedPointError(RuntimeError):
    """Picard iteration failed to reach ``fp_tol`` on one time step."""

    def __init__(self, step: int, residual: float):
        self.step = step
        self.residual = residual
        super().__init__(
            f"fixed-point iteration did not converge on step {step} "
            f"(last residual {residual:.3e})"
        )


@dataclass(frozen=True)
class SolverParams:
    fp_tol: float = 1e-10
    fp_max_iter: int = 100
    dt_guard: bool = True

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if int(self.fp_max_iter) != self.fp_max_iter or self.fp_max_iter < 1:
            raise ValueError("fp_max_iter must be an integer >= 1")


@dataclass(frozen=True)
class HeatOperator:
    """Tridiagonal ``I - dt*Lap_h`` with boundary rows and its Thomas factors."""

    mesh: SpatialMesh
    boundary: BoundarySpec
    dt: float
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @classmethod
    def build(cls, mesh: SpatialMesh, boundary: BoundarySpec, dt: float) -> "HeatOperator":
        n = mesh.n_x
        s = dt / mesh.dx**2
        lower = np.full(n, -s)
        upper = np.full(n, -s)
        diag = np.full(n, 1.0 + 2.0 * s)
        lower[0] = upper[-1] = 0.0
        for i, side in ((0, boundary.left), (n - 1, boundary.right)):
            if side.value == "dirichlet":
                lower[i] = upper[i] = 0.0
                diag[i] = 1.0
            elif i == 0:
                upper[0] = -2.0 * s
            else:
                lower[-1] = -2.0 * s
        return cls(mesh, boundary, dt, lower, diag, upper)

    def __post_init__(self):
        # Thomas elimination factors; pivots stay >= 1 for this M-matrix
        a, b, c = self.lower.tolist(), self.diag.tolist(), self.upper.tolist()
        n = len(b)
        cp = [0.0] * n
        piv = [0.0] * n
        piv[0] = b[0]
        for i in range(n):
            if i:
                piv[i] = b[i] - a[i] * cp[i - 1]
            if piv[i] == 0.0:
                raise RuntimeError(f"zero pivot in tridiagonal elimination at row {i}")
            cp[i] = c[i] / piv[i]
        object.__setattr__(self, "_factors", (a, cp, piv))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.lower[1:] * x[:-1]
        y[:-1] += self.upper[:-1] * x[1:]
        return y

    def dense(self) -> np.ndarray:
        return (
            np.diag(self.diag) + np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)
        )

    def is_m_matrix(self) -> bool:
        off = np.abs(self.lower) + np.abs(self.upper)
        return bool(
            np.all(self.diag > 0)
            and np.all(self.lower <= 0)
            and np.all(self.upper <= 0)
            and np.all(self.diag >= off)
        )


def tridiag_solve(op: HeatOperator, rhs) -> np.ndarray:
    """Solve ``op x = rhs`` with the precomputed Thomas factors."""
    a, cp, piv = op._factors
    d = np.asarray(rhs, dtype=float).tolist()
    n = len(piv)
    if len(d) != n:
        raise ValueError(f"rhs has length {len(d)}, operator has {n} rows")
    d[0] = d[0] / piv[0]
    for i in range(1, n):
        d[i] = (d[i] - a[i] * d[i - 1]) / piv[i]
    for i in range(n - 2, -1, -1):
        d[i] -= cp[i] * d[i + 1]
    return np.array(d)


def laplacian(values: np.ndarray, mesh: SpatialMesh, boundary: BoundarySpec) -> np.ndarray:
    """Discrete Laplacian along axis 0, zero on Dirichlet rows."""
    z = np.asarray(values, dtype=float)
    out = np.zeros_like(z)
    inv = 1.0 / mesh.dx**2
    out[1:-1] = (z[2:] - 2.0 * z[1:-1] + z[:-2]) * inv
    if boundary.left.value == "neumann":
        out[0] = 2.0 * (z[1] - z[0]) * inv
    if boundary.right.value == "neumann":
        out[-1] = 2.0 * (z[-2] - z[-1]) * inv
    return out


# Source rules. A rule supplies g^{k+1} as a function of the candidate
# z^{k+1}; ``start`` sees z^0, ``accept`` commits a converged step.


class PureSource:
    """g = f, independent of z."""

    def __init__(self, f: np.ndarray):
        self.f = np.asarray(f, dtype=float)

    def start(self, z0):
        pass

    def value(self, k, z):
        return self.f[:, k]

    def accept(self, k, z):
        pass


class PlaySource:
    """g = f + W[z], a play driven by the unknown itself."""

    def __init__(self, f: np.ndarray, cfg: PlayConfig):
        self.f = np.asarray(f, dtype=float)
        self.cfg = cfg
        self.memory = []

    def start(self, z0):
        self.w = _play_step(self.cfg.w_init, z0, self.cfg.r)
        self.memory = [self.w]

    def value(self, k, z):
        return self.f[:, k] + _play_step(self.w, z, self.cfg.r)

    def accept(self, k, z):
        self.w = _play_step(self.w, z, self.cfg.r)
        self.memory.append(self.w)


class DerivativeSource:
    """g = h + omega, with omega advanced by a derivative recursion of the play
    along a fixed base trajectory."""

    def __init__(self, h: np.ndarray, base: np.ndarray, cfg: PlayConfig, rule: str):
        self.h = np.asarray(h, dtype=float)
        self.base = np.asarray(base, dtype=float)
        self.cfg = cfg
        self.step = _DERIVATIVE_STEPS[rule]
        self.memory = []

    def start(self, z0):
        r = self.cfg.r
        v = self.base[:, 0]
        self.dw = self.step(self.cfg.w_init, 0.0, v, np.asarray(z0, dtype=float), r)
        self.w = _play_step(self.cfg.w_init, v, r)
        self.memory = [self.dw]

    def value(self, k, z):
        return self.h[:, k] + self.step(self.w, self.dw, self.base[:, k], z, self.cfg.r)

    def accept(self, k, z):
        r = self.cfg.r
        v = self.base[:, k]
        self.dw = self.step(self.w, self.dw, v, z, r)
        self.w = _play_step(self.w, v, r)
        self.memory.append(self.dw)


def _march(mesh, grid, bc, z0, source, prm: SolverParams, trace=None) -> np.ndarray:
    dt = grid.dt
    op = HeatOperator.build(mesh, bc, dt)
    dirichlet = bc.dirichlet_mask(mesh.n_x)
    z = np.empty((mesh.n_x, grid.n_t))
    z[:, 0] = z0
    source.start(z[:, 0])
    for k in range(grid.n_t - 1):
        prev = z[:, k]
        guess = prev
        history = []
        for _ in range(prm.fp_max_iter):
            rhs = prev + dt * source.value(k + 1, guess)
            rhs[dirichlet] = 0.0
            new = tridiag_solve(op, rhs)
            res = float(np.max(np.abs(new - guess)))
            history.append(res)
            guess = new
            if res <= prm.fp_tol:
                break
        else:
            raise FixedPointError(k + 1, res)
        if trace is not None:
            trace.append(history)
        source.accept(k + 1, guess)
        z[:, k + 1] = guess
    return z


def _guard(cfg: PlayConfig | None, grid: TimeGrid, prm: SolverParams):
    if prm.dt_guard and cfg is not None and cfg.lipschitz * grid.dt > 0.5:
        raise ValueError(
            f"time step {grid.dt:.4g} violates L*dt <= 1/2 with L = {cfg.lipschitz}"
        )


def solve_state(
    u: SpaceTimeField,
    y0,
    cfg: PlayConfig | None,
    bc: BoundarySpec,
    prm: SolverParams = SolverParams(),
    trace=None,
) -> tuple[SpaceTimeField, SpaceTimeField]:
    """Solve y_t - Lap y = u + W[y] with homogeneous boundary data.

    ``cfg=None`` switches the hysteresis off (W = 0). Returns the state and
    the play output W[y].
    """
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (u.mesh.n_x,):
        raise ValueError(f"y0 has shape {y0.shape}, expected ({u.mesh.n_x},)")
    if not np.all(np.isfinite(y0)):
        raise ValueError("y0 must be finite")
    dirichlet = bc.dirichlet_mask(u.mesh.n_x)
    if np.any(np.abs(y0[dirichlet]) > 1e-12):
        raise ValueError("y0 must vanish on Dirichlet nodes")
    y0 = np.where(dirichlet, 0.0, y0)
    _guard(cfg, u.grid, prm)
    if cfg is None:
        y = _march(u.mesh, u.grid, bc, y0, PureSource(u.values), prm, trace)
        return u.like(y), u.like(np.zeros_like(y))
    source = PlaySource(u.values, cfg)
    y = _march(u.mesh, u.grid, bc, y0, source, prm, trace)
    return u.like(y), u.like(np.stack(source.memory, axis=1))


def solve_first_order(
    mode: str,
    base: SpaceTimeField,
    h: SpaceTimeField,
    cfg: PlayConfig,
    bc: BoundarySpec,
    prm: SolverParams = SolverParams(),
    trace=None,
) -> tuple[SpaceTimeField, SpaceTimeField]:
    """Solve d_t - Lap d = h + omega, d(0) = 0, with the play derivative
    recursion along ``base``.

    ``mode="bouligand"`` uses the directional derivative at ``base = S(u)``;
    ``mode="newton"`` applies the Newton selection at ``base = S(u + h)``,
    which makes h -> d linear.
    """
    if mode not in _DERIVATIVE_STEPS:
        raise ValueError(f"unknown first-order mode {mode!r}")
    _check_shapes(base, h)
    _guard(cfg, h.grid, prm)
    source = DerivativeSource(h.values, base.values, cfg, mode)
    d = _march(h.mesh, h.grid, bc, np.zeros(h.mesh.n_x), source, prm, trace)
    return h.like(d), h.like(np.stack(source.memory, axis=1))


def solve_inhomogeneous(
    g_rule, z0, mesh: SpatialMesh, grid: TimeGrid, bc: BoundarySpec,
    prm: SolverParams = SolverParams(), trace=None,
) -> SpaceTimeField:
    """Solve z_t - Lap z = g for a source rule (see PureSource, PlaySource)."""
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (mesh.n_x,) or not np.all(np.isfinite(z0)):
        raise ValueError(f"z0 must be a finite vector of length {mesh.n_x}")
    z = _march(mesh, grid, bc, z0, g_rule, prm, trace)
    return SpaceTimeField(mesh, grid, z)


def heat_residual(z: SpaceTimeField, bc: BoundarySpec) -> np.ndarray:
    """(z^{k+1} - z^k)/dt - Lap_h z^{k+1} on steps 1..n_t-1; column k-1 is step k."""
    vals = z.values
    return np.diff(vals, axis=1) / z.grid.dt - laplacian(vals[:, 1:], z.mesh, bc)
