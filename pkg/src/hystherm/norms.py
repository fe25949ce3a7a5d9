"""Discrete Bochner-space norms on space-time fields.

Time integrals use the right-endpoint rectangle rule over the n_t - 1 steps,
which matches the implicit Euler convention that data at node k+1 act on
step k. Space integrals use trapezoid weights. Sup norms are grid maxima.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import SpaceTimeField

KINDS = ("L2_QT", "H1t_L2x", "LinfT_V", "XS", "Lq_x_Ct", "L1t_Linfx")


@dataclass(frozen=True)
class NormSpec:
    kind: str
    q: float = 2.0
    epsilon: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}; known kinds: {KINDS}")
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.kind == "XS" and not self.epsilon > 0:
            raise ValueError("epsilon must be positive for the XS norm")


def _spatial_gradient(values, dx):
    return np.gradient(values, dx, axis=0)


def norm(field: SpaceTimeField, spec: NormSpec) -> float:
    vals = field.values
    wx = field.mesh.weights[:, None]
    dt = field.grid.dt
    kind = spec.kind
    if kind == "L2_QT":
        return float(np.sqrt(dt * np.sum(wx * vals[:, 1:] ** 2)))
    if kind == "H1t_L2x":
        rate = np.diff(vals, axis=1) / dt
        return float(np.sqrt(dt * np.sum(wx * rate**2)))
    if kind == "LinfT_V":
        grad = _spatial_gradient(vals, field.mesh.dx)
        return float(np.sqrt(np.max(np.sum(wx * grad**2, axis=0))))
    if kind == "XS":
        p = 2.0 + spec.epsilon
        sup_x = np.max(np.abs(vals[:, 1:]), axis=0)
        return float(np.sum(dt * sup_x**p) ** (1.0 / p))
    if kind == "Lq_x_Ct":
        sup_t = np.max(np.abs(vals), axis=1)
        return float(np.sum(field.mesh.weights * sup_t**spec.q) ** (1.0 / spec.q))
    if kind == "L1t_Linfx":
        return float(dt * np.sum(np.max(np.abs(vals[:, 1:]), axis=0)))
    raise ValueError(f"unknown norm kind {kind!r}")


def norm_YS(field: SpaceTimeField) -> float:
    """Norm of H^1(0,T; L^2) intersected with L^inf(0,T; V)."""
    return norm(field, NormSpec("H1t_L2x")) + norm(field, NormSpec("LinfT_V"))


def sup_norm(field: SpaceTimeField) -> float:
    return float(np.max(np.abs(field.values)))


def rate_lq(field: SpaceTimeField, q: float) -> float:
    """L^q(Omega_T) norm of the forward-difference time derivative."""
    rate = np.diff(field.values, axis=1) / field.grid.dt
    wx = field.mesh.weights[:, None]
    return float((field.grid.dt * np.sum(wx * np.abs(rate) ** q)) ** (1.0 / q))


def spatial_l2_sq(values: np.ndarray, mesh) -> float:
    return float(np.sum(mesh.weights * np.asarray(values) ** 2))


def spatial_grad_sq(values: np.ndarray, mesh) -> float:
    grad = _spatial_gradient(np.asarray(values, dtype=float), mesh.dx)
    return float(np.sum(mesh.weights * grad**2))
