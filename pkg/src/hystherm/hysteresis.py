"""Scalar play operator on uniform time grids.

The play is realized by the time-discrete recursion

    w_k = max(v_k - r, min(v_k + r, w_{k-1})),    w_{-1} = w_init,

which is exact at the nodes for piecewise-linear inputs. Besides the
operator itself this module provides the exact directional derivative of
the recursion (``play_bouligand_*``) and one linear Newton-derivative
selection (``play_newton_apply``).

All step functions broadcast over numpy arrays so the field operators can
advance every spatial row at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*dt on [0, T] with ``n_t`` nodes."""

    T: float
    n_t: int

    def __post_init__(self):
        if not np.isfinite(self.T) or self.T <= 0:
            raise ValueError(f"T must be a positive finite number, got {self.T!r}")
        if int(self.n_t) != self.n_t or self.n_t < 2:
            raise ValueError(f"n_t must be an integer >= 2, got {self.n_t!r}")

    @property
    def dt(self) -> float:
        return self.T / (self.n_t - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_t) * self.dt

    def truncate(self, m: int) -> "TimeGrid":
        """Grid restricted to the first ``m`` nodes (same spacing)."""
        return TimeGrid(self.dt * (m - 1), m)


@dataclass(frozen=True)
class ScalarSignal:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_t,):
            raise ValueError(
                f"signal has shape {values.shape}, grid expects ({self.grid.n_t},)"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("signal values must be finite")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class PlayConfig:
    """Play radius and initial memory.

    ``lipschitz`` and ``growth`` are the constants L and c0 of the
    Lipschitz and linear growth bounds; they are not free parameters of the
    play but are stored here for the estimate checkers.
    """

    r: float
    w_init: float = 0.0
    lipschitz: float = 1.0
    growth: float = field(init=False)

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r <= 0:
            raise ValueError(f"play radius must be positive, got {self.r!r}")
        if not np.isfinite(self.w_init):
            raise ValueError("w_init must be finite")
        if self.lipschitz <= 0:
            raise ValueError("lipschitz constant must be positive")
        object.__setattr__(self, "growth", self.r + abs(self.w_init))


@dataclass
class PlayState:
    """Running memory of a play; ``update`` keeps v - r <= w <= v + r."""

    w: float

    def update(self, v: float, r: float) -> float:
        self.w = play_step(self.w, v, r)
        return self.w


def _check_finite(*args):
    for a in args:
        if not np.all(np.isfinite(a)):
            raise ValueError("play inputs must be finite")


def _play_step(w_prev, v, r):
    return np.maximum(v - r, np.minimum(v + r, w_prev))


def _bouligand_step(w_prev, dw_prev, v, dv, r):
    lo = v - r
    hi = v + r
    return np.where(
        (w_prev < lo) | (w_prev > hi),
        dv,
        np.where(
            w_prev == lo,
            np.maximum(dv, dw_prev),
            np.where(w_prev == hi, np.minimum(dv, dw_prev), dw_prev),
        ),
    )


def _newton_active(w_prev, v, r):
    # exact ties count as active so that the selection ignores the direction
    return (w_prev <= v - r) | (w_prev >= v + r)


def _newton_step(w_prev, dw_prev, v, dv, r):
    return np.where(_newton_active(w_prev, v, r), dv, dw_prev)


def _as_output(x):
    return float(x) if np.ndim(x) == 0 else x


def play_step(w_prev, v, r):
    """One update of the play memory, ``max(v - r, min(v + r, w_prev))``."""
    _check_finite(w_prev, v, r)
    if np.any(np.asarray(r) <= 0):
        raise ValueError("play radius must be positive")
    return _as_output(_play_step(w_prev, v, r))


def play_bouligand_step(w_prev, dw_prev, v, dv, r):
    """Directional derivative of :func:`play_step` in direction (dw_prev, dv).

    Clamp strictly active: ``dv``; strictly inside: ``dw_prev``; at the lower
    contact ``w_prev == v - r``: ``max(dv, dw_prev)``; at the upper contact:
    ``min(dv, dw_prev)``.
    """
    _check_finite(w_prev, dw_prev, v, dv, r)
    return _as_output(_bouligand_step(w_prev, dw_prev, v, dv, r))


def play_newton_step(w_prev, dw_prev, v, dv, r):
    """Newton selection of the step derivative; ties resolve to ``dv``."""
    _check_finite(w_prev, dw_prev, v, dv, r)
    return _as_output(_newton_step(w_prev, dw_prev, v, dv, r))


def _same_grid(a: ScalarSignal, b: ScalarSignal):
    if a.grid != b.grid:
        raise ValueError(f"signals live on different grids: {a.grid} vs {b.grid}")


def play_memory(values: np.ndarray, r: float, w_init: float) -> np.ndarray:
    """Fold the play recursion along the last axis of ``values``.

    Works for a single time series (1-D) and for a stack of rows (2-D).
    """
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    w = np.full(values.shape[:-1], float(w_init))
    for k in range(values.shape[-1]):
        w = _play_step(w, values[..., k], r)
        out[..., k] = w
    return out


def derivative_memory(
    base: np.ndarray, direction: np.ndarray, r: float, w_init: float, rule: str
) -> np.ndarray:
    """Fold a derivative recursion along the last axis.

    ``rule`` is ``"bouligand"`` or ``"newton"``; the branch decisions are
    taken on the play trajectory driven by ``base``. The memory variation
    starts at zero.
    """
    step = {"bouligand": _bouligand_step, "newton": _newton_step}[rule]
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    out = np.empty_like(base)
    w = np.full(base.shape[:-1], float(w_init))
    dw = np.zeros(base.shape[:-1])
    for k in range(base.shape[-1]):
        v = base[..., k]
        dw = step(w, dw, v, direction[..., k], r)
        w = _play_step(w, v, r)
        out[..., k] = dw
    return out


def play_evaluate(v: ScalarSignal, cfg: PlayConfig) -> ScalarSignal:
    return ScalarSignal(v.grid, play_memory(v.values, cfg.r, cfg.w_init))


def play_bouligand_evaluate(
    v: ScalarSignal, eta: ScalarSignal, cfg: PlayConfig
) -> ScalarSignal:
    """Directional derivative of the play at ``v`` in direction ``eta``.

    Positively homogeneous in ``eta`` but not linear.
    """
    _same_grid(v, eta)
    return ScalarSignal(
        v.grid, derivative_memory(v.values, eta.values, cfg.r, cfg.w_init, "bouligand")
    )


def play_newton_apply(
    v_base: ScalarSignal, eta: ScalarSignal, cfg: PlayConfig
) -> ScalarSignal:
    """Apply the Newton-derivative selection taken at ``v_base`` to ``eta``."""
    _same_grid(v_base, eta)
    return ScalarSignal(
        v_base.grid,
        derivative_memory(v_base.values, eta.values, cfg.r, cfg.w_init, "newton"),
    )
