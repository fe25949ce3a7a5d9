"""Heat equation forced by a play hysteresis operator: simulation, first-order
sensitivities and numerical verification of their properties."""

from .field import (
    BC,
    BoundarySpec,
    SpaceTimeField,
    SpatialMesh,
    apply_W,
    apply_W_bouligand,
    apply_W_newton,
)
from .hysteresis import (
    PlayConfig,
    PlayState,
    ScalarSignal,
    TimeGrid,
    play_bouligand_evaluate,
    play_bouligand_step,
    play_evaluate,
    play_newton_apply,
    play_newton_step,
    play_step,
)
from .norms import NormSpec, norm, norm_YS
from .solver import (
    FixedPointError,
    HeatOperator,
    SolverParams,
    solve_first_order,
    solve_inhomogeneous,
    solve_state,
    tridiag_solve,
)

__version__ = "0.1.0"

__all__ = [
    "apply_W",
    "apply_W_bouligand",
    "apply_W_newton",
    "BC",
    "BoundarySpec",
    "FixedPointError",
    "HeatOperator",
    "norm",
    "norm_YS",
    "NormSpec",
    "play_bouligand_evaluate",
    "play_bouligand_step",
    "play_evaluate",
    "play_newton_apply",
    "play_newton_step",
    "play_step",
    "PlayConfig",
    "PlayState",
    "ScalarSignal",
    "solve_first_order",
    "solve_inhomogeneous",
    "solve_state",
    "SolverParams",
    "SpaceTimeField",
    "SpatialMesh",
    "TimeGrid",
    "tridiag_solve",
]
