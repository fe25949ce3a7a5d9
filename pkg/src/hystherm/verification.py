"""Numerical checks of differentiability, a priori estimates and Newton
convergence for the play-forced heat equation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .field import BoundarySpec, SpaceTimeField, SpatialMesh, apply_W_newton
from .hysteresis import PlayConfig, TimeGrid
from .norms import (
    NormSpec,
    norm,
    norm_YS,
    rate_lq,
    spatial_grad_sq,
    spatial_l2_sq,
    sup_norm,
)
from .solver import (
    PlaySource,
    PureSource,
    SolverParams,
    heat_residual,
    solve_first_order,
    solve_inhomogeneous,
    solve_state,
)

DEFAULT_LADDER = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
DEFAULT_EPSILON_GRID = (0.1, 0.5, 1.0, 2.0)


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# remainder decay


@dataclass
class RemainderReport:
    mode: str
    lambda_ladder: list[float]
    ratios: list[float]
    remainder_norms: list[float]
    h_norms: list[float]
    y_norms: list[float]
    d_norms: list[float]
    epsilon: float
    floor: float

    def __post_init__(self):
        lad = self.lambda_ladder
        if any(b >= a for a, b in zip(lad, lad[1:])):
            raise ValueError("lambda ladder must be strictly decreasing")
        if not all(np.isfinite(r) and r >= 0 for r in self.ratios):
            raise ValueError("remainder ratios must be finite and nonnegative")

    def monotone_from(self) -> int:
        """First ladder index from which the ratios keep decreasing.

        Once a ratio has reached ``floor`` (the fixed-point noise level) the
        following ones only have to stay below it.
        """
        start = len(self.ratios) - 1
        for j in range(len(self.ratios) - 2, -1, -1):
            a, b = self.ratios[j], self.ratios[j + 1]
            if b < a or (a <= self.floor and b <= self.floor):
                start = j
            else:
                break
        return start

    def decays(self, factor: float = 0.2, tail: int = 3) -> bool:
        r = self.ratios
        at_floor = r[-1] <= self.floor
        shrinks = r[-1] <= factor * r[0] or (at_floor and r[0] <= self.floor)
        return self.monotone_from() <= len(r) - tail and shrinks

    def rows(self):
        for j, lam in enumerate(self.lambda_ladder):
            yield {
                "mode": self.mode,
                "lambda": lam,
                "ratio": self.ratios[j],
                "remainder_YS": self.remainder_norms[j],
                "h_XS": self.h_norms[j],
                "y_lambda_YS": self.y_norms[j],
                "d_YS": self.d_norms[j],
                "epsilon": self.epsilon,
            }


def run_remainder_study(
    u: SpaceTimeField,
    h: SpaceTimeField,
    y0,
    ladder=DEFAULT_LADDER,
    mode: str = "bouligand",
    cfg: PlayConfig = PlayConfig(0.4),
    bc: BoundarySpec = BoundarySpec(),
    prm: SolverParams = SolverParams(),
    epsilon: float = 0.5,
    workers: int = 1,
) -> RemainderReport:
    """Measure ||y_lam - y - d||_YS / ||lam h||_XS along a lambda ladder.

    ``d`` solves the first-order problem with direction ``lam*h``, taken at
    y = S(u) (bouligand) or at y_lam = S(u + lam*h) (newton).
    """
    if not np.any(h.values):
        raise ValueError("direction h must be nonzero")
    ladder = [float(v) for v in ladder]
    if any(b >= a for a, b in zip(ladder, ladder[1:])) or min(ladder) <= 0:
        raise ValueError("lambda ladder must be positive and strictly decreasing")
    xs = NormSpec("XS", epsilon=epsilon)
    y, _ = solve_state(u, y0, cfg, bc, prm)

    def point(lam):
        try:
            y_lam, _ = solve_state(u + lam * h, y0, cfg, bc, prm)
            base = y if mode == "bouligand" else y_lam
            d, _ = solve_first_order(mode, base, lam * h, cfg, bc, prm)
        except Exception as exc:
            raise RuntimeError(f"remainder study failed at lambda={lam:g}: {exc}") from exc
        rem = norm_YS(y_lam - y - d)
        h_norm = norm(lam * h, xs)
        d_norm = norm_YS(d)
        y_step = norm_YS(y_lam - y)
        ratio = rem / h_norm
        # triangle inequality for the YS norm
        assert y_step <= d_norm + ratio * h_norm + 1e-12 * (1.0 + y_step)
        return ratio, rem, h_norm, norm_YS(y_lam), d_norm

    results = _map(point, ladder, workers)
    ratios, rems, hs, ys, ds = (list(c) for c in zip(*results))
    return RemainderReport(mode, ladder, ratios, rems, hs, ys, ds, epsilon, 100 * prm.fp_tol)


def epsilon_sweep(report: RemainderReport, h: SpaceTimeField, epsilons) -> dict:
    """Re-express a remainder study for other exponents.

    Only ||lam*h||_XS depends on epsilon, so no solves are repeated.
    """
    out = {}
    for eps in epsilons:
        spec = NormSpec("XS", epsilon=float(eps))
        hs = [norm(lam * h, spec) for lam in report.lambda_ladder]
        ratios = [r / n for r, n in zip(report.remainder_norms, hs)]
        out[float(eps)] = replace(report, ratios=ratios, h_norms=hs, epsilon=float(eps))
    return out


# --------------------------------------------------------------------------
# a priori estimates


@dataclass
class EstimateReport:
    name: str
    lhs: float
    rhs: float
    T: float
    n_x: int
    n_t: int
    bound: float | None = None

    @property
    def consistent(self) -> bool:
        return self.rhs > 0 or self.lhs == 0

    @property
    def empirical_constant(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0 else math.inf

    @property
    def passed(self) -> bool:
        c = self.empirical_constant
        if not (self.consistent and math.isfinite(c)):
            return False
        return self.bound is None or c <= self.bound

    def row(self):
        return {
            "name": self.name,
            "T": self.T,
            "n_x": self.n_x,
            "n_t": self.n_t,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "empirical_constant": self.empirical_constant,
            "bound": "" if self.bound is None else self.bound,
            "passed": self.passed,
        }


@dataclass
class EstimateProblem:
    """z_t - Lap z = g with g = f (``play=None``) or g = f + W[z].

    With a play of initial memory w0 the source obeys
    |g| <= L sup_{s<=t}|z| + |f| + |w0|, so ``|f| + |w0|`` is the
    comparison function entering the bounds.
    """

    mesh: SpatialMesh
    grid: TimeGrid
    f: np.ndarray
    z0: np.ndarray
    bc: BoundarySpec = field(default_factory=BoundarySpec)
    play: PlayConfig | None = None
    prm: SolverParams = field(default_factory=SolverParams)

    @classmethod
    def constant_source(cls, n_x, n_t, T, value=1.0, play=PlayConfig(0.4), **kw):
        mesh, grid = SpatialMesh(1.0, n_x), TimeGrid(T, n_t)
        return cls(mesh, grid, np.full((n_x, n_t), value), np.zeros(n_x), play=play, **kw)

    @property
    def lipschitz(self) -> float:
        return 0.0 if self.play is None else self.play.lipschitz

    def comparison(self) -> SpaceTimeField:
        w0 = 0.0 if self.play is None else abs(self.play.w_init)
        return SpaceTimeField(self.mesh, self.grid, np.abs(self.f) + w0)

    def solve(self) -> SpaceTimeField:
        rule = PureSource(self.f) if self.play is None else PlaySource(self.f, self.play)
        return solve_inhomogeneous(rule, self.z0, self.mesh, self.grid, self.bc, self.prm)


def check_energy_estimate(problem: EstimateProblem) -> EstimateReport:
    """sup-in-time L2, gradient and time-derivative energy against data."""
    z = problem.solve()
    f = problem.comparison()
    mesh = problem.mesh
    lhs = (
        norm(z, NormSpec("Lq_x_Ct", q=2.0)) ** 2
        + norm(z, NormSpec("LinfT_V")) ** 2
        + norm(z, NormSpec("H1t_L2x")) ** 2
    )
    rhs = (
        norm(f, NormSpec("L2_QT")) ** 2
        + spatial_l2_sq(problem.z0, mesh)
        + 0.5 * spatial_grad_sq(problem.z0, mesh)
    )
    return EstimateReport("energy", lhs, rhs, problem.grid.T, mesh.n_x, problem.grid.n_t)


def check_linf_estimate(problem: EstimateProblem) -> EstimateReport:
    """Sup bound with the Gronwall constant exp(L*T) as the reference bound."""
    z = problem.solve()
    f = problem.comparison()
    lhs = sup_norm(z)
    rhs = norm(f, NormSpec("L1t_Linfx")) + float(np.max(np.abs(problem.z0)))
    T = problem.grid.T
    return EstimateReport(
        "linf", lhs, rhs, T, problem.mesh.n_x, problem.grid.n_t,
        bound=math.exp(problem.lipschitz * T),
    )


def check_first_order_estimates(
    d: SpaceTimeField, h: SpaceTimeField, epsilon: float = 0.5
) -> list[EstimateReport]:
    """Energy, sup and L^{2+eps} time-derivative bounds of a first-order solution."""
    n_x, n_t, T = d.mesh.n_x, d.grid.n_t, d.grid.T
    energy = EstimateReport(
        "first_order_energy",
        norm(d, NormSpec("H1t_L2x")) ** 2 + norm(d, NormSpec("LinfT_V")) ** 2,
        norm(h, NormSpec("L2_QT")) ** 2,
        T, n_x, n_t,
    )
    linf = EstimateReport(
        "first_order_linf", sup_norm(d), norm(h, NormSpec("L1t_Linfx")), T, n_x, n_t
    )
    rate = EstimateReport(
        "first_order_rate",
        rate_lq(d, 2.0 + epsilon) ** 2,
        norm(h, NormSpec("XS", epsilon=epsilon)) ** 2,
        T, n_x, n_t,
    )
    return [energy, linf, rate]


@dataclass
class GrowthFit:
    """Least-squares fit log C(T) ~ a + b*T."""

    T: list[float]
    constants: list[float]
    intercept: float
    slope: float
    max_residual: float

    def within(self, tol: float = 0.5) -> bool:
        return math.isfinite(self.slope) and self.max_residual <= tol


def fit_exponential_growth(T_values, constants) -> GrowthFit:
    T = np.asarray(T_values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logc = np.log(np.asarray(constants, dtype=float))
    if not np.all(np.isfinite(logc)):
        return GrowthFit(list(T), list(constants), math.nan, math.nan, math.inf)
    slope, intercept = np.polyfit(T, logc, 1)
    resid = logc - (intercept + slope * T)
    return GrowthFit(
        list(T), list(constants), float(intercept), float(slope), float(np.max(np.abs(resid)))
    )


def estimate_T_sweep(
    check, T_values=(0.25, 0.5, 1.0, 2.0), n_x=65, dt=1.0 / 128, workers=1, **kw
) -> list[EstimateReport]:
    """Run ``check`` on the constant-source problem for several horizons at
    a fixed time step."""

    def one(T):
        n_t = int(round(T / dt)) + 1
        return check(EstimateProblem.constant_source(n_x, n_t, T, **kw))

    return _map(one, list(T_values), workers)


# --------------------------------------------------------------------------
# maximum principle


@dataclass
class MaxPrincipleReport:
    passed: bool
    initial_sup: float
    max_sup: float
    nonnegative_checked: bool
    first_violation: tuple[int, int] | None = None
    reason: str = ""

    def row(self):
        return {
            "passed": self.passed,
            "initial_sup": self.initial_sup,
            "max_sup": self.max_sup,
            "nonnegative_checked": self.nonnegative_checked,
            "first_violation": "" if self.first_violation is None else
            f"{self.first_violation[0]}:{self.first_violation[1]}",
            "reason": self.reason,
        }


def check_max_principle(
    z0, mesh: SpatialMesh, grid: TimeGrid, bc: BoundarySpec = BoundarySpec(),
    prm: SolverParams = SolverParams(), rel_slack: float = 1e-13,
) -> MaxPrincipleReport:
    """Heat equation without source: sup norm bounded by the initial one and
    non-increasing in time, non-negativity preserved for z0 >= 0.

    ``rel_slack`` only absorbs floating-point rounding in the sup comparisons.
    """
    z0 = np.asarray(z0, dtype=float)
    z = solve_inhomogeneous(
        PureSource(np.zeros((mesh.n_x, grid.n_t))), z0, mesh, grid, bc, prm
    ).values
    init = float(np.max(np.abs(z0)))
    slack = rel_slack * max(init, 1e-300)
    sups = np.max(np.abs(z), axis=0)
    nonneg = bool(np.all(z0 >= 0))

    def fail(k, reason):
        i = int(np.argmax(np.abs(z[:, k])))
        return MaxPrincipleReport(False, init, float(sups.max()), nonneg, (i, k), reason)

    over = np.nonzero(sups > init + slack)[0]
    if over.size:
        return fail(int(over[0]), "sup norm exceeds initial sup norm")
    grows = np.nonzero(sups[1:] > sups[:-1] + slack)[0]
    if grows.size:
        return fail(int(grows[0]) + 1, "sup norm increased between steps")
    if nonneg:
        neg = np.nonzero(np.any(z < 0, axis=0))[0]
        if neg.size:
            k = int(neg[0])
            i = int(np.argmin(z[:, k]))
            return MaxPrincipleReport(False, init, float(sups.max()), nonneg, (i, k),
                                      "negative value from nonnegative data")
    return MaxPrincipleReport(True, init, float(sups.max()), nonneg)


# --------------------------------------------------------------------------
# semismooth Newton


def newton_step(
    rho: SpaceTimeField, y_current: SpaceTimeField, cfg: PlayConfig, bc: BoundarySpec
) -> SpaceTimeField:
    """Control increment whose linearized response at ``y_current`` is ``rho``.

    Inverts the first-order problem node by node:
    delta = rho_t - Lap_h rho - M rho, with the Newton selection M taken
    along ``y_current``. Dirichlet rows and the initial time node carry no
    control and are set to zero.
    """
    omega = apply_W_newton(y_current, rho, cfg).values
    delta = np.zeros_like(rho.values)
    delta[:, 1:] = heat_residual(rho, bc) - omega[:, 1:]
    delta[bc.dirichlet_mask(rho.mesh.n_x)] = 0.0
    return rho.like(delta)


@dataclass
class NewtonRunReport:
    residuals: list[float]
    errors: list[float]
    converged: bool
    iterations: int
    error_kind: str

    @property
    def ratios(self) -> list[float]:
        e = self.errors
        return [b / a if a > 0 else 0.0 for a, b in zip(e, e[1:])]

    def superlinear_tail(self, n: int = 3) -> bool:
        """Error ratios strictly decreasing over the last ``n`` iterations
        (over all of them when fewer were needed)."""
        tail = self.ratios[-n:]
        return all(b < a for a, b in zip(tail, tail[1:]))

    def rows(self):
        ratios = [""] + self.ratios
        for k, (res, err) in enumerate(zip(self.residuals, self.errors)):
            yield {"iteration": k, "residual_YS": res, "error": err, "ratio": ratios[k]}


def semismooth_newton_solve(
    y_target: SpaceTimeField,
    u0: SpaceTimeField,
    cfg: PlayConfig,
    bc: BoundarySpec = BoundarySpec(),
    prm: SolverParams = SolverParams(),
    tol: float = 1e-8,
    max_iter: int = 10,
    u_star: SpaceTimeField | None = None,
    epsilon: float = 0.5,
) -> NewtonRunReport:
    """Solve S(u) = y_target by semismooth Newton with explicit steps.

    The initial state is read off ``y_target``. Errors are
    ||u_k - u_star||_XS over the effective control entries when ``u_star``
    is given, otherwise the YS residual norms.
    """
    y0 = y_target.values[:, 0]
    rows = ~bc.dirichlet_mask(u0.mesh.n_x)
    xs = NormSpec("XS", epsilon=epsilon)

    def error(u):
        if u_star is None:
            return None
        diff = (u - u_star).values * rows[:, None]
        return norm(u.like(diff), xs)

    u = u0
    residuals, errors = [], []
    converged = False
    for k in range(max_iter + 1):
        y, _ = solve_state(u, y0, cfg, bc, prm)
        rho = y_target - y
        res = norm_YS(rho)
        residuals.append(res)
        errors.append(res if u_star is None else error(u))
        if res <= tol:
            converged = True
            break
        if k == max_iter:
            break
        u = u + newton_step(rho, y, cfg, bc)
    return NewtonRunReport(
        residuals, errors, converged, len(residuals) - 1,
        "residual" if u_star is None else "control_XS",
    )
