import math

import numpy as np
import pytest

from hystherm.field import BoundarySpec, SpatialMesh
from hystherm.hysteresis import PlayConfig, TimeGrid
from hystherm.presets import make_field, make_state
from hystherm.solver import SolverParams, solve_first_order, solve_state
from hystherm.verification import (
    EstimateProblem,
    EstimateReport,
    RemainderReport,
    check_energy_estimate,
    check_first_order_estimates,
    check_linf_estimate,
    check_max_principle,
    epsilon_sweep,
    estimate_T_sweep,
    fit_exponential_growth,
    newton_step,
    run_remainder_study,
    semismooth_newton_solve,
)

BC = BoundarySpec()
PLAY = PlayConfig(0.4)


def problem(n_x=33, n_t=65, control="desk", state="neg_sine"):
    mesh, grid = SpatialMesh(1.0, n_x), TimeGrid(1.0, n_t)
    u = make_field(control, mesh, grid, 0, kind="control")
    h = make_field("desk", mesh, grid, 0)
    y0 = make_state(state, mesh, BC.dirichlet_mask(n_x), 0)
    return u, h, y0


def report(ratios, floor=1e-8):
    ladder = [10.0 ** -k for k in range(len(ratios))]
    n = len(ratios)
    return RemainderReport("bouligand", ladder, ratios, [0] * n, [1] * n, [0] * n, [0] * n,
                           0.5, floor)


# --- remainder study -------------------------------------------------------


def test_monotone_from_and_decays():
    assert report([1, 0.5, 0.1, 0.01, 0.001]).monotone_from() == 0
    assert report([1, 2, 0.1, 0.01, 0.001]).monotone_from() == 1
    assert report([1, 2, 0.1, 0.01, 0.001]).decays()
    assert not report([1, 0.5, 0.1, 0.2, 0.001]).decays()
    # below the noise floor the order no longer matters
    assert report([1e-4, 1e-5, 1e-9, 5e-9, 2e-9]).decays()
    assert not report([1, 0.9, 0.8, 0.7, 0.6]).decays()


def test_report_rejects_bad_ladder():
    with pytest.raises(ValueError):
        RemainderReport("newton", [1, 1], [0, 0], [0, 0], [1, 1], [0, 0], [0, 0], 0.5, 1e-8)


def test_frozen_regime_is_linear():
    u, h, _ = problem(control="frozen")
    rep = run_remainder_study(u, h, np.zeros(33), cfg=PlayConfig(5.0))
    assert max(rep.ratios) <= 1e-8
    assert rep.decays()


@pytest.mark.parametrize("mode", ["bouligand", "newton"])
def test_desk_remainder_decays(mode):
    u, h, y0 = problem(65, 129)
    rep = run_remainder_study(u, h, y0, mode=mode, cfg=PLAY, workers=2)
    assert rep.decays(), rep.ratios
    rows = list(rep.rows())
    assert len(rows) == 5 and rows[0]["mode"] == mode
    assert all(r["h_XS"] > 0 for r in rows)


def test_epsilon_sweep_reuses_remainders():
    u, h, y0 = problem(33, 65)
    rep = run_remainder_study(u, h, y0, cfg=PLAY, epsilon=0.5)
    sweep = epsilon_sweep(rep, h, [0.1, 0.5, 2.0])
    np.testing.assert_allclose(sweep[0.5].ratios, rep.ratios, rtol=1e-14)
    direct = run_remainder_study(u, h, y0, cfg=PLAY, epsilon=2.0)
    np.testing.assert_allclose(sweep[2.0].ratios, direct.ratios, rtol=1e-12)
    assert all(r.decays() for r in sweep.values())


def test_remainder_needs_direction():
    u, h, y0 = problem(17, 33)
    with pytest.raises(ValueError):
        run_remainder_study(u, 0 * h, y0)
    with pytest.raises(ValueError):
        run_remainder_study(u, h, y0, ladder=[1e-2, 1e-1])


# --- estimates -------------------------------------------------------------


def test_estimate_report_constant():
    assert EstimateReport("e", 0.0, 0.0, 1, 3, 3).empirical_constant == 0.0
    bad = EstimateReport("e", 1.0, 0.0, 1, 3, 3)
    assert not bad.consistent and not bad.passed
    assert EstimateReport("e", 2.0, 4.0, 1, 3, 3, bound=0.4).passed is False
    assert EstimateReport("e", 2.0, 4.0, 1, 3, 3, bound=0.5).passed


def test_energy_estimate_zero_data():
    prob = EstimateProblem.constant_source(17, 33, 1.0, value=0.0)
    rep = check_energy_estimate(prob)
    assert rep.lhs == 0 and rep.rhs == 0 and rep.passed


def test_energy_estimate_is_grid_stable():
    coarse = check_energy_estimate(EstimateProblem.constant_source(33, 65, 1.0, play=PlayConfig(0.05)))
    fine = check_energy_estimate(EstimateProblem.constant_source(65, 129, 1.0, play=PlayConfig(0.05)))
    assert coarse.passed and fine.passed
    assert fine.empirical_constant == pytest.approx(coarse.empirical_constant, rel=0.05)


def test_linf_estimate_below_gronwall():
    for T in (0.5, 2.0):
        n_t = int(T * 64) + 1
        rep = check_linf_estimate(EstimateProblem.constant_source(33, n_t, T, play=PlayConfig(0.05)))
        assert rep.bound == pytest.approx(math.exp(T))
        assert rep.passed


def test_initial_data_enters_energy_rhs():
    mesh, grid = SpatialMesh(1.0, 33), TimeGrid(0.5, 33)
    z0 = np.sin(np.pi * mesh.nodes)
    prob = EstimateProblem(mesh, grid, np.zeros((33, 33)), z0)
    rep = check_energy_estimate(prob)
    # |z0|^2 + |z0'|^2/2 = 1/2 + pi^2/4
    assert rep.rhs == pytest.approx(0.5 + np.pi**2 / 4, rel=1e-2)
    assert rep.passed


def test_T_sweep_and_growth_fit():
    reps = estimate_T_sweep(check_energy_estimate, (0.25, 0.5, 1.0), n_x=17, dt=1 / 32,
                            play=PlayConfig(0.05))
    assert [r.n_t for r in reps] == [9, 17, 33]
    fit = fit_exponential_growth([r.T for r in reps], [r.empirical_constant for r in reps])
    assert fit.within()
    exact = fit_exponential_growth([0, 1, 2], np.exp([0.3, 1.3, 2.3]))
    assert exact.slope == pytest.approx(1.0) and exact.max_residual < 1e-12
    assert not fit_exponential_growth([0, 1], [1.0, 0.0]).within()


@pytest.mark.parametrize("mode", ["bouligand", "newton"])
def test_first_order_estimates_pass(mode):
    u, h, y0 = problem(33, 65)
    y, _ = solve_state(u if mode == "bouligand" else u + h, y0, PLAY, BC)
    d, _ = solve_first_order(mode, y, h, PLAY, BC)
    reps = check_first_order_estimates(d, h)
    assert [r.name for r in reps] == ["first_order_energy", "first_order_linf", "first_order_rate"]
    assert all(r.passed for r in reps)


def test_first_order_constants_scale_invariant_in_newton_mode():
    u, h, y0 = problem(33, 65)
    base, _ = solve_state(u + h, y0, PLAY, BC)
    consts = []
    for a in (0.5, 1.0, 4.0):
        d, _ = solve_first_order("newton", base, a * h, PLAY, BC)
        consts.append([r.empirical_constant for r in check_first_order_estimates(d, a * h)])
    np.testing.assert_allclose(consts[0], consts[1], rtol=1e-8)
    np.testing.assert_allclose(consts[2], consts[1], rtol=1e-8)


# --- maximum principle -----------------------------------------------------


def test_max_principle_random_data():
    mesh, grid = SpatialMesh(1.0, 33), TimeGrid(1.0, 65)
    gen = np.random.default_rng(3)
    for j in range(10):
        z0 = gen.uniform(-1.0 if j % 2 else 0.0, 1.0, 33)
        z0[[0, -1]] = 0
        rep = check_max_principle(z0, mesh, grid)
        assert rep.passed, rep.reason
        assert rep.nonnegative_checked == (j % 2 == 0)
        assert rep.max_sup <= rep.initial_sup


def test_max_principle_neumann_and_zero():
    mesh, grid = SpatialMesh(1.0, 17), TimeGrid(1.0, 33)
    z0 = np.linspace(1, 0, 17)
    assert check_max_principle(z0, mesh, grid, BoundarySpec("neumann", "dirichlet")).passed
    rep = check_max_principle(np.zeros(17), mesh, grid)
    assert rep.passed and rep.max_sup == 0


def test_max_principle_reports_violation():
    # the heat flow never grows the sup norm, so a negative slack forces a report
    mesh, grid = SpatialMesh(1.0, 9), TimeGrid(1.0, 9)
    z0 = np.sin(np.pi * mesh.nodes)
    z0[-1] = 0
    rep = check_max_principle(z0, mesh, grid, rel_slack=-0.5)
    assert not rep.passed and rep.first_violation is not None
    assert rep.row()["first_violation"]


# --- semismooth Newton -----------------------------------------------------


def test_newton_step_inverts_linearization():
    u, h, y0 = problem(17, 33)
    y, _ = solve_state(u + h, y0, PLAY, BC)
    d, _ = solve_first_order("newton", y, h, PLAY, BC)
    delta = newton_step(d, y, PLAY, BC)
    inner = np.s_[1:-1, 1:]
    np.testing.assert_allclose(delta.values[inner], h.values[inner], atol=1e-7)
    assert not np.any(delta.values[:, 0]) and not np.any(delta.values[[0, -1]])


def test_newton_step_round_trip():
    u, h, y0 = problem(33, 65)
    y, _ = solve_state(u, y0, PLAY, BC)
    y_pert, _ = solve_state(u + 0.3 * h, y0, PLAY, BC)
    rho = y_pert - y
    delta = newton_step(rho, y, PLAY, BC)
    d, _ = solve_first_order("newton", y, delta, PLAY, BC)
    assert np.max(np.abs(d.values - rho.values)) <= 10 * SolverParams().fp_tol


def test_newton_at_solution_stops_immediately():
    u, _, y0 = problem(33, 65)
    y, _ = solve_state(u, y0, PLAY, BC)
    rep = semismooth_newton_solve(y, u, PLAY, BC, u_star=u)
    assert rep.converged and rep.iterations == 0 and rep.errors == [0.0]


def test_newton_frozen_regime_one_step():
    u, _, _ = problem(33, 65, control="frozen")
    cfg = PlayConfig(5.0)
    y, _ = solve_state(u, np.zeros(33), cfg, BC)
    rep = semismooth_newton_solve(y, 0 * u, cfg, BC, u_star=u)
    assert rep.converged and rep.iterations == 1
    assert rep.errors[-1] < 1e-10


def test_newton_desk_superlinear():
    u, _, y0 = problem(65, 129)
    y, _ = solve_state(u, y0, PLAY, BC)
    pert = make_field("desk", u.mesh, u.grid, 0)
    rep = semismooth_newton_solve(y, u + 0.5 * pert, PLAY, BC, u_star=u)
    assert rep.converged and rep.iterations <= 10
    assert rep.superlinear_tail()
    assert rep.errors[-1] < 1e-6 * rep.errors[0]
    assert [row["iteration"] for row in rep.rows()] == list(range(rep.iterations + 1))


def test_newton_without_reference_tracks_residual():
    u, _, y0 = problem(17, 33)
    y, _ = solve_state(u, y0, PLAY, BC)
    rep = semismooth_newton_solve(y, 0 * u, PLAY, BC, max_iter=1)
    assert rep.error_kind == "residual" and rep.errors == rep.residuals
    assert rep.iterations == 1
