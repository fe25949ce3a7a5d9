"""Command line entry point: ``hystherm <subcommand> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import presets
from .config import (
    ConfigError,
    ConfigValidationError,
    build_config,
    parse_config,
    write_field_csv,
    write_rows_csv,
    write_summary,
)
from .solver import solve_first_order, solve_state
from .verification import (
    check_energy_estimate,
    check_first_order_estimates,
    check_linf_estimate,
    check_max_principle,
    epsilon_sweep,
    estimate_T_sweep,
    fit_exponential_growth,
    run_remainder_study,
    semismooth_newton_solve,
)
from .hysteresis import PlayConfig

SUBCOMMANDS = ("simulate", "first-order", "verify", "estimates", "max-principle", "newton-solve")


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("HYSTHERM_THREADS", "1")))
    except ValueError:
        return 1


def _require_play(cfg):
    if cfg.play is None:
        raise ConfigValidationError(["play.enabled: this command needs the play forcing"])
    return cfg.play


def cmd_simulate(cfg, out, mode):
    u = cfg.control()
    y, w = solve_state(u, cfg.initial_state(), cfg.play, cfg.boundary, cfg.solver)
    for name, f in (("u", u), ("y", y), ("w", w)):
        write_field_csv(out / "fields" / f"{name}.csv", f)
    return {"checks": {"solved": True}, "constants": {"y_sup": float(np.max(np.abs(y.values)))}}


def cmd_first_order(cfg, out, mode):
    play = _require_play(cfg)
    u, h, y0 = cfg.control(), cfg.direction(), cfg.initial_state()
    bc, prm = cfg.boundary, cfg.solver
    y, _ = solve_state(u, y0, play, bc, prm)
    base = y if mode == "bouligand" else solve_state(u + h, y0, play, bc, prm)[0]
    d, omega = solve_first_order(mode, base, h, play, bc, prm)
    write_field_csv(out / "fields" / "d.csv", d)
    write_field_csv(out / "fields" / "omega.csv", omega)
    reports = check_first_order_estimates(d, h, cfg.epsilon)
    write_rows_csv(out / "reports" / "first_order_estimates.csv", (r.row() for r in reports))
    return {
        "mode": mode,
        "checks": {r.name: r.passed for r in reports},
        "constants": {r.name: r.empirical_constant for r in reports},
    }


def cmd_verify(cfg, out, mode):
    play = _require_play(cfg)
    prob = cfg.section("problem")
    h = cfg.direction()
    report = run_remainder_study(
        cfg.control(), h, cfg.initial_state(), prob["lambda_ladder"],
        mode, play, cfg.boundary, cfg.solver, cfg.epsilon, workers=thread_cap(),
    )
    write_rows_csv(out / "reports" / f"remainder_{mode}.csv", report.rows())
    sweep = epsilon_sweep(report, h, cfg.section("norms")["epsilon_grid"])
    write_rows_csv(
        out / "reports" / f"remainder_{mode}_epsilon_grid.csv",
        (row for rep in sweep.values() for row in rep.rows()),
    )
    return {
        "mode": mode,
        "checks": {
            "remainder_decay": report.decays(),
            "remainder_decay_epsilon_grid": all(r.decays() for r in sweep.values()),
        },
        "constants": {
            "ratios": report.ratios, "floor": report.floor,
            "monotone_from": report.monotone_from(),
            "ratios_by_epsilon": {str(e): r.ratios for e, r in sweep.items()},
        },
    }


def cmd_estimates(cfg, out, mode):
    est = cfg.section("estimates")
    play = PlayConfig(float(est["r"]))
    common = dict(
        T_values=est["T_grid"], n_x=cfg.mesh.n_x, dt=cfg.grid.dt, workers=thread_cap(),
        value=float(est["f_value"]), play=play, bc=cfg.boundary, prm=cfg.solver,
    )
    energy = estimate_T_sweep(check_energy_estimate, **common)
    linf = estimate_T_sweep(check_linf_estimate, **common)
    write_rows_csv(out / "reports" / "estimates_energy.csv", (r.row() for r in energy))
    write_rows_csv(out / "reports" / "estimates_linf.csv", (r.row() for r in linf))
    fit = fit_exponential_growth(est["T_grid"], [r.empirical_constant for r in energy])
    return {
        "checks": {
            "energy_finite": all(r.passed for r in energy),
            "energy_exponential_growth": fit.within(),
            "linf_gronwall": all(r.passed for r in linf),
        },
        "constants": {
            "C1": [r.empirical_constant for r in energy],
            "C2": [r.empirical_constant for r in linf],
            "log_C1_fit": {"intercept": fit.intercept, "slope": fit.slope,
                           "max_residual": fit.max_residual},
        },
    }


def max_principle_samples(cfg):
    """Alternate nonnegative data in [0, 1] and mixed-sign data in [-1, 1]."""
    mesh = cfg.mesh
    dirichlet = cfg.boundary.dirichlet_mask(mesh.n_x)
    gen = presets.rng(cfg.seed)
    for j in range(cfg.section("max_principle")["samples"]):
        low = 0.0 if j % 2 == 0 else -1.0
        z0 = gen.uniform(low, 1.0, size=mesh.n_x)
        yield np.where(dirichlet, 0.0, z0)


def cmd_max_principle(cfg, out, mode):
    rows = []
    for j, z0 in enumerate(max_principle_samples(cfg)):
        rep = check_max_principle(z0, cfg.mesh, cfg.grid, cfg.boundary, cfg.solver)
        rows.append({"sample": j, **rep.row()})
    write_rows_csv(out / "reports" / "max_principle.csv", rows)
    failures = sum(not r["passed"] for r in rows)
    return {"checks": {"max_principle": failures == 0}, "constants": {"violations": failures}}


def cmd_newton(cfg, out, mode):
    play = _require_play(cfg)
    nw = cfg.section("newton")
    bc, prm = cfg.boundary, cfg.solver
    u_star = cfg.control()
    y_target, _ = solve_state(u_star, cfg.initial_state(), play, bc, prm)
    pert = presets.make_field(nw["perturbation_preset"], cfg.mesh, cfg.grid, cfg.seed)
    peak = float(np.max(np.abs(pert.values)))
    if peak > 0:
        pert = pert * (float(nw["perturbation"]) / peak)
    report = semismooth_newton_solve(
        y_target, u_star + pert, play, bc, prm, nw["tol"], nw["max_iter"],
        u_star=u_star, epsilon=cfg.epsilon,
    )
    write_rows_csv(out / "reports" / "newton.csv", report.rows())
    return {
        "checks": {"converged": report.converged, "superlinear": report.superlinear_tail()},
        "constants": {"iterations": report.iterations, "ratios": report.ratios,
                      "residuals": report.residuals},
    }


COMMANDS = {
    "simulate": cmd_simulate,
    "first-order": cmd_first_order,
    "verify": cmd_verify,
    "estimates": cmd_estimates,
    "max-principle": cmd_max_principle,
    "newton-solve": cmd_newton,
}


def run_subcommand(name: str, cfg, out_dir, mode: str = "bouligand") -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = COMMANDS[name](cfg, out, mode)
    summary = {"command": name, "config": cfg.raw, **result}
    write_summary(out / "summary.json", summary)
    return 0


def _parser():
    parser = argparse.ArgumentParser(
        prog="hystherm",
        description="Heat equation with play hysteresis: simulation and verification.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON experiment config (defaults if omitted)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--mode", choices=("bouligand", "newton"), default="bouligand")
    parser.add_argument("--seed", type=int, help="override the config seed")
    return parser


def _error(exc, kind) -> dict:
    err = {"type": kind, "message": str(exc)}
    if isinstance(exc, ConfigValidationError):
        err["errors"] = exc.errors
    return {"error": err}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = parse_config(args.config) if args.config else build_config()
        if args.seed is not None:
            raw = dict(cfg.raw, seed=args.seed)
            cfg = build_config(raw, cfg.base_dir)
        return run_subcommand(args.subcommand, cfg, args.out, args.mode)
    except ConfigError as exc:
        print(json.dumps(_error(exc, type(exc).__name__)), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as JSON
        print(json.dumps(_error(exc, type(exc).__name__)), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
