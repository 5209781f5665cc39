"""Batch front-end: solve | certify | simulate | restricted.

Exit codes: 0 success / certification passed, 1 certification failed,
2 invalid configuration, 3 simulation budget exceeded.  All outputs carry
the config hash; identical configs produce byte-identical outputs, for any
worker count (ROBUSTRATE_WORKERS only redistributes work).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import closedform, hjbi, montecarlo, restricted
from .config import RunConfig, load_run_config
from .curves import CoefficientCurve
from .errors import BudgetExceededError, ConfigError, InvalidModelError
from .model import validate_model

EXIT_OK = 0
EXIT_CERTIFICATION_FAILED = 1
EXIT_CONFIG_INVALID = 2
EXIT_BUDGET_EXCEEDED = 3


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def _solve(cfg: RunConfig):
    sol = closedform.solve(cfg.model, cfg.quadrature_nodes)
    return sol


def cmd_solve(cfg: RunConfig) -> int:
    sol = _solve(cfg)
    sol.f.to_csv(_out(cfg, "f.csv"))
    sol.g.to_csv(_out(cfg, "g.csv"))
    sol.pi_star.to_csv(_out(cfg, "pi_star.csv"))
    sol.eta_star.to_csv(_out(cfg, "eta_star.csv"))
    s0 = cfg.initial_state
    _write_json(_out(cfg, "value.json"), {
        "config_hash": cfg.config_hash,
        "quadrature_nodes": cfg.quadrature_nodes,
        "x": s0.x, "r": s0.r, "t": s0.t,
        "f_at_t": float(sol.f.at(s0.t)),
        "g_at_t": float(sol.g.at(s0.t)),
        "value": closedform.value_function(cfg.model, sol, s0),
    })
    return EXIT_OK


def cmd_certify(cfg: RunConfig) -> int:
    sol = _solve(cfg)
    if not cfg.robust:
        # negative-control mode: claim the traditional portfolio as saddle
        trad = closedform.traditional_strategy(cfg.model, sol.f)
        sol = closedform.SolutionPair(f=sol.f, g=sol.g, pi_star=trad,
                                      eta_star=sol.eta_star,
                                      quadrature_nodes=sol.quadrature_nodes)
    cert = hjbi.certify_saddle(cfg.model, sol, cfg.grid)
    payload = {
        "config_hash": cfg.config_hash,
        "robust_strategy": cfg.robust,
        "grid_spec": list(cert.grid_spec),
        "max_violation_upper": cert.max_violation_upper,
        "max_violation_lower": cert.max_violation_lower,
        "h_at_saddle_max_abs": cert.h_at_saddle_max_abs,
        "inequality_tol": hjbi.INEQUALITY_TOL,
        "saddle_value_tol": hjbi.SADDLE_VALUE_TOL,
        "passed": cert.passed,
        "worst": cert.worst,
    }
    if cert.degenerate:
        payload["notes"] = ("degenerate game: a == 0, the worst-case measure "
                            "is a martingale measure")
    passed = cert.passed
    if cfg.gamma_set is not None:
        f = sol.f
        g_res = restricted.restricted_g(cfg.model, f, cfg.gamma_set)
        report = restricted.check_isaacs_equality(
            cfg.model, f, g_res, cfg.gamma_set,
            eta_points=cfg.isaacs_eta_points,
            pi_points=cfg.isaacs_pi_points,
            t_points=cfg.grid.t_points, r_points=cfg.grid.r_points,
            r_lo=cfg.grid.r_lo, r_hi=cfg.grid.r_hi,
            pi_halfwidth=cfg.grid.pi_halfwidth)
        payload["isaacs"] = {
            "max_abs_gap": report.max_abs_gap,
            "max_abs_value": report.max_abs_value,
            "eta_points": report.eta_points,
            "pi_points": report.pi_points,
            "passed": report.passed,
        }
        passed = passed and report.passed
    _write_json(_out(cfg, "certificate.json"), payload)
    if not passed:
        print(f"certification failed; worst grid point: {cert.worst}",
              file=sys.stderr)
        return EXIT_CERTIFICATION_FAILED
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    cfg.sim.check_budget()
    m, s0, sim = cfg.model, cfg.initial_state, cfg.sim
    sol = _solve(cfg)
    value = closedform.value_function(m, sol, s0)

    saddle = montecarlo.estimate_J(m, sol.pi_star, sol.eta_star, s0, sim)
    payload = {
        "config_hash": cfg.config_hash,
        "seed": sim.seed,
        "paths": sim.paths,
        "steps": sim.steps,
        "antithetic": sim.antithetic,
        "value_function": value,
        "saddle": {
            "mean": saddle.mean,
            "std_error": saddle.std_error,
            "abs_error": abs(saddle.mean - value),
            "within_3se": bool(abs(saddle.mean - value)
                               <= 3.0 * max(saddle.std_error, 1e-300)),
        },
    }

    eta_rows = []
    for off in cfg.eta_offsets:
        est = montecarlo.estimate_J(m, sol.pi_star,
                                    sol.eta_star.shifted(off), s0, sim)
        eta_rows.append({
            "offset": off, "mean": est.mean, "std_error": est.std_error,
            "holds_lower_bound": bool(est.mean
                                      >= value - 3.0 * est.std_error),
        })
    pi_rows = []
    for off in cfg.pi_offsets:
        est = montecarlo.estimate_J(m, sol.pi_star.shifted(off),
                                    sol.eta_star, s0, sim)
        pi_rows.append({
            "offset": off, "mean": est.mean, "std_error": est.std_error,
            "holds_upper_bound": bool(est.mean
                                      <= value + 3.0 * est.std_error),
        })
    payload["eta_perturbations"] = eta_rows
    payload["pi_perturbations"] = pi_rows

    # antithetic pairing sharpens the drift test without touching the
    # utility estimates above
    gap_paths = sim.paths - (sim.paths % 2) if cfg.gap_antithetic else sim.paths
    gap_cfg = montecarlo.SimConfig(paths=gap_paths, steps=sim.steps,
                                   seed=sim.seed,
                                   antithetic=cfg.gap_antithetic,
                                   budget=sim.budget)

    def gap_entry(eta_curve):
        rep = montecarlo.martingale_gap_mc(m, eta_curve, m.horizon, gap_cfg)
        rejected = bool(np.any(np.abs(rep.gaps)
                               > 3.0 * np.maximum(rep.std_errors, 1e-300)))
        return {"gaps": rep.gaps.tolist(),
                "std_errors": rep.std_errors.tolist(),
                "non_martingale": rejected}

    lam_neg = cfg.model.lam
    martingale_eta = CoefficientCurve(lam_neg.breakpoints, -lam_neg.values,
                                      lam_neg.interpolation)
    payload["martingale_gap"] = {
        "worst_case": gap_entry(sol.eta_star),
        "reference_martingale": gap_entry(martingale_eta),
    }
    _write_json(_out(cfg, "estimates.json"), payload)

    if cfg.dump_paths:
        r_term, x_term = montecarlo.terminal_states(m, sol.pi_star,
                                                    sol.eta_star, s0, sim)
        with open(_out(cfg, "paths.csv"), "w", newline="\n") as fh:
            fh.write("path,r_T,X_T,utility\n")
            for i, (r, x) in enumerate(zip(r_term, x_term)):
                u = x**m.gamma / m.gamma
                fh.write(f"{i},{r:.17g},{x:.17g},{u:.17g}\n")
    return EXIT_OK


def cmd_restricted(cfg: RunConfig) -> int:
    if cfg.gamma_set is None:
        raise ConfigError("the restricted command requires a gamma_set section")
    f = closedform.solve_f(cfg.model, cfg.quadrature_nodes)
    rsol = restricted.restricted_saddle(cfg.model, f, cfg.gamma_set)
    g_res = restricted.restricted_g(cfg.model, f, cfg.gamma_set)
    rsol.eta_star.to_csv(_out(cfg, "restricted_eta_star.csv"))
    rsol.pi_star.to_csv(_out(cfg, "restricted_pi_star.csv"))
    rsol.objective.to_csv(_out(cfg, "restricted_objective.csv"))
    g_res.to_csv(_out(cfg, "restricted_g.csv"))
    report = restricted.check_isaacs_equality(
        cfg.model, f, g_res, cfg.gamma_set,
        eta_points=cfg.isaacs_eta_points, pi_points=cfg.isaacs_pi_points,
        t_points=cfg.grid.t_points, r_points=cfg.grid.r_points,
        r_lo=cfg.grid.r_lo, r_hi=cfg.grid.r_hi,
        pi_halfwidth=cfg.grid.pi_halfwidth)
    _write_json(_out(cfg, "restricted.json"), {
        "config_hash": cfg.config_hash,
        "constraint_active_fraction": float(np.mean(rsol.active)),
        "isaacs": {
            "max_abs_gap": report.max_abs_gap,
            "max_abs_value": report.max_abs_value,
            "passed": report.passed,
        },
    })
    if not report.passed:
        print(f"Isaacs equality check failed: gap={report.max_abs_gap:.3e} "
              f"value={report.max_abs_value:.3e}", file=sys.stderr)
        return EXIT_CERTIFICATION_FAILED
    return EXIT_OK


_COMMANDS = {
    "solve": cmd_solve,
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "restricted": cmd_restricted,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustrate",
        description="Worst-case portfolio game under a Hull-White short rate")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("solve", "solve f, g and the saddle strategies; write CSV/JSON"),
            ("certify", "grid-certify the saddle inequalities"),
            ("simulate", "Monte Carlo validation of the game value"),
            ("restricted", "solve the game with the kernel confined to Gamma")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to JSON config")
        cmd.add_argument("--output", help="output directory override")
        cmd.add_argument("--paths", type=int, help="simulation path override")
        cmd.add_argument("--seed", type=int, help="simulation seed override")
        cmd.add_argument("--nodes", type=int,
                         help="quadrature node override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"output": args.output, "paths": args.paths,
                 "seed": args.seed, "nodes": args.nodes}
    try:
        cfg = load_run_config(args.config, overrides)
        violations = validate_model(cfg.model)
        if violations:
            for v in violations:
                print(f"config invalid -- {v}", file=sys.stderr)
            return EXIT_CONFIG_INVALID
        return _COMMANDS[args.command](cfg)
    except (ConfigError, InvalidModelError) as exc:
        print(f"config invalid -- {exc}", file=sys.stderr)
        return EXIT_CONFIG_INVALID
    except BudgetExceededError as exc:
        print(f"budget exceeded -- {exc}", file=sys.stderr)
        return EXIT_BUDGET_EXCEEDED


if __name__ == "__main__":
    sys.exit(main())
