"""Command-line entry point: ``backhaul <subcommand> [options]``.

Exit codes: 0 success, 2 bad arguments or config, 3 solver failures above
``--failure-threshold`` (or a single-run solver that did not converge).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .admission import admit_saps, admit_users, exhaustive_search
from .finite import DivergenceError, SolverOptions, kkt_residuals, solve_l1
from .harness import (COMPARE_HEADER, LARGE_HEADER, METHODS, ExperimentSpec, admission_report,
                      compare_large_vs_mc, comparison_rows, emit_trace, gen_user_problem,
                      large_solution_rows, load_experiment_config, realize_channel, realize_layout,
                      run_experiment, trial_seed, write_csv, _jsonable)
from .beamforming import downlink_sinr
from .large_system import solve_l1_large
from .model import Scenario, ScenarioConfig, linear_to_db, watts_to_dbm

EXIT_CONFIG = 2
EXIT_SOLVER = 3

_DEFAULT_SCENARIO = {"M": 4, "N": 8, "P_dBm": 30.0, "noise_dBm": -93.98, "gamma_dB": 10.0}


class ConfigError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario JSON (defaults: M=4, N=8, cellular)")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--epsilon", type=float, default=1e-5, help="stop when max n_i|dq_i| <= this")
    common.add_argument("--max-iters", type=int, default=10000)
    common.add_argument("--layout", type=int, default=0, help="layout index for single runs")
    common.add_argument("--trial", type=int, default=0, help="trial index for single runs")
    common.add_argument("--trials", type=int, help="Monte Carlo realizations per layout")
    common.add_argument("--layouts", type=int, help="number of layouts")
    common.add_argument("--trace", action="store_true", help="write the iteration trace (solvers)")

    p = argparse.ArgumentParser(prog="backhaul", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-scenario", parents=[common], help="draw layouts and large-scale gains")
    sub.add_parser("solve-finite", parents=[common], help="finite-system solver on one realization")
    sub.add_parser("solve-large", parents=[common], help="asymptotic solver on the large-scale gains")

    sub.add_parser("admit", parents=[common], help="iterative SAP removal on one realization")
    sub.add_parser("exhaustive", parents=[common], help="exhaustive SAP search on one realization")
    sub.add_parser("user-admit", parents=[common], help="small-cell user admission on one layout")

    sub.add_parser("compare-large-mc", parents=[common],
                   help="asymptotic p/M and nu against Monte Carlo means (default 100 trials)")

    m = sub.add_parser("monte-carlo", parents=[common], help="seeded campaign over layouts x trials")
    m.add_argument("--method", action="append", choices=METHODS,
                   help="repeat for several methods (default: finite)")
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--failure-threshold", type=float, default=0.0,
                   help="largest tolerated fraction of failed rows")
    return p


def _load(args):
    try:
        if args.config is None:
            scen, d, ul = load_experiment_config(dict(_DEFAULT_SCENARIO))
        else:
            scen, d, ul = load_experiment_config(args.config)
        if args.seed is not None:
            scen = Scenario(scen.config, scen.layout_params, args.seed)
        opts = SolverOptions(epsilon=args.epsilon, max_iters=args.max_iters)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return scen, d, ul, opts


def _spec(args, **kw):
    scen, d, ul, opts = _load(args)
    try:
        return ExperimentSpec(scen, seed=scen.seed, opts=opts, user_links=ul, d=d, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(path)


def _cmd_gen_scenario(args):
    spec = _spec(args, layouts=args.layouts or 1)
    rows = []
    for l in range(spec.layouts):
        cell, d = realize_layout(spec, l)
        for i in range(spec.config.N):
            x, y = (np.nan, np.nan) if cell is None else cell.sap_positions[i]
            rows.append((l, i, float(x), float(y), float(d[i]), float(linear_to_db(d[i]))))
    print(write_csv(args.out / "layouts.csv", ("layout", "sap", "x_m", "y_m", "d", "d_db"), rows))
    _write_json(args.out / "scenario.json", {"seed": spec.seed, "layouts": spec.layouts,
                                              "config": _config_record(spec.config),
                                              "layout_params": spec.scenario.layout_params})
    return 0


def _config_record(c: ScenarioConfig):
    return {"M": c.M, "N": c.N, "P_watts": c.P, "weights": c.w, "noise_watts": c.n, "gamma": c.gamma}


def _realization(args):
    spec = _spec(args)
    cell, d = realize_layout(spec, args.layout)
    return spec, cell, d, realize_channel(spec, d, args.layout, args.trial)


def _cmd_solve_finite(args):
    spec, _, _, ch = _realization(args)
    cfg = spec.config
    st = solve_l1(ch, cfg, spec.opts, trace=args.trace)
    sinr = downlink_sinr(ch, st.U, st.p, cfg.n)
    _write_json(args.out / "solution.json", {
        "converged": st.converged, "iterations": st.iterations, "delta": st.delta,
        "q": st.q, "nu": st.nu, "mu": st.mu, "x": st.x,
        "p_dbm": watts_to_dbm(np.maximum(st.p / cfg.M, 1e-300)), "sinr_db": linear_to_db(sinr),
        "kkt_residuals": kkt_residuals(st, ch, cfg).as_dict(), "notes": list(st.notes)})
    if args.trace:
        emit_trace(st.trace, args.out / "trace.csv")
        print(args.out / "trace.csv")
    return 0 if st.converged else EXIT_SOLVER


def _cmd_solve_large(args):
    spec = _spec(args)
    _, d = realize_layout(spec, args.layout)
    sol = solve_l1_large(d, spec.config, spec.opts, trace=args.trace)
    print(write_csv(args.out / "large_solution.csv", LARGE_HEADER,
                    large_solution_rows(sol, d, spec.config)))
    _write_json(args.out / "large_summary.json", {
        "converged": sol.converged, "iterations": sol.iterations, "mu": sol.mu,
        "all_supportable": bool(sol.max_gap <= 1e-6), "x": sol.x})
    if args.trace:
        emit_trace(sol.trace, args.out / "trace.csv")
        print(args.out / "trace.csv")
    return 0 if sol.converged else EXIT_SOLVER


def _cmd_admit(args, search):
    spec, _, _, ch = _realization(args)
    try:
        out = search(ch, spec.config, spec.opts, spec.x_tol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _write_json(args.out / "admission.json", admission_report(out, ch, spec.config))
    return 0


def _cmd_user_admit(args):
    spec = _spec(args)
    cell, _ = realize_layout(spec, args.layout)
    if cell is None:
        raise ConfigError("user-admit needs a cellular layout; drop large_scale_gains")
    prob = gen_user_problem(cell, spec.config.n, trial_seed(spec.seed, 3, args.layout, args.trial),
                            spec.user_links)
    out = admit_users(prob, spec.opts, x_tol=spec.x_tol)
    _write_json(args.out / "user_admission.json", admission_report(out, None, spec.config, prob))
    return 0


def _cmd_compare(args):
    spec = _spec(args)
    _, d = realize_layout(spec, args.layout)
    trials = args.trials or 100
    res = compare_large_vs_mc(d, spec.config, trials, spec.seed, spec.opts)
    print(write_csv(args.out / "compare_large_mc.csv", COMPARE_HEADER, comparison_rows(res)))
    _write_json(args.out / "compare_summary.json", {
        "trials": trials, "failures": res["failures"], "mu_large": res["mu_large"],
        "max_rel_err_p_over_M": float(np.nanmax(res["p_over_M_rel_err"])),
        "max_rel_err_nu": float(np.nanmax(res["nu_rel_err"]))})
    return 0 if res["failures"] == 0 else EXIT_SOLVER


def _cmd_monte_carlo(args):
    spec = _spec(args, methods=tuple(args.method or ("finite",)), trials=args.trials or 1,
                 layouts=args.layouts or 1, workers=args.workers)
    rows, summary = run_experiment(spec, args.out)
    for m, s in summary["methods"].items():
        print(f"{m}: rows={s['rows']} failures={s['failures']} admitted_mean={s['admitted_mean']}")
    failed = sum(not r.ok for r in rows) / len(rows)
    return 0 if failed <= args.failure_threshold else EXIT_SOLVER


_COMMANDS = {
    "gen-scenario": _cmd_gen_scenario,
    "solve-finite": _cmd_solve_finite,
    "solve-large": _cmd_solve_large,
    "admit": lambda a: _cmd_admit(a, admit_saps),
    "exhaustive": lambda a: _cmd_admit(a, exhaustive_search),
    "user-admit": _cmd_user_admit,
    "compare-large-mc": _cmd_compare,
    "monte-carlo": _cmd_monte_carlo,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
