"""Seeded Monte Carlo campaigns and result files.

Every random quantity in a campaign is drawn from a
``numpy.random.SeedSequence`` keyed by ``(master seed, stream, layout[,
trial])``, so a run is a pure function of its :class:`ExperimentSpec` no
matter how trials are scheduled. Streams: SAP positions, shadowing,
small-scale fading, small-cell user links.

Result CSVs hold no timing data so that reruns are byte-identical; wall
times go to a separate ``timings.csv``.
"""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .admission import (X_TOL, AdmissionOutcome, UserAdmissionProblem, admit_saps, admit_users,
                        exhaustive_search)
from .beamforming import downlink_sinr, mmse_beamformers, sinr_from_gains
from .finite import SolverOptions, SolverState, TraceRow, max_min_sinr, solve_l1
from .large_system import (LargeSystemSolution, admit_saps_large, det_eq_direct_gain,
                           det_eq_uplink_sinr, phi_derivative, phi_fixed_point, solve_l1_large)
from .model import (CellLayout, Channel, Scenario, ScenarioConfig, db_to_linear,
                    dbm_to_watts, gen_channel, gen_layout, large_scale_gains, linear_to_db,
                    pathloss_db, scenario_from_dict, watts_to_dbm)

__all__ = [
    "METHODS",
    "UserLinkParams",
    "ExperimentSpec",
    "ResultRow",
    "trial_seed",
    "realize_layout",
    "realize_channel",
    "gen_user_problem",
    "run_experiment",
    "read_result_csv",
    "summarize",
    "compare_large_vs_mc",
    "comparison_rows",
    "det_eq_vs_mc",
    "emit_trace",
    "admission_report",
    "large_solution_rows",
    "write_csv",
    "load_experiment_config",
]

METHODS = ("finite", "large", "exhaustive", "user-admit", "maxmin-check")

# seed streams
_POS, _SHADOW, _FADING, _USERS = 0, 1, 2, 3


def trial_seed(master: int, stream: int, layout: int, trial: Optional[int] = None) -> np.random.SeedSequence:
    key = [int(master), stream, int(layout)] + ([] if trial is None else [int(trial)])
    if any(k < 0 for k in key):
        raise ValueError("seeds and indices must be nonnegative")
    return np.random.SeedSequence(key)


@dataclass(frozen=True)
class UserLinkParams:
    """Small-cell access links (SAP ``j`` to the user of SAP ``i``).

    Not part of the backhaul model; defaults follow a 3GPP picocell profile:
    pathloss ``140.7 + 36.7 log10(D[km])``, 6 dB shadowing, 24 dBm per SAP,
    Rayleigh fading, users uniform over the small-cell disk, targets uniform
    in dB over ``gamma_db_range``.
    """

    pathloss_intercept_db: float = 140.7
    pathloss_slope_db: float = 36.7
    shadowing_std: float = 6.0
    power_dbm: float = 24.0
    gamma_db_range: tuple = (4.3, 18.7)
    min_distance_m: float = 3.0


@dataclass(frozen=True)
class ExperimentSpec:
    """One campaign: ``methods`` run on ``layouts`` x ``trials`` realizations.

    ``d`` fixes the large-scale gains for every layout instead of drawing a
    cellular layout. ``workers > 1`` spreads layouts over processes.
    """

    scenario: Scenario
    methods: tuple = ("finite",)
    trials: int = 1
    layouts: int = 1
    seed: Optional[int] = None
    opts: SolverOptions = field(default_factory=SolverOptions)
    user_links: UserLinkParams = field(default_factory=UserLinkParams)
    d: Optional[tuple] = None
    x_tol: float = X_TOL
    workers: int = 1

    def __post_init__(self):
        methods = (self.methods,) if isinstance(self.methods, str) else tuple(self.methods)
        bad = [m for m in methods if m not in METHODS]
        if bad or not methods:
            raise ValueError(f"unknown method(s) {bad}; choose from {METHODS}")
        object.__setattr__(self, "methods", methods)
        if self.trials < 1 or self.layouts < 1:
            raise ValueError("trials and layouts must be >= 1")
        if self.seed is None:
            object.__setattr__(self, "seed", self.scenario.seed)
        if self.d is not None:
            d = tuple(float(v) for v in self.d)
            if len(d) != self.scenario.config.N or min(d) <= 0:
                raise ValueError("d needs one positive gain per SAP")
            object.__setattr__(self, "d", d)

    @property
    def config(self) -> ScenarioConfig:
        return self.scenario.config


@dataclass(frozen=True)
class ResultRow:
    """Outcome of one method on one realization. Per-SAP tuples have length
    ``N`` and hold NaN where a value does not apply (for instance the power
    of a SAP that was not admitted)."""

    layout: int
    trial: int
    method: str
    status: str
    admitted: int
    admitted_set: tuple
    sum_power_dbm: float
    min_sinr_ratio: float
    ratio_spread: float
    iterations: int
    solver_calls: int
    x: tuple
    p_dbm: tuple
    sinr_db: tuple
    wall_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"


_CSV_FIELDS = ("layout", "trial", "method", "status", "admitted", "admitted_set", "sum_power_dbm",
               "min_sinr_ratio", "ratio_spread", "iterations", "solver_calls", "x", "p_dbm", "sinr_db")


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ";".join(_fmt(u) for u in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_floats(s: str) -> tuple:
    return tuple(float(v) for v in s.split(";")) if s else ()


def read_result_csv(path) -> list:
    """Inverse of the CSV writer (wall times read back as zero)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(ResultRow(
                layout=int(rec["layout"]), trial=int(rec["trial"]), method=rec["method"],
                status=rec["status"], admitted=int(rec["admitted"]),
                admitted_set=tuple(int(v) for v in rec["admitted_set"].split(";") if v),
                sum_power_dbm=float(rec["sum_power_dbm"]),
                min_sinr_ratio=float(rec["min_sinr_ratio"]),
                ratio_spread=float(rec["ratio_spread"]), iterations=int(rec["iterations"]),
                solver_calls=int(rec["solver_calls"]), x=_parse_floats(rec["x"]),
                p_dbm=_parse_floats(rec["p_dbm"]), sinr_db=_parse_floats(rec["sinr_db"])))
    return rows


def write_csv(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([_fmt(v) for v in r])
    return path


# realizations ---------------------------------------------------------------

def realize_layout(spec: ExperimentSpec, layout: int):
    """``(CellLayout or None, d)`` for one layout index."""
    if spec.d is not None:
        return None, np.array(spec.d)
    lay = gen_layout(spec.config, trial_seed(spec.seed, _POS, layout), **spec.scenario.layout_params)
    return lay, large_scale_gains(lay, trial_seed(spec.seed, _SHADOW, layout))


def realize_channel(spec: ExperimentSpec, d, layout: int, trial: int) -> Channel:
    return gen_channel(d, spec.config.M, trial_seed(spec.seed, _FADING, layout, trial))


def gen_user_problem(layout: CellLayout, noise, seed, params: UserLinkParams = UserLinkParams()):
    """One user per SAP, dropped uniformly in its small cell; returns a
    :class:`UserAdmissionProblem` with ``g[i, j]`` the gain from SAP ``j``
    to user ``i``."""
    rng = np.random.default_rng(seed)
    N = layout.N
    rmin2 = params.min_distance_m**2
    r = np.sqrt(rmin2 + rng.uniform(size=N) * (layout.small_cell_radius**2 - rmin2))
    theta = rng.uniform(0, 2 * np.pi, N)
    users = layout.sap_positions + np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    dist = np.linalg.norm(users[:, None, :] - layout.sap_positions[None, :, :], axis=2)
    dist = np.maximum(dist, params.min_distance_m) / 1000.0
    loss = pathloss_db(dist, params.pathloss_intercept_db, params.pathloss_slope_db)
    shadow = params.shadowing_std * rng.standard_normal((N, N))
    fading = rng.exponential(size=(N, N))
    g = 10.0 ** (-(loss + shadow) / 10.0) * fading
    lo, hi = params.gamma_db_range
    gamma = db_to_linear(rng.uniform(lo, hi, N))
    noise = np.broadcast_to(np.asarray(noise, dtype=float), (N,))
    return UserAdmissionProblem(g, np.full(N, dbm_to_watts(params.power_dbm)), noise, gamma)


# one realization -----------------------------------------------------------

def _nan_tuple(N):
    return (math.nan,) * N


def _row_from_powers(layout, trial, method, N, idx, p_actual, sinr, gamma, x_all, iterations,
                     calls, status="ok"):
    """Pack per-SAP values given on the admitted index list ``idx``."""
    p_dbm = np.full(N, np.nan)
    sinr_db = np.full(N, np.nan)
    if len(idx):
        p_dbm[idx] = watts_to_dbm(np.maximum(p_actual, 1e-300))
        sinr_db[idx] = linear_to_db(sinr)
        ratio = sinr / gamma
        rmin = float(np.min(ratio))
        spread = float(np.max(ratio) / rmin - 1.0)
        total = float(np.sum(p_actual))
        sum_dbm = float(watts_to_dbm(total)) if total > 0 else -math.inf
    else:
        rmin = spread = sum_dbm = math.nan
    return ResultRow(layout, trial, method, status, len(idx), tuple(int(i) for i in idx), sum_dbm,
                     rmin, spread, int(iterations), int(calls), tuple(float(v) for v in x_all),
                     tuple(float(v) for v in p_dbm), tuple(float(v) for v in sinr_db))


def _gaps_from_outcome(out: AdmissionOutcome, N):
    x = np.full(N, np.nan)
    for i, xi in out.removal_order:
        x[i] = xi
    if out.final_state is not None:
        x[list(out.admitted)] = out.final_state.x
    return x


def _backhaul_row(layout, trial, method, channel, config, idx, state: Optional[SolverState], x_all,
                  calls):
    N = config.N
    if state is None or not len(idx):
        return _row_from_powers(layout, trial, method, N, [], None, None, None, x_all, 0, calls)
    sub = config.subset(idx)
    sinr = downlink_sinr(channel.subset(idx), state.U, state.p, sub.n)
    status = "ok" if state.converged else "not-converged"
    return _row_from_powers(layout, trial, method, N, list(idx), state.p / config.M, sinr, sub.gamma,
                            x_all, state.iterations, calls, status)


def _run_method(spec, method, layout, trial, cell, d, channel, large_cache):
    config = spec.config
    N = config.N
    if method in ("finite", "exhaustive"):
        search = admit_saps if method == "finite" else exhaustive_search
        out = search(channel, config, spec.opts, spec.x_tol)
        return _backhaul_row(layout, trial, method, channel, config, list(out.admitted),
                             out.final_state, _gaps_from_outcome(out, N), out.solver_calls)
    if method == "large":
        if "out" not in large_cache:
            large_cache["out"] = admit_saps_large(d, config, spec.opts, spec.x_tol)
        out = large_cache["out"]
        idx = list(out.admitted)
        x_all = _gaps_from_outcome(out, N)
        if not idx:
            return _backhaul_row(layout, trial, method, channel, config, [], None, x_all, out.solver_calls)
        # realized max-min power control on the asymptotically chosen set
        _, state = max_min_sinr(channel.subset(idx), config.subset(idx), spec.opts, x_tol=spec.x_tol)
        return _backhaul_row(layout, trial, method, channel, config, idx, state, x_all,
                             out.solver_calls + 1)
    if method == "maxmin-check":
        state = solve_l1(channel, config, spec.opts)
        return _backhaul_row(layout, trial, method, channel, config, list(range(N)), state, state.x, 1)
    if method == "user-admit":
        if cell is None:
            raise ValueError("user-admit needs a cellular layout (no fixed d)")
        prob = gen_user_problem(cell, config.n, trial_seed(spec.seed, _USERS, layout, trial),
                                spec.user_links)
        out = admit_users(prob, spec.opts, x_tol=spec.x_tol)
        idx = list(out.admitted)
        x_all = _gaps_from_outcome(out, N)
        if not idx:
            return _row_from_powers(layout, trial, method, N, [], None, None, None, x_all, 0,
                                    out.solver_calls)
        st = out.final_state
        sub = prob.subset(idx)
        sinr = sinr_from_gains(sub.g, st.p, sub.n, 1)
        if not np.all(st.p <= sub.P_per * (1 + 1e-4)):
            status = "caps-not-met"
        else:
            status = "ok" if st.converged else "not-converged"
        return _row_from_powers(layout, trial, method, N, idx, st.p, sinr, sub.gamma, x_all,
                                out.outer_iterations, out.solver_calls, status)
    raise ValueError(method)


def _failed_row(layout, trial, method, N, exc):
    msg = f"error:{type(exc).__name__}"
    return ResultRow(layout, trial, method, msg, 0, (), math.nan, math.nan, math.nan, 0, 0,
                     _nan_tuple(N), _nan_tuple(N), _nan_tuple(N))


def _run_layout(spec: ExperimentSpec, layout: int) -> list:
    cell, d = realize_layout(spec, layout)
    rows = []
    large_cache = {}
    for trial in range(spec.trials):
        channel = realize_channel(spec, d, layout, trial)
        for method in spec.methods:
            t0 = time.perf_counter()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                try:
                    row = _run_method(spec, method, layout, trial, cell, d, channel, large_cache)
                except Exception as exc:  # recorded, not fatal
                    row = _failed_row(layout, trial, method, spec.config.N, exc)
            wall = 1e3 * (time.perf_counter() - t0)
            rows.append(ResultRow(**{**asdict(row), "wall_ms": wall}))
    return rows


# campaign ------------------------------------------------------------------

def _stats(values):
    v = np.asarray([u for u in values if math.isfinite(u)], dtype=float)
    if v.size == 0:
        return None, None
    return float(np.mean(v)), float(np.std(v))


def summarize(rows) -> dict:
    """Per-method aggregates. Means and (population) standard deviations are
    over rows with status ``ok``; the counts include every row."""
    out = {}
    for method in dict.fromkeys(r.method for r in rows):
        rs = [r for r in rows if r.method == method]
        good = [r for r in rs if r.ok]
        adm_mean, adm_std = _stats([float(r.admitted) for r in good])
        pw_mean, pw_std = _stats([r.sum_power_dbm for r in good])
        rmin_mean, rmin_std = _stats([r.min_sinr_ratio for r in good])
        it_mean, _ = _stats([float(r.iterations) for r in good])
        out[method] = {
            "rows": len(rs),
            "failures": len(rs) - len(good),
            "admitted_mean": adm_mean,
            "admitted_std": adm_std,
            "sum_power_dbm_mean": pw_mean,
            "sum_power_dbm_std": pw_std,
            "min_sinr_ratio_mean": rmin_mean,
            "min_sinr_ratio_std": rmin_std,
            "min_sinr_ratio_min": min((r.min_sinr_ratio for r in good
                                       if math.isfinite(r.min_sinr_ratio)), default=None),
            "iterations_mean": it_mean,
        }
    return out


def _jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def _spec_record(spec: ExperimentSpec) -> dict:
    c = spec.config
    return {
        "M": c.M, "N": c.N, "P_watts": c.P, "weights": c.w, "noise_watts": c.n,
        "gamma": c.gamma, "layout_params": dict(spec.scenario.layout_params),
        "methods": list(spec.methods), "trials": spec.trials, "layouts": spec.layouts,
        "seed": spec.seed, "epsilon": spec.opts.epsilon, "max_iters": spec.opts.max_iters,
        "x_tol": spec.x_tol, "d": spec.d, "user_links": asdict(spec.user_links),
    }


def run_experiment(spec: ExperimentSpec, out_dir=None):
    """Run the campaign; returns ``(rows, summary)`` and, with ``out_dir``,
    writes ``results_<method>.csv``, ``timings.csv`` and ``summary.json``.

    Rows are sorted by ``(layout, trial, method order)`` before anything is
    written, so the files do not depend on ``workers``.
    """
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_run_layout, [spec] * spec.layouts, range(spec.layouts)))
    else:
        chunks = [_run_layout(spec, l) for l in range(spec.layouts)]
    order = {m: k for k, m in enumerate(spec.methods)}
    rows = sorted((r for c in chunks for r in c), key=lambda r: (r.layout, r.trial, order[r.method]))
    summary = {"spec": _jsonable(_spec_record(spec)), "methods": _jsonable(summarize(rows))}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for m in spec.methods:
            write_csv(out / f"results_{m}.csv", _CSV_FIELDS,
                      ([getattr(r, f) for f in _CSV_FIELDS] for r in rows if r.method == m))
        write_csv(out / "timings.csv", ("layout", "trial", "method", "wall_ms"),
                  ((r.layout, r.trial, r.method, r.wall_ms) for r in rows))
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")
    return rows, summary


# large system vs Monte Carlo -------------------------------------------------

def compare_large_vs_mc(d, config: ScenarioConfig, trials: int, seed: int = 0,
                        opts: SolverOptions | None = None) -> dict:
    """Asymptotic ``p_i/M`` and ``nu_i`` against finite-solver Monte Carlo.

    Runs :func:`solve_l1_large` once on ``d`` and :func:`solve_l1` on
    ``trials`` Rayleigh draws ``gen_channel(d, M, SeedSequence([seed,
    stream, 0, t]))``. Returns a dict of per-SAP arrays (``*_large``,
    ``*_mc_mean``, ``*_mc_std``, ``*_rel_err``) plus ``failures``.
    """
    opts = opts or SolverOptions()
    d = np.asarray(d, dtype=float)
    large = solve_l1_large(d, config, opts)
    P_mc, NU_mc, X_mc = [], [], []
    failures = 0
    for t in range(trials):
        ch = gen_channel(d, config.M, trial_seed(seed, _FADING, 0, t))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            try:
                st = solve_l1(ch, config, opts)
            except (FloatingPointError, ArithmeticError, RuntimeError):
                failures += 1
                continue
        if not st.converged:
            failures += 1
            continue
        P_mc.append(st.p / config.M)
        NU_mc.append(st.nu)
        X_mc.append(st.x)
    P_mc, NU_mc, X_mc = np.array(P_mc), np.array(NU_mc), np.array(X_mc)
    res = {"d": d, "failures": failures, "trials": trials, "large_converged": large.converged,
           "mu_large": large.mu}
    for name, big, mc in (("p_over_M", large.p / config.M, P_mc), ("nu", large.nu, NU_mc),
                          ("x", large.x, X_mc)):
        mean = mc.mean(axis=0) if len(mc) else np.full(config.N, np.nan)
        std = mc.std(axis=0) if len(mc) else np.full(config.N, np.nan)
        res[f"{name}_large"] = big
        res[f"{name}_mc_mean"] = mean
        res[f"{name}_mc_std"] = std
        with np.errstate(divide="ignore", invalid="ignore"):
            res[f"{name}_rel_err"] = np.abs(big - mean) / np.abs(mean)
    return res


_COMPARE_COLUMNS = ("d", "p_over_M_large", "p_over_M_mc_mean", "p_over_M_mc_std", "p_over_M_rel_err",
                    "nu_large", "nu_mc_mean", "nu_mc_std", "nu_rel_err", "x_large", "x_mc_mean")


def comparison_rows(res: dict):
    """Rows ``(sap, *_COMPARE_COLUMNS)`` for a CSV writer."""
    for i in range(len(res["d"])):
        yield (i,) + tuple(float(res[c][i]) for c in _COMPARE_COLUMNS)


COMPARE_HEADER = ("sap",) + _COMPARE_COLUMNS


def det_eq_vs_mc(q, d, w, M: int, draws: int, seed: int = 0) -> dict:
    """Deterministic equivalents at fixed uplink powers against sample means.

    Per SAP: MMSE uplink SINR vs ``q_i d_i phi_i``; ``|h_i^H u_i|^2 / M``
    vs ``d_i phi_i^2 / (-phi'_i)``; and the interference ``sum_{j!=i}
    |h_i^H u_j|^2`` vs the sum of the per-pair limits
    ``d_i / (1 + q_i d_i phi_j)^2``.
    """
    q = np.asarray(q, dtype=float)
    d = np.asarray(d, dtype=float)
    N = d.size
    w = np.broadcast_to(np.asarray(w, dtype=float), (N,))
    phi = phi_fixed_point(q, d, w, M)
    dphi = phi_derivative(q, d, w, M, phi)
    cross = d[:, None] / (1.0 + np.outer(q * d, phi)) ** 2
    np.fill_diagonal(cross, 0.0)
    de = {"sinr": det_eq_uplink_sinr(q, d, phi), "direct": det_eq_direct_gain(d, phi, dphi),
          "cross": cross.sum(axis=1)}
    acc = {k: [] for k in de}
    for t in range(draws):
        ch = gen_channel(d, M, trial_seed(seed, _FADING, 0, t))
        U = mmse_beamformers(ch, q, w)
        G = np.abs(ch.H @ U) ** 2
        acc["sinr"].append(sinr_from_gains(G.T, q, w, M))
        acc["direct"].append(np.diag(G) / M)
        acc["cross"].append(G.sum(axis=1) - np.diag(G))
    out = {"phi": phi, "phi_prime": dphi}
    for k in de:
        mc = np.array(acc[k])
        out[f"{k}_de"] = de[k]
        out[f"{k}_mc_mean"] = mc.mean(axis=0)
        out[f"{k}_mc_std"] = mc.std(axis=0)
        out[f"{k}_rel_err"] = np.abs(de[k] - mc.mean(axis=0)) / mc.mean(axis=0)
    return out


# single-run reports --------------------------------------------------------------

def emit_trace(trace: Sequence[TraceRow], path=None):
    """Iteration-indexed CSV of ``q``, ``nu``, ``p``, ``mu``, the plain
    ``max|dq|`` and the noise-weighted change used by the stop rule.
    Returns ``(header, rows)``; writes ``path`` when given."""
    if not trace:
        raise ValueError("empty trace; run the solver with trace=True")
    N = len(trace[0].q)
    header = (["iteration", "max_abs_dq", "delta", "mu"] + [f"q_{i}" for i in range(N)]
              + [f"nu_{i}" for i in range(N)] + [f"p_{i}" for i in range(N)])
    rows = []
    prev = None
    for r in trace:
        dq = math.nan if prev is None else float(np.max(np.abs(r.q - prev)))
        prev = r.q
        rows.append([r.iteration, dq, float(r.delta), float(r.mu), *map(float, r.q),
                     *map(float, r.nu), *map(float, r.p)])
    if path is not None:
        write_csv(path, header, rows)
    return header, rows


def admission_report(out: AdmissionOutcome, channel: Optional[Channel], config: ScenarioConfig,
                     problem: Optional[UserAdmissionProblem] = None) -> dict:
    """JSON-ready admission result: admitted indices, removal order with the
    gaps, per-SAP powers in dBm and achieved SINRs in dB."""
    idx = list(out.admitted)
    rep = {
        "admitted": idx,
        "removal_order": [{"index": int(i), "x": float(x)} for i, x in out.removal_order],
        "solver_calls": out.solver_calls,
        "power_dbm": {},
        "sinr_db": {},
    }
    st = out.final_state
    if st is not None and idx:
        if problem is not None:
            sub = problem.subset(idx)
            p_actual = st.p
            sinr = sinr_from_gains(sub.g, st.p, sub.n, 1)
            rep["weights"] = [float(v) for v in out.weights]
            rep["outer_iterations"] = out.outer_iterations
        else:
            sub = config.subset(idx)
            p_actual = st.p / config.M
            sinr = downlink_sinr(channel.subset(idx), st.U, st.p, sub.n)
        rep["power_dbm"] = {str(i): float(watts_to_dbm(v)) for i, v in zip(idx, p_actual)}
        rep["sinr_db"] = {str(i): float(linear_to_db(v)) for i, v in zip(idx, sinr)}
    if out.notes:
        rep["notes"] = list(out.notes)
    return _jsonable(rep)


LARGE_HEADER = ("sap", "d", "q", "p_over_M", "p_dbm", "nu", "x", "phi", "sinr_db")


def large_solution_rows(sol: LargeSystemSolution, d, config: ScenarioConfig):
    """Per-SAP rows of an asymptotic solution, matching ``LARGE_HEADER``."""
    d = np.asarray(d, dtype=float)
    sinr = det_eq_uplink_sinr(sol.q, d, sol.phi)
    for i in range(config.N):
        p = sol.p[i] / config.M
        yield (i, float(d[i]), float(sol.q[i]), float(p), float(watts_to_dbm(p)), float(sol.nu[i]),
               float(sol.x[i]), float(sol.phi[i]), float(linear_to_db(sinr[i])))


# config files --------------------------------------------------------------------

def load_experiment_config(path_or_dict):
    """Scenario JSON plus two optional harness keys: ``large_scale_gains``
    (list of ``N`` linear gains, replaces the cellular layout) and
    ``user_links`` (overrides for :class:`UserLinkParams`). Returns
    ``(Scenario, d or None, UserLinkParams)``."""
    if isinstance(path_or_dict, (str, Path)):
        raw = json.loads(Path(path_or_dict).read_text(encoding="utf-8"))
    else:
        raw = dict(path_or_dict)
    d = raw.pop("large_scale_gains", None)
    ul = raw.pop("user_links", {}) or {}
    try:
        user_links = UserLinkParams(**{k: tuple(v) if isinstance(v, list) else v for k, v in ul.items()})
    except TypeError as exc:
        raise ValueError(f"bad user_links: {exc}") from None
    scen = scenario_from_dict(raw)
    if d is not None:
        d = tuple(float(v) for v in d)
        if len(d) != scen.config.N or min(d) <= 0:
            raise ValueError("large_scale_gains needs N positive values")
    return scen, d, user_links
