"""Primal-dual fixed-point solver for the l1-relaxed SAP admission problem.

Minimises ``sum_i x_i`` subject to ``SINR_i >= gamma_i / (1 + x_i)`` and the
weighted budget ``sum_i w_i p_i / M <= P`` by iterating on the dual uplink
powers ``q``, the SINR-constraint multipliers ``nu`` and the budget
multiplier ``mu``. Downlink powers come out in closed form, so no
uplink-to-downlink power mapping is needed.

One iteration (``G`` is the equivalent channel ``|h_i^H u_j|^2``)::

    q_old = q
    q_bar_i = M gamma_i / (max(nu_i, 1) * h_i^H C_i(q)^{-1} h_i)
    q_bar  *= M P / (n . q_bar)
    q = (q_bar + q_old) / 2
    u_i = MMSE receiver for q;  G from u
    mu = sum_i M gamma_i nu_i w_i / (max(nu_i, 1) G_ii q_i P)
    p_i / M = M gamma_i nu_i / (max(nu_i, 1) G_ii q_i mu)
    nu_i = (sum_{j != i} G_ij p_j / M + n_i) mu q_i / M

``max(nu_i, 1)`` stands where the optimality conditions have ``1 + x_i``;
the two agree at the solution because ``x_i = max(nu_i - 1, 0)``. Keep the
``max`` form: replacing it by ``nu_i`` changes the iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .beamforming import (
    downlink_sinr,
    equivalent_channel,
    mmse_solve,
    normalize_beamformers,
    sinr_from_gains,
)
from .model import Channel, ScenarioConfig

__all__ = [
    "SolverOptions",
    "SolverState",
    "TraceRow",
    "DivergenceError",
    "KKTResiduals",
    "solve_l1",
    "solve_l1_fixed_gain",
    "kkt_residuals",
    "maxmin_ratio",
    "max_min_sinr",
]

_DIVERGENCE_FACTOR = 1e12
_NU_REPORT = 1e-12
# all-feasible runs drive nu geometrically to zero; the nu recursion is
# homogeneous while every nu_i < 1, so rescaling before underflow is exact
_NU_FLOOR = 1e-150


class DivergenceError(RuntimeError):
    """Raised when an uplink power leaves the ``1e12 * M P / n_i`` box."""


@dataclass(frozen=True)
class SolverOptions:
    """Stopping rule and iteration controls.

    ``epsilon`` bounds ``max_i n_i |q_i - q_old_i|``; with unit noise this is
    the plain change in ``q``. Weighting by the noise makes the rule
    invariant to expressing powers in watts or in noise units.
    """

    epsilon: float = 1e-5
    max_iters: int = 10000
    averaging: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    q: np.ndarray
    nu: np.ndarray
    p: np.ndarray
    mu: float
    delta: float


@dataclass(frozen=True)
class SolverState:
    """Final iterate. ``p`` and ``q`` are scaled powers (actual power is
    ``p_i / M``); ``G`` is the equivalent channel the last ``mu``, ``p`` and
    ``nu`` were computed with; ``U`` is ``None`` for fixed-gain runs."""

    q: np.ndarray
    nu: np.ndarray
    mu: float
    x: np.ndarray
    p: np.ndarray
    U: Optional[np.ndarray]
    G: np.ndarray
    iterations: int
    converged: bool
    delta: float
    trace: Optional[list] = None
    notes: tuple = field(default=())

    @property
    def max_gap(self) -> float:
        return float(np.max(self.x)) if self.x.size else 0.0


def _dual_update(G, q, nu, config: ScenarioConfig):
    """Budget multiplier, downlink powers and new ``nu`` for fixed ``G, q``."""
    M = config.M
    Gd = np.diag(G)
    f = M * config.gamma * nu / (np.maximum(nu, 1.0) * Gd * q)
    mu = float(f @ config.w / config.P)
    p_over_M = f / mu
    interference = G @ p_over_M - Gd * p_over_M
    nu_new = (interference + config.n) * mu * q / M
    return mu, M * p_over_M, nu_new


def _iterate(config, opts, q_map, gains, trace):
    """Shared driver. ``q_map(q, nu)`` returns the unnormalised ``q_bar``;
    ``gains(q)`` returns ``(G, U)`` for the averaged ``q``."""
    M, P, n = config.M, config.P, config.n
    q = np.full(config.N, M * P / n.sum())
    nu = np.ones(config.N)
    mu = np.nan
    p = np.full(config.N, M * P / config.w.sum())
    G = U = None
    notes = []
    cap = _DIVERGENCE_FACTOR * M * P / n
    rows = [] if trace else None
    if trace:
        rows.append(TraceRow(0, q.copy(), nu.copy(), p.copy(), mu, np.nan))
    delta = np.inf
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        q_old = q
        q_bar = q_map(q, nu)
        q_bar = q_bar * (M * P / (n @ q_bar))
        q = 0.5 * (q_bar + q_old) if opts.averaging else q_bar
        if np.any(q > cap):
            raise DivergenceError(
                f"uplink power left the bounded region at iteration {it}: "
                f"max q*n/(MP) = {np.max(q * n) / (M * P):.3g}"
            )
        G, U = gains(q)
        mu, p, nu = _dual_update(G, q, nu, config)
        if not (np.all(q > 0) and np.all(nu > 0) and mu > 0):
            raise FloatingPointError(f"lost positivity of (q, nu, mu) at iteration {it}")
        if np.max(nu) < 1.0 and np.min(nu) < _NU_REPORT and not notes:
            notes.append(f"nu below {_NU_REPORT:g} from iteration {it}; all SAPs supportable")
        if np.max(nu) < _NU_FLOOR:
            nu = nu / np.max(nu)
        delta = float(np.max(n * np.abs(q - q_old)))
        if trace:
            rows.append(TraceRow(it, q.copy(), nu.copy(), p.copy(), mu, delta))
        if delta <= opts.epsilon:
            converged = True
            break
    if not converged:
        warnings.warn(f"no convergence in {opts.max_iters} iterations (last change {delta:.3g})",
                      RuntimeWarning, stacklevel=3)
    x = np.maximum(nu - 1.0, 0.0)
    return SolverState(q=q, nu=nu, mu=mu, x=x, p=p, U=U, G=G, iterations=it,
                       converged=converged, delta=delta, trace=rows, notes=tuple(notes))


def solve_l1(channel: Channel, config: ScenarioConfig, opts: SolverOptions | None = None,
             trace: bool = False) -> SolverState:
    """Jointly optimise beamformers, downlink powers and SINR gaps.

    Starts from uniform ``q`` (meeting the uplink budget with equality) and
    ``nu = 1``. With ``trace=True`` the returned state carries one
    :class:`TraceRow` per iteration plus the starting point.
    """
    opts = opts or SolverOptions()
    if (channel.N, channel.M) != (config.N, config.M):
        raise ValueError(
            f"channel is {channel.N}x{channel.M} but config is N={config.N}, M={config.M}")
    M, gamma, w = config.M, config.gamma, config.w
    cache = {}

    def solve(q):
        X, s = mmse_solve(channel, q, w)
        cache["s"] = s
        return X

    solve(np.full(config.N, M * config.P / config.n.sum()))

    def q_map(q, nu):
        return M * gamma / (np.maximum(nu, 1.0) * cache["s"])

    def gains(q):
        U = normalize_beamformers(solve(q))
        return equivalent_channel(channel, U), U

    return _iterate(config, opts, q_map, gains, trace)


def solve_l1_fixed_gain(G, config: ScenarioConfig, opts: SolverOptions | None = None,
                        trace: bool = False) -> SolverState:
    """Same iteration with the equivalent channel frozen at ``G``.

    Solves the scalar-gain problem
    ``min sum x  s.t.  (p_i/M) G_ii / (sum_{j!=i} (p_j/M) G_ij + n_i) >= gamma_i/(1+x_i),
    sum w_i p_i / M <= P``. The uplink step uses the closed form
    ``q_bar_i = M gamma_i (sum_{j!=i} G_ji q_j / M + w_i) / (max(nu_i, 1) G_ii)``.
    """
    opts = opts or SolverOptions()
    G = np.asarray(G, dtype=float)
    if G.shape != (config.N, config.N):
        raise ValueError(f"G must be {config.N}x{config.N}")
    if np.any(G < 0) or np.any(np.diag(G) <= 0):
        raise ValueError("gains must be nonnegative with positive diagonal")
    M, gamma, w = config.M, config.gamma, config.w
    Gd = np.diag(G)

    def q_map(q, nu):
        ul_interference = G.T @ q / M - Gd * q / M
        return M * gamma * (ul_interference + w) / (np.maximum(nu, 1.0) * Gd)

    return _iterate(config, opts, q_map, lambda q: (G, None), trace)


@dataclass(frozen=True)
class KKTResiduals:
    """Relative residuals of the optimality system, one per equation."""

    gap: float          # x = max(nu - 1, 0)
    dual_balance: float  # M nu_i / q_i = sum_j M G_ij gamma_j nu_j / ((1+x_j) G_jj q_j) + mu n_i
    uplink_sinr: float   # (1+x_i) G_ii q_i / (M gamma_i) = sum_j G_ji q_j / M + w_i
    uplink_power: float  # sum n_i q_i / M = P
    downlink_sinr: float  # (1+x_i) G_ii p_i / (M gamma_i) = sum_j G_ij p_j / M + n_i
    downlink_power: float  # sum w_i p_i / M = P
    degenerate: bool = False

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d.pop("degenerate")
        return d

    def max(self) -> float:
        return max(self.as_dict().values())


def _rel(lhs, rhs) -> float:
    lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    return float(np.max(np.abs(lhs - rhs) / np.abs(lhs)))


def kkt_residuals(state: SolverState, channel: Channel | None, config: ScenarioConfig) -> KKTResiduals:
    """Evaluate the optimality conditions at ``state``.

    ``G`` is rebuilt from ``state.U`` and ``channel``; pass ``channel=None``
    to use ``state.G`` (fixed-gain runs). Each residual is the max over SAPs
    of ``|lhs - rhs| / |lhs|``; the gap residual is normalised by ``1 + x``.

    When every ``nu_i < 1`` all SAPs are supportable and the optimal
    multipliers are ``nu = 0, mu = 0`` (the iteration drives ``nu`` to zero
    geometrically). The equalities then no longer bind: the SINR rows are
    checked as the inequalities ``SINR >= gamma / (1 + x)`` (violation only),
    the stationarity row holds for the zero multipliers and is reported as 0,
    and the result is flagged ``degenerate``.
    """
    if channel is not None and state.U is not None:
        G = equivalent_channel(channel, state.U)
    else:
        G = np.asarray(state.G, dtype=float)
    M, P = config.M, config.P
    gamma, w, n = config.gamma, config.w, config.n
    q, nu, mu, x, p = state.q, state.nu, state.mu, state.x, state.p
    Gd = np.diag(G)
    off = G - np.diag(Gd)

    gap = float(np.max(np.abs(x - np.maximum(nu - 1.0, 0.0)) / (1.0 + x)))
    ul_pow = _rel(n @ q / M, P)
    dl_pow = _rel(w @ p / M, P)
    ul_lhs, ul_rhs = (1.0 + x) * Gd * q / (M * gamma), off.T @ q / M + w
    dl_lhs, dl_rhs = (1.0 + x) * Gd * p / (M * gamma), off @ p / M + n
    if np.all(nu < 1.0):
        ul = float(np.max(np.maximum(ul_rhs - ul_lhs, 0.0) / ul_lhs))
        dl = float(np.max(np.maximum(dl_rhs - dl_lhs, 0.0) / dl_lhs))
        return KKTResiduals(gap, 0.0, ul, ul_pow, dl, dl_pow, degenerate=True)
    a = M * gamma * nu / ((1.0 + x) * Gd * q)
    dual = _rel(M * nu / q, off @ a + mu * n)
    return KKTResiduals(gap, dual, _rel(ul_lhs, ul_rhs), ul_pow, _rel(dl_lhs, dl_rhs), dl_pow)


def maxmin_ratio(state: SolverState, channel: Channel, config: ScenarioConfig):
    """Common SINR-to-target ratio of an all-supportable solution.

    Returns ``(r, deviation)`` with ``r = min_i SINR_i / gamma_i`` and
    ``deviation = max_i |SINR_i / gamma_i - r|``.
    """
    if np.any(state.x > 0):
        raise ValueError("maxmin_ratio needs a state with every SINR gap at zero")
    if state.U is None:
        sinr = sinr_from_gains(state.G, state.p, config.n, config.M)
    else:
        sinr = downlink_sinr(channel, state.U, state.p, config.n)
    ratio = sinr / config.gamma
    r = float(np.min(ratio))
    return r, float(np.max(ratio - r))


def max_min_sinr(channel: Channel, config: ScenarioConfig, opts: SolverOptions | None = None,
                 rtol: float = 1e-4, x_tol: float = 1e-6):
    """Largest ``r`` such that every ``SINR_i >= r gamma_i`` under the budget.

    When all targets are supportable, the solver already balances the ratios
    and ``r`` is read off directly. Otherwise the targets are scaled down by
    bisection on ``s`` (feasible iff every gap of the problem with targets
    ``s gamma`` is at most ``x_tol``) until the bracket is within ``rtol``.
    Returns ``(r, state)`` with ``state`` the balanced solution at the
    feasible end of the bracket.
    """
    opts = opts or SolverOptions()
    state = solve_l1(channel, config, opts)
    if state.max_gap <= x_tol:
        return maxmin_ratio(state, channel, config)[0], state
    lo, hi = 0.0, 1.0
    best = None
    s = 0.5
    while True:
        st = solve_l1(channel, config.replace(gamma=config.gamma * s), opts)
        if st.max_gap <= x_tol:
            lo, best = s, (s, st)
            if hi - lo <= rtol * lo:
                break
            s = 0.5 * (lo + hi)
        else:
            hi = s
            s = 0.5 * (lo + hi) if best is not None else s / 4
            if s < 1e-12:
                raise FloatingPointError("no feasible scaling of the targets found")
    s, st = best
    r, _ = maxmin_ratio(st, channel, config.replace(gamma=config.gamma * s))
    return r * s, st
