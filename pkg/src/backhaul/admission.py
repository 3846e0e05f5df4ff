"""Choosing which SAPs (or small-cell users) to serve.

* :func:`admit_saps` drops the SAP with the largest SINR gap and re-solves
  until every remaining gap is zero.
* :func:`exhaustive_search` is the exact maximum-cardinality oracle; it
  enumerates subsets largest first.
* :func:`admit_users` handles per-transmitter power caps (one user per SAP,
  scalar gains) by a projected-subgradient search over power weights on top
  of the fixed-gain solver, followed by the same removal rule.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .finite import SolverOptions, solve_l1, solve_l1_fixed_gain
from .model import Channel, ScenarioConfig

__all__ = [
    "X_TOL",
    "ES_MAX_N",
    "AdmissionOutcome",
    "UserAdmissionProblem",
    "iterative_removal",
    "admit_saps",
    "exhaustive_search",
    "admit_users",
]

X_TOL = 1e-6
ES_MAX_N = 16


@dataclass(frozen=True)
class AdmissionOutcome:
    """Admitted indices (ascending, in original numbering), the removals in
    the order they happened with the gap each SAP had when dropped, and the
    solver state on the admitted subset (``None`` if nothing was admitted)."""

    admitted: tuple
    removal_order: tuple
    final_state: Optional[object]
    solver_calls: int
    weights: Optional[np.ndarray] = None
    outer_iterations: int = 0
    notes: tuple = field(default=())

    @property
    def count(self) -> int:
        return len(self.admitted)


def iterative_removal(n_total: int, run: Callable[[list], object], x_tol: float = X_TOL) -> AdmissionOutcome:
    """Generic largest-gap removal loop.

    ``run(active)`` solves the problem restricted to the index list
    ``active`` and returns an object with an ``x`` array aligned with it.
    Ties in the largest gap go to the lowest original index.
    """
    active = list(range(n_total))
    removed = []
    calls = 0
    state = None
    while active:
        state = run(active)
        calls += 1
        x = np.asarray(state.x)
        if np.max(x) <= x_tol:
            break
        k = int(np.argmax(x))
        removed.append((active[k], float(x[k])))
        del active[k]
        state = None
    assert calls <= n_total
    return AdmissionOutcome(tuple(active), tuple(removed), state, calls)


def admit_saps(channel: Channel, config: ScenarioConfig, opts: SolverOptions | None = None,
               x_tol: float = X_TOL) -> AdmissionOutcome:
    """Iterative SAP removal driven by the finite-system solver."""
    opts = opts or SolverOptions()

    def run(active):
        return solve_l1(channel.subset(active), config.subset(active), opts)

    return iterative_removal(config.N, run, x_tol)


def exhaustive_search(channel: Channel, config: ScenarioConfig, opts: SolverOptions | None = None,
                      x_tol: float = X_TOL) -> AdmissionOutcome:
    """Largest supportable SAP subset by enumeration.

    Cardinalities are tried from ``N`` down; within one cardinality subsets
    come in lexicographic order and the first feasible one is returned. A
    subset is feasible when the finite-system solver leaves every gap at or
    below ``x_tol``. Cost grows as ``2^N`` solver runs.
    """
    if config.N > ES_MAX_N:
        raise ValueError(
            f"exhaustive search is limited to N <= {ES_MAX_N} (got {config.N}); use admit_saps")
    opts = opts or SolverOptions()
    calls = 0
    for k in range(config.N, 0, -1):
        for subset in itertools.combinations(range(config.N), k):
            idx = list(subset)
            state = solve_l1(channel.subset(idx), config.subset(idx), opts)
            calls += 1
            if state.max_gap <= x_tol:
                dropped = tuple((i, math.nan) for i in range(config.N) if i not in subset)
                return AdmissionOutcome(subset, dropped, state, calls)
    return AdmissionOutcome((), tuple((i, math.nan) for i in range(config.N)), None, calls)


@dataclass(frozen=True)
class UserAdmissionProblem:
    """Scalar-gain downlink among admitted small cells, one user each.

    ``g[i, j]`` is the gain from SAP ``j`` to user ``i``; ``P_per`` the
    per-SAP power caps in watts.
    """

    g: np.ndarray
    P_per: np.ndarray
    n: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        k = g.shape[0]
        if g.shape != (k, k):
            raise ValueError("g must be square")
        if np.any(g < 0) or np.any(np.diag(g) <= 0):
            raise ValueError("gains must be nonnegative with positive diagonal")
        object.__setattr__(self, "g", g)
        for name in ("P_per", "n", "gamma"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.ndim == 0:
                v = np.full(k, float(v))
            if v.shape != (k,) or np.any(v <= 0):
                raise ValueError(f"{name} must be positive with one entry per user")
            object.__setattr__(self, name, v)

    @property
    def size(self) -> int:
        return self.g.shape[0]

    def subset(self, idx: Sequence[int]) -> "UserAdmissionProblem":
        idx = np.asarray(idx, dtype=int)
        return UserAdmissionProblem(self.g[np.ix_(idx, idx)], self.P_per[idx],
                                    self.n[idx], self.gamma[idx])

    def weighted_config(self, w) -> ScenarioConfig:
        """Weighted-sum-power instance for weights ``w`` (``M = 1``, so the
        scaled powers are the actual powers)."""
        w = np.asarray(w, dtype=float)
        return ScenarioConfig(M=1, N=self.size, P=float(w @ self.P_per), w=w,
                              n=self.n, gamma=self.gamma)


def _harmonic(n: int) -> float:
    return 1.0 / n


def _min_power(problem: UserAdmissionProblem):
    """Componentwise-smallest powers meeting every target exactly, or
    ``None`` when the targets are jointly unreachable at any power.

    With ``D = diag(gamma_i / g_ii)`` and ``F`` the off-diagonal gains, the
    targets are met by some ``p >= 0`` iff ``rho(D F) < 1``, and then the
    smallest such ``p`` is ``(I - D F)^{-1} D n``.
    """
    g = problem.g
    D = problem.gamma / np.diag(g)
    A = D[:, None] * (g - np.diag(np.diag(g)))
    if np.max(np.abs(np.linalg.eigvals(A))) >= 1.0:
        return None
    return np.linalg.solve(np.eye(problem.size) - A, D * problem.n)


def _weight_search(problem: UserAdmissionProblem, opts: SolverOptions,
                   step: Callable[[int], float], max_outer: int, x_tol: float):
    """Projected subgradient over power weights. Returns
    ``(state, weights, outer_iterations, caps_met)``.

    The search also stops as soon as every gap is zero and the minimal
    powers for the targets fit under the caps; the returned state then
    carries those minimal powers.
    """
    w = np.ones(problem.size)
    prev_obj = None
    state = None
    for it in range(1, max_outer + 1):
        state = solve_l1_fixed_gain(problem.g, problem.weighted_config(w), opts)
        if state.max_gap <= x_tol:
            p_min = _min_power(problem)
            if p_min is not None and np.all(p_min <= problem.P_per * (1 + 1e-4)):
                return replace(state, p=p_min), w, it, True
        obj = float(np.sum(state.x))
        caps_met = bool(np.all(state.p <= problem.P_per * (1 + 1e-4)))
        if caps_met and prev_obj is not None and abs(obj - prev_obj) <= 1e-6:
            return state, w, it, True
        prev_obj = obj
        t = step(it)
        if not t > 0:
            raise ValueError("subgradient steps must be positive")
        # relative violation keeps the step independent of the power unit
        w = np.maximum(w + t * (state.p - problem.P_per) / problem.P_per, 0.0)
        # keep the weighted budget well defined
        w = np.maximum(w, 1e-12 * max(np.max(w), 1.0))
    return state, w, max_outer, bool(np.all(state.p <= problem.P_per * (1 + 1e-4)))


def admit_users(problem: UserAdmissionProblem, opts: SolverOptions | None = None,
                step: Callable[[int], float] | None = None, x_tol: float = X_TOL,
                max_outer: int = 500) -> AdmissionOutcome:
    """User admission under per-SAP power caps.

    For the current user set, the weights ``w`` start at one and move along
    ``w_i <- max(w_i + t_n (p_i - P_i) / P_i, 0)`` where ``p`` solves the
    weighted-sum-power problem with budget ``sum_i w_i P_i``. The loop stops
    once every ``p_i <= P_i (1 + 1e-4)`` and the total gap stops changing
    (``<= 1e-6``), or once all gaps vanish and the minimal powers that meet
    the targets fit under the caps (those powers are then reported), or
    after ``max_outer`` rounds. Then the user with the
    largest gap is dropped and the search restarts on the rest, until all
    gaps are at most ``x_tol``.
    """
    opts = opts or SolverOptions()
    step = step or _harmonic
    info = {"outer": 0, "w": None, "notes": []}

    def run(active):
        sub = problem.subset(active)
        state, w, outer, caps_met = _weight_search(sub, opts, step, max_outer, x_tol)
        info["outer"] += outer
        info["w"] = w
        if not caps_met:
            info["notes"].append(f"power caps not met after {max_outer} rounds for users {active}")
        return state

    out = iterative_removal(problem.size, run, x_tol)
    return AdmissionOutcome(out.admitted, out.removal_order, out.final_state, out.solver_calls,
                            weights=info["w"] if out.admitted else None,
                            outer_iterations=info["outer"], notes=tuple(info["notes"]))
