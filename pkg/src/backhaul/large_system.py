"""Large-antenna-array version of the admission solver.

As ``M, N`` grow at a fixed ratio, the MMSE uplink SINR and the equivalent
channel of a Rayleigh channel ``h_i = sqrt(d_i) h~_i`` concentrate around
deterministic values that depend only on the large-scale gains ``d`` and the
uplink powers ``q``:

* ``SINR_i -> q_i d_i phi_i`` with ``phi_i = 1 / (w_i + (1/M) sum_{j!=i}
  q_j d_j / (1 + q_j d_j phi_i))``;
* ``|h_i^H u_i|^2 / M -> d_i phi_i^2 / (-phi'_i)``, where ``phi'_i = -phi_i /
  (w_i + (1/M) sum_{j!=i} q_j d_j / (1 + q_j d_j phi_i)^2)``;
* ``|h_i^H u_j|^2 -> d_i / (1 + q_i d_i phi_j)^2`` for ``i != j``.

:func:`solve_l1_large` runs the finite-system iteration with these values in
place of the channel-dependent ones, so each iteration costs ``O(N^2)`` and
never touches an ``M x M`` matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .admission import X_TOL, AdmissionOutcome, iterative_removal
from .finite import DivergenceError, SolverOptions, TraceRow, _dual_update
from .model import ScenarioConfig

__all__ = [
    "LargeSystemSolution",
    "phi_fixed_point",
    "phi_step",
    "phi_derivative",
    "det_eq_uplink_sinr",
    "det_eq_direct_gain",
    "det_eq_cross_channel",
    "det_eq_gain_matrix",
    "solve_l1_large",
    "admit_saps_large",
]


def _load(q, d):
    t = np.asarray(q, dtype=float) * np.asarray(d, dtype=float)
    if np.any(t < 0):
        raise ValueError("need q >= 0 and d > 0")
    return t


def _interference_sums(t, phi, M, power):
    """``(1/M) sum_{j != i} t_j / (1 + t_j phi_i)^power`` for every ``i``."""
    frac = t[None, :] / (1.0 + np.outer(phi, t)) ** power
    return (frac.sum(axis=1) - np.diag(frac)) / M


def phi_step(q, d, w, M, phi):
    """One pass of the fixed-point map for ``phi``."""
    t = _load(q, d)
    return 1.0 / (np.asarray(w, dtype=float) + _interference_sums(t, phi, M, 1))


def phi_fixed_point(q, d, w, M, tol=1e-13, max_iter=100000):
    """Fully converged ``phi`` for uplink powers ``q``.

    Iterates the map from ``phi = 1/w``. The map is increasing in ``phi``
    and ``1/w`` bounds the solution from above, so the iterates decrease
    monotonically to the fixed point.
    """
    w = np.broadcast_to(np.asarray(w, dtype=float), np.shape(d))
    phi = 1.0 / w
    for _ in range(max_iter):
        new = phi_step(q, d, w, M, phi)
        if np.max(np.abs(new - phi) / new) <= tol:
            return new
        phi = new
    warnings.warn("phi fixed point did not reach tolerance", RuntimeWarning, stacklevel=2)
    return phi


def phi_derivative(q, d, w, M, phi):
    """``phi'_i = -phi_i / (w_i + (1/M) sum_{j!=i} q_j d_j / (1 + q_j d_j phi_i)^2)``."""
    t = _load(q, d)
    return -phi / (np.asarray(w, dtype=float) + _interference_sums(t, phi, M, 2))


def det_eq_uplink_sinr(q, d, phi):
    return np.asarray(q) * np.asarray(d) * phi


def det_eq_direct_gain(d, phi, phi_prime):
    """Limit of ``|h_i^H u_i|^2 / M``."""
    return np.asarray(d) * phi**2 / (-phi_prime)


def det_eq_cross_channel(q, d, phi, i, j):
    """Limit of ``|h_i^H u_j|^2`` for ``i != j``."""
    if i == j:
        raise ValueError("cross-channel limit needs i != j; use det_eq_direct_gain")
    return d[i] / (1.0 + q[i] * d[i] * phi[j]) ** 2


def det_eq_gain_matrix(q, d, phi, phi_prime, M):
    """Deterministic stand-in for the equivalent channel ``G``."""
    q = np.asarray(q, dtype=float)
    d = np.asarray(d, dtype=float)
    G = d[:, None] / (1.0 + np.outer(q * d, phi)) ** 2
    np.fill_diagonal(G, M * det_eq_direct_gain(d, phi, phi_prime))
    return G


@dataclass(frozen=True)
class LargeSystemSolution:
    q: np.ndarray
    nu: np.ndarray
    mu: float
    x: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    iterations: int
    converged: bool
    delta: float
    trace: Optional[list] = None

    @property
    def max_gap(self) -> float:
        return float(np.max(self.x))


def solve_l1_large(d, config: ScenarioConfig, opts: SolverOptions | None = None,
                   trace: bool = False) -> LargeSystemSolution:
    """Asymptotic primal-dual iteration driven only by ``d`` and the targets.

    Each round: snapshot ``q``; ``q_bar_i = gamma_i / (max(nu_i, 1) phi_i
    d_i)``; rescale to the uplink budget and average with the snapshot; one
    pass of the ``phi`` map (from the previous ``phi``); ``phi'``; then the
    multiplier, power and ``nu`` updates of the finite solver evaluated on
    the deterministic gain matrix. Stops when ``max_i n_i |q_i - q_old_i| <=
    epsilon``.
    """
    opts = opts or SolverOptions()
    d = np.asarray(d, dtype=float)
    if d.shape != (config.N,) or np.any(d <= 0):
        raise ValueError("need one positive large-scale gain per SAP")
    M, P, n, w, gamma = config.M, config.P, config.n, config.w, config.gamma
    q = np.full(config.N, M * P / n.sum())
    nu = np.ones(config.N)
    phi = 1.0 / w
    cap = 1e12 * M * P / n
    rows = [] if trace else None
    if trace:
        rows.append(TraceRow(0, q.copy(), nu.copy(), np.full(config.N, M * P / w.sum()), np.nan, np.nan))
    mu = np.nan
    converged = False
    delta = np.inf
    it = 0
    for it in range(1, opts.max_iters + 1):
        q_old = q
        q_bar = gamma / (np.maximum(nu, 1.0) * phi * d)
        q_bar = q_bar * (M * P / (n @ q_bar))
        q = 0.5 * (q_bar + q_old) if opts.averaging else q_bar
        if np.any(q > cap):
            raise DivergenceError(f"uplink power left the bounded region at iteration {it}")
        phi = phi_step(q, d, w, M, phi)
        phi_prime = phi_derivative(q, d, w, M, phi)
        G = det_eq_gain_matrix(q, d, phi, phi_prime, M)
        mu, p, nu = _dual_update(G, q, nu, config)
        if not (np.all(q > 0) and np.all(nu > 0) and mu > 0):
            raise FloatingPointError(f"lost positivity of (q, nu, mu) at iteration {it}")
        if np.max(nu) < 1e-150:
            nu = nu / np.max(nu)
        delta = float(np.max(n * np.abs(q - q_old)))
        if trace:
            rows.append(TraceRow(it, q.copy(), nu.copy(), p.copy(), mu, delta))
        if delta <= opts.epsilon:
            converged = True
            break
    if not converged:
        warnings.warn(f"no convergence in {opts.max_iters} iterations (last change {delta:.3g})",
                      RuntimeWarning, stacklevel=2)
    return LargeSystemSolution(q=q, nu=nu, mu=mu, x=np.maximum(nu - 1.0, 0.0), p=p, phi=phi,
                               phi_prime=phi_prime, iterations=it, converged=converged,
                               delta=delta, trace=rows)


def admit_saps_large(d, config: ScenarioConfig, opts: SolverOptions | None = None,
                     x_tol: float = X_TOL) -> AdmissionOutcome:
    """Iterative SAP removal using the asymptotic solver's gaps."""
    opts = opts or SolverOptions()
    d = np.asarray(d, dtype=float)

    def run(active):
        return solve_l1_large(d[active], config.subset(active), opts)

    return iterative_removal(config.N, run, x_tol)
