"""
Solving the SINR-gap problem on a small instance
================================================

Three WBH antennas, four SAPs, 3 dB targets and a 10 W budget. We run the
primal-dual iteration with tracing on, look at how fast the uplink powers
settle, and check the optimality conditions of the result.
"""

import numpy as np

from backhaul import (ScenarioConfig, SolverOptions, db_to_linear, downlink_sinr, emit_trace,
                      gen_channel, kkt_residuals, solve_l1, uplink_sinr)

cfg = ScenarioConfig(M=3, N=4, P=10.0, w=1.0, n=1.0, gamma=db_to_linear(3.01))
ch = gen_channel(np.ones(cfg.N), cfg.M, seed=0)

state = solve_l1(ch, cfg, SolverOptions(epsilon=1e-5), trace=True)
print(f"converged={state.converged} after {state.iterations} iterations")

# the trace has the starting point plus one row per iteration
header, rows = emit_trace(state.trace, "trace_finite.csv")
for r in rows[:12]:
    print(f"it {r[0]:2d}  max|dq| {r[1]:9.2e}  nu {np.round(r[4 + 2 * cfg.N: 4 + 3 * cfg.N], 3)}")

# gaps x_i = max(nu_i - 1, 0): SAPs with x_i > 0 cannot reach their target
print("x =", np.round(state.x, 4))

# downlink and uplink see the same SINR, gamma_i / (1 + x_i)
dl = downlink_sinr(ch, state.U, state.p, cfg.n)
ul = uplink_sinr(ch, state.U, state.q, cfg.w)
print("downlink SINR", np.round(dl, 4))
print("uplink SINR  ", np.round(ul, 4))
print("target/(1+x) ", np.round(cfg.gamma / (1 + state.x), 4))

for name, value in kkt_residuals(state, ch, cfg).as_dict().items():
    print(f"{name:15s} {value:.1e}")
