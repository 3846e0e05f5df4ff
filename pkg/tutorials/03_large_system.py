"""
Admission from large-scale statistics only
==========================================

With 64 antennas and 32 SAPs the MMSE SINRs and the equivalent channel
concentrate around values that depend only on the large-scale gains. The
asymptotic solver uses those values and never draws a channel. Here we
compare its powers and multipliers with Monte Carlo averages of the
finite-system solver, then check that SAPs chosen from statistics alone
still meet their targets on actual channel draws.
"""

import numpy as np

from backhaul import (ExperimentSpec, ScenarioConfig, compare_large_vs_mc, db_to_linear,
                      dbm_to_watts, run_experiment)
from backhaul.harness import COMPARE_HEADER, comparison_rows, write_csv
from backhaul.model import Scenario

d = np.random.default_rng(7).uniform(0.05, 0.3, 32)
cfg = ScenarioConfig(M=64, N=32, P=20.0, w=1.0, n=1.0, gamma=db_to_linear(6.02))
res = compare_large_vs_mc(d, cfg, trials=30, seed=3)
write_csv("large_vs_mc.csv", COMPARE_HEADER, comparison_rows(res))

order = np.argsort(d)
print("   d     p/M large   p/M MC     nu large   nu MC")
for i in order[::4]:
    print(f"{d[i]:.3f}   {res['p_over_M_large'][i]:.4f}    {res['p_over_M_mc_mean'][i]:.4f}"
          f"     {res['nu_large'][i]:.3f}     {res['nu_mc_mean'][i]:.3f}")
print("max rel error p/M", res["p_over_M_rel_err"].max().round(3),
      " nu", res["nu_rel_err"].max().round(3))

# cellular layout: choose SAPs with the asymptotic solver, then run max-min
# power control on 20 fading draws for the chosen set
cell = ScenarioConfig(M=64, N=32, P=dbm_to_watts(30.0), n=dbm_to_watts(-93.98),
                      gamma=db_to_linear(10.0))
rows, _ = run_experiment(ExperimentSpec(Scenario(cell), methods="large", trials=20, seed=77))
ratios = np.array([r.min_sinr_ratio for r in rows])
print(f"{rows[0].admitted} SAPs chosen; min SINR/target over draws: "
      f"min {ratios.min():.3f}, median {np.median(ratios):.3f}")
