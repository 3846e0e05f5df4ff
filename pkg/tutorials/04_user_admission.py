"""
Serving the users of the admitted small cells
=============================================

Each SAP serves one user inside its 30 m cell. The SAPs share the access
band, so users interfere, and each SAP has its own power cap. User
admission adjusts one weight per SAP until the caps hold, and then drops
the user with the largest SINR gap while any gap remains.
"""

import numpy as np

from backhaul import admit_users, dbm_to_watts, gen_layout, gen_user_problem
from backhaul.harness import UserLinkParams

layout = gen_layout(8, seed=4)
# a 10 dBm cap per SAP (the default is 24 dBm) makes some targets unreachable
links = UserLinkParams(power_dbm=10.0, gamma_db_range=(10.0, 25.0))
problem = gen_user_problem(layout, dbm_to_watts(-93.98), seed=6, params=links)

out = admit_users(problem)
print("admitted users:", out.admitted)
print("removed (user, gap):", [(i, round(x, 3)) for i, x in out.removal_order])
if out.admitted:
    idx = list(out.admitted)
    print("power / cap:", np.round(out.final_state.p / problem.P_per[idx], 3))
print("weight-search rounds:", out.outer_iterations)
