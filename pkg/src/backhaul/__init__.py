"""Joint beamforming, power control and admission control for small-cell
access points (SAPs) fed by a multi-antenna wireless backhaul hub.

The public API re-exported here covers the channel model, the finite-system
primal-dual solver, SAP and user admission, the large-system solver and the
experiment harness.
"""

from .model import (
    CellLayout,
    Channel,
    MIN_DISTANCE_M,
    Scenario,
    ScenarioConfig,
    db_to_linear,
    dbm_to_watts,
    gen_channel,
    gen_layout,
    large_scale_gain,
    large_scale_gains,
    linear_to_db,
    load_scenario,
    pathloss_db,
    scenario_from_dict,
    watts_to_dbm,
)
from .beamforming import (
    downlink_sinr,
    equivalent_channel,
    mmse_beamformers,
    mmse_solve,
    mmse_uplink_sinr,
    normalize_beamformers,
    sinr_from_gains,
    uplink_sinr,
)
from .finite import (
    DivergenceError,
    KKTResiduals,
    SolverOptions,
    SolverState,
    TraceRow,
    kkt_residuals,
    max_min_sinr,
    maxmin_ratio,
    solve_l1,
    solve_l1_fixed_gain,
)
from .admission import (
    ES_MAX_N,
    X_TOL,
    AdmissionOutcome,
    UserAdmissionProblem,
    admit_saps,
    admit_users,
    exhaustive_search,
    iterative_removal,
)
from .large_system import (
    LargeSystemSolution,
    admit_saps_large,
    det_eq_cross_channel,
    det_eq_direct_gain,
    det_eq_gain_matrix,
    det_eq_uplink_sinr,
    phi_derivative,
    phi_fixed_point,
    phi_step,
    solve_l1_large,
)

from .harness import (
    ExperimentSpec,
    ResultRow,
    UserLinkParams,
    admission_report,
    compare_large_vs_mc,
    det_eq_vs_mc,
    emit_trace,
    gen_user_problem,
    run_experiment,
    summarize,
)

__version__ = "0.1.0"
