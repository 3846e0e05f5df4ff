import json
import time

import numpy as np
import pytest

from backhaul import (ExperimentSpec, ScenarioConfig, SolverOptions, admission_report, admit_saps,
                      compare_large_vs_mc, db_to_linear, dbm_to_watts, emit_trace, gen_channel,
                      run_experiment, solve_l1, summarize)
from backhaul.harness import load_experiment_config, read_result_csv, trial_seed
from backhaul.model import Scenario

CELL = ScenarioConfig(M=4, N=5, P=dbm_to_watts(30.0), n=dbm_to_watts(-93.98), gamma=db_to_linear(10.0))


def _spec(**kw):
    base = dict(methods=("finite", "large"), trials=3, layouts=2, seed=5)
    return ExperimentSpec(Scenario(CELL), **{**base, **kw})


def test_rerun_is_byte_identical(tmp_path):
    run_experiment(_spec(), tmp_path / "a")
    run_experiment(_spec(workers=2), tmp_path / "b")
    for name in ("results_finite.csv", "results_large.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    run_experiment(_spec(seed=6), tmp_path / "c")
    assert (tmp_path / "a" / "results_finite.csv").read_bytes() != \
        (tmp_path / "c" / "results_finite.csv").read_bytes()


def test_rows_sorted_and_summary_recomputable(tmp_path):
    rows, summary = run_experiment(_spec(), tmp_path)
    keys = [(r.layout, r.trial) for r in rows if r.method == "finite"]
    assert keys == sorted(keys) and len(keys) == 6
    back = read_result_csv(tmp_path / "results_finite.csv")
    assert summarize(back)["finite"] == summary["methods"]["finite"]
    on_disk = json.loads((tmp_path / "summary.json").read_text())
    assert on_disk["methods"]["finite"]["admitted_mean"] == np.mean([r.admitted for r in back])
    timings = (tmp_path / "timings.csv").read_text().splitlines()
    assert timings[0] == "layout,trial,method,wall_ms" and len(timings) == 13


def test_single_feasible_sap_gives_one_row():
    cfg = ScenarioConfig(M=4, N=1, P=1.0, n=dbm_to_watts(-93.98), gamma=1.0)
    rows, summary = run_experiment(ExperimentSpec(Scenario(cfg), trials=1, d=(1e-9,)))
    assert len(rows) == 1 and rows[0].admitted == 1 and rows[0].ok


def test_trial_failures_are_recorded():
    rows, summary = run_experiment(ExperimentSpec(Scenario(CELL), methods="user-admit",
                                                  d=(1e-10,) * 5))
    assert rows[0].status.startswith("error") and summary["methods"]["user-admit"]["failures"] == 1


def test_seed_streams():
    a = trial_seed(1, 2, 0, 0).generate_state(2)
    assert not np.array_equal(a, trial_seed(1, 2, 0, 1).generate_state(2))
    assert np.array_equal(a, trial_seed(1, 2, 0, 0).generate_state(2))
    with pytest.raises(ValueError):
        trial_seed(-1, 0, 0)


def test_spec_validation():
    with pytest.raises(ValueError):
        _spec(methods=("nope",))
    with pytest.raises(ValueError):
        _spec(trials=0)
    with pytest.raises(ValueError):
        _spec(d=(1.0, 2.0))


def test_trace_csv(tmp_path):
    ch = gen_channel(np.ones(4), 3, 0)
    cfg = ScenarioConfig(M=3, N=4, P=10.0, gamma=db_to_linear(3.01))
    st = solve_l1(ch, cfg, SolverOptions(epsilon=1e-5), trace=True)
    header, rows = emit_trace(st.trace, tmp_path / "t.csv")
    assert len(rows) == st.iterations + 1
    assert rows[-1][2] <= 1e-5 and rows[-1][1] <= 1e-5
    assert (tmp_path / "t.csv").read_text().splitlines()[0].startswith("iteration,max_abs_dq,delta,mu")
    with pytest.raises(ValueError):
        emit_trace([])


def test_compare_uniform_gains():
    cfg = ScenarioConfig(M=16, N=8, P=20.0, gamma=db_to_linear(6.0))
    res = compare_large_vs_mc(np.full(8, 0.2), cfg, trials=3)
    for key in ("p_over_M_large", "nu_large"):
        np.testing.assert_allclose(res[key], res[key][0], rtol=1e-9)
    assert res["failures"] == 0 and res["nu_mc_mean"].shape == (8,)


def test_admission_report_fields():
    ch = gen_channel(np.full(5, 1e-11), 4, 3)
    out = admit_saps(ch, CELL)
    rep = admission_report(out, ch, CELL)
    assert rep["admitted"] == list(out.admitted) and rep["solver_calls"] == out.solver_calls
    assert set(rep["power_dbm"]) == {str(i) for i in out.admitted}
    assert all(e["x"] > 0 for e in rep["removal_order"])
    json.dumps(rep, allow_nan=False)


def test_config_loader(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"M": 8, "N": 2, "P_watts": 2.0, "large_scale_gains": [0.1, 0.2],
                             "user_links": {"power_dbm": 20.0}}))
    scen, d, ul = load_experiment_config(p)
    assert d == (0.1, 0.2) and ul.power_dbm == 20.0 and scen.config.M == 8
    with pytest.raises(ValueError):
        load_experiment_config({"M": 8, "N": 2, "large_scale_gains": [0.1]})
    with pytest.raises(ValueError):
        load_experiment_config({"M": 8, "N": 2, "user_links": {"bad": 1}})


def _time_per_iteration(M, N, reps=5):
    cfg = ScenarioConfig(M=M, N=N, P=20.0, gamma=db_to_linear(3.0))
    best = np.inf
    for r in range(reps):
        ch = gen_channel(np.ones(N), M, r)
        t0 = time.perf_counter()
        st = solve_l1(ch, cfg, SolverOptions(max_iters=30, epsilon=1e-300))
        best = min(best, (time.perf_counter() - t0) / st.iterations)
    return best


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_wall_time_scaling_in_n():
    M, N = 64, 32
    predicted = (4 * N**2 * M**2 + 2 * N * M**3) / (N**2 * M**2 + N * M**3)
    measured = _time_per_iteration(M, 2 * N) / _time_per_iteration(M, N)
    assert predicted / 2 <= measured <= predicted * 2
