import itertools
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from backhaul import (Channel, ScenarioConfig, SolverOptions, UserAdmissionProblem, admit_saps,
                      admit_users, db_to_linear, exhaustive_search, gen_channel, iterative_removal,
                      solve_l1)
from oracles import best_user_subset_size


def _partition_ok(out, N):
    removed = [i for i, _ in out.removal_order]
    return sorted(list(out.admitted) + removed) == list(range(N))


def test_all_feasible_keeps_everyone():
    ch = gen_channel(np.ones(3), 6, 0)
    cfg = ScenarioConfig(M=6, N=3, P=100.0, gamma=1.0)
    out = admit_saps(ch, cfg)
    assert out.admitted == (0, 1, 2) and out.removal_order == () and out.solver_calls == 1
    es = exhaustive_search(ch, cfg)
    assert es.admitted == (0, 1, 2) and es.solver_calls == 1


def test_duplicated_channel_admits_exactly_one():
    h = gen_channel([1.0], 2, 1).H
    ch = Channel(np.vstack([h, h]), np.ones(2))
    # identical channels cap SINR_1 * SINR_2 below one, so two targets of
    # 3 dB cannot both be met while either alone is easy
    cfg = ScenarioConfig(M=2, N=2, P=100.0, gamma=2.0)
    out = admit_saps(ch, cfg)
    assert out.count == 1 and _partition_ok(out, 2)
    assert exhaustive_search(ch, cfg).count == 1


def test_exhaustive_on_degree_of_freedom_limited_instance():
    ch = gen_channel(np.ones(4), 2, 2)
    cfg = ScenarioConfig(M=2, N=4, P=1e4, gamma=db_to_linear(20.0))
    es = exhaustive_search(ch, cfg)
    assert es.count == 2
    for S in itertools.combinations(range(4), 3):
        S = list(S)
        assert solve_l1(ch.subset(S), cfg.subset(S)).max_gap > 1e-6
    assert es.final_state.max_gap <= 1e-6
    # lexicographic order within a cardinality: no earlier 2-subset is feasible
    for S in itertools.combinations(range(4), 2):
        if S == es.admitted:
            break
        assert solve_l1(ch.subset(list(S)), cfg.subset(list(S))).max_gap > 1e-6


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000))
def test_removal_never_beats_exhaustive(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(3, 7))
    ch = gen_channel(rng.uniform(0.2, 2, N), 3, seed)
    cfg = ScenarioConfig(M=3, N=N, P=5.0, gamma=db_to_linear(rng.uniform(3, 12, N)))
    out = admit_saps(ch, cfg)
    es = exhaustive_search(ch, cfg)
    assert out.count <= es.count
    assert out.solver_calls <= N and _partition_ok(out, N)
    if out.final_state is not None:
        assert out.final_state.max_gap <= 1e-6


def test_exhaustive_guard():
    ch = gen_channel(np.ones(17), 2, 3)
    with pytest.raises(ValueError, match="admit_saps"):
        exhaustive_search(ch, ScenarioConfig(M=2, N=17, P=1.0))


def test_removal_tie_break_and_gap_record():
    gaps = {(0, 1, 2): [0.5, 0.9, 0.9], (0, 2): [0.0, 0.0]}
    out = iterative_removal(3, lambda a: SimpleNamespace(x=np.array(gaps[tuple(a)])))
    assert out.admitted == (0, 2) and out.removal_order == ((1, 0.9),) and out.solver_calls == 2


def test_empty_admission_is_valid():
    out = iterative_removal(2, lambda a: SimpleNamespace(x=np.ones(len(a))))
    assert out.admitted == () and out.final_state is None and out.solver_calls == 2


def test_users_decoupled_generous_caps():
    prob = UserAdmissionProblem(np.diag([1.0, 2.0, 0.5]), P_per=10.0, n=1.0, gamma=2.0)
    out = admit_users(prob)
    assert out.admitted == (0, 1, 2)
    assert np.all(out.weights > 0)
    assert np.all(out.final_state.p <= 10.0 * (1 + 1e-4))


def test_users_symmetric_pair():
    g = np.array([[1.0, 0.2], [0.2, 1.0]])
    out = admit_users(UserAdmissionProblem(g, P_per=5.0, n=1.0, gamma=2.0))
    assert out.count == 2
    assert out.final_state.p[0] == pytest.approx(out.final_state.p[1], rel=1e-9)


def test_dominant_interferer_matches_brute_force():
    g = np.array([[1.0, 0.05, 0.9], [0.05, 1.0, 0.9], [0.02, 0.02, 1.0]])
    gamma = np.full(3, db_to_linear(6.0))
    cap = np.array([2.0, 2.0, 8.0])
    n = np.ones(3)
    out = admit_users(UserAdmissionProblem(g, cap, n, gamma))
    assert out.count == best_user_subset_size(g, gamma, n, cap)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_user_admission_never_exceeds_enumeration(seed):
    rng = np.random.default_rng(seed)
    K = 3
    g = rng.uniform(0, 0.6, (K, K))
    np.fill_diagonal(g, rng.uniform(0.5, 2, K))
    gamma = db_to_linear(rng.uniform(0, 9, K))
    cap = rng.uniform(0.5, 10, K)
    n = rng.uniform(0.5, 1.5, K)
    out = admit_users(UserAdmissionProblem(g, cap, n, gamma))
    assert out.count <= best_user_subset_size(g, gamma, n, cap)
    idx = list(out.admitted)
    if idx:
        assert np.all(out.final_state.p <= cap[idx] * (1 + 1e-4))


def test_largest_gap_removal_can_miss_the_optimum():
    # even with the weights converged, user 0 carries the largest gap, yet
    # the only feasible pair is {0, 1}; removal ends with a single user
    g = np.array([[1.3159121, 0.30679653, 0.58574622],
                  [0.04850161, 1.85332262, 0.22589195],
                  [0.48114072, 0.10471669, 1.21573029]])
    gamma = np.array([2.44031927, 5.12922849, 7.6866605])
    n = np.array([0.67769259, 1.10885162, 1.20486475])
    cap = np.array([4.01239503, 9.70486226, 9.32575068])
    out = admit_users(UserAdmissionProblem(g, cap, n, gamma))
    assert best_user_subset_size(g, gamma, n, cap) == 2
    assert out.count == 1 and out.removal_order[0][0] == 0


def test_user_problem_validation_and_steps():
    with pytest.raises(ValueError):
        UserAdmissionProblem(np.array([[0.0, 1.0], [1.0, 1.0]]), 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        UserAdmissionProblem(np.eye(2), [1.0, -1.0], 1.0, 1.0)
    g = np.array([[1.0, 0.9], [0.9, 1.0]])
    with pytest.raises(ValueError):
        admit_users(UserAdmissionProblem(g, 1.0, 1.0, 5.0), step=lambda n: 0.0)
