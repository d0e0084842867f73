#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import os

import pytest

from reset_delay_certifier.__common__.exceptions import QueryError, SearchError
from reset_delay_certifier.__model__.model import (
    build_closed_loop,
    build_sampled_data,
    make_controller,
    make_plant,
)
from reset_delay_certifier.__sdp__.sdp import (
    VERDICT_FEASIBLE,
    VERDICT_INFEASIBLE,
    Certificate,
)
import reset_delay_certifier.__search__.search as search
from reset_delay_certifier.__search__.search import (
    VERDICT_ERROR,
    VERDICT_FOUND,
    VERDICT_NONE,
    VERDICT_UPPER,
    SearchResult,
    bisect,
    check_frontier_monotone,
    decay_vs_period,
    max_decay_rate,
    max_periodic_T,
    min_feasible_Tm,
    scan_bracket,
    table1,
)
from reset_delay_certifier.__sim__.integrator import InitialCondition
from reset_delay_certifier.__sim__.laws import no_reset
from reset_delay_certifier.__sim__.sim import estimate_decay_rate, simulate_reset_system


def should_run_solver():
    run_solver = True
    TST_SOLVER_X = os.getenv("TST_SOLVER_X", "1")
    if TST_SOLVER_X == "0":
        run_solver = False
    return run_solver


def should_run_table1():
    run_table1 = False
    TST_TABLE1_X = os.getenv("TST_TABLE1_X", "0")
    if TST_TABLE1_X == "1":
        run_table1 = True
    return run_table1


def example1_sampled():
    plant = make_plant([[0.0]], [[1.0]], [[1.0]])
    return build_sampled_data(plant, make_controller(1.4, 0.3, 0.5), 1.0)


def fake_oracle(rule):
    """is_feasible replacement driven by a rule over the query."""

    def oracle(model, query, options=None, dump_problem=None):
        query.validate()
        ok = rule(query)
        verdict = VERDICT_FEASIBLE if ok else VERDICT_INFEASIBLE
        return ok, Certificate(verdict, 1e-9, solver_stats={"runtime_s": 0.01})

    return oracle


def test_bisect_high_and_low():
    found = bisect(lambda x: x >= 0.37, 0.0, 1.0, 1e-3, feasible_side="high")
    assert found.value >= 0.37
    assert found.value - 0.37 <= 1e-3
    assert found.other < 0.37
    assert found.solves == 10 + 2
    assert found.confirmed

    found = bisect(lambda x: x <= 2.5, 0.0, 5.0, 1e-2, feasible_side="low")
    assert found.value <= 2.5
    assert 2.5 - found.value <= 1e-2

    with pytest.raises(SearchError):
        bisect(lambda x: True, 0.0, 1.0, 0.0)
    with pytest.raises(SearchError):
        bisect(lambda x: True, 0.0, 1.0, 0.1, feasible_side="middle")


def test_scan_bracket():
    grid = [0.1, 0.2, 0.3, 0.4, 0.5]
    assert scan_bracket(lambda x: 0.15 < x < 0.35, grid) == (0.3, 0.4)
    assert scan_bracket(lambda x: x > 0.25, grid) == (0.5, None)
    assert scan_bracket(lambda x: False, grid) is None
    assert scan_bracket(lambda x: x < 0.25, grid) == (0.2, 0.3)


def test_min_feasible_Tm_bisects(monkeypatch):
    monkeypatch.setattr(search, "is_feasible", fake_oracle(lambda q: q.T_m >= 0.62))
    result = min_feasible_Tm(None, 2, 1, 1e-6, 1.0, tol=0.01)
    assert result.verdict == VERDICT_FOUND
    assert 0.62 <= result.value <= 0.63
    assert result.other < 0.62
    assert result.solves == 2 + 7 + 2
    assert result.solver_time == pytest.approx(0.11)
    assert result.to_dict()["M"] == 1


def test_min_feasible_Tm_edges(monkeypatch):
    monkeypatch.setattr(search, "is_feasible", fake_oracle(lambda q: False))
    result = min_feasible_Tm(None, 2, 1, 1e-6, 1.0)
    assert result.value is None
    assert result.verdict == VERDICT_NONE
    assert result.solves == 1

    monkeypatch.setattr(search, "is_feasible", fake_oracle(lambda q: True))
    result = min_feasible_Tm(None, 2, 1, 1e-6, 1.0)
    assert result.value == 0.0
    assert result.verdict == VERDICT_FOUND


def test_max_decay_rate_logic(monkeypatch):
    monkeypatch.setattr(search, "is_feasible", fake_oracle(lambda q: q.alpha <= 0.7))
    result = max_decay_rate(None, 2, 1, 0.2, 0.2, tol=1e-3, alpha_upper=5.0)
    assert result.verdict == VERDICT_FOUND
    assert 0.7 - 1e-3 <= result.value <= 0.7

    monkeypatch.setattr(search, "is_feasible", fake_oracle(lambda q: True))
    result = max_decay_rate(None, 2, 1, 0.2, 0.2, alpha_upper=3.0)
    assert result.verdict == VERDICT_UPPER
    assert result.value == 3.0

    monkeypatch.setattr(search, "is_feasible", fake_oracle(lambda q: False))
    result = max_decay_rate(None, 2, 1, 0.2, 0.2)
    assert result.value is None
    assert "not certifiable" in result.message


def test_max_periodic_T_scans_then_bisects(monkeypatch):
    monkeypatch.setattr(
        search, "is_feasible", fake_oracle(lambda q: 0.15 <= q.T_M <= 0.437)
    )
    grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
    result = max_periodic_T(None, 2, 1, 1e-6, grid, tol=1e-3)
    assert result.verdict == VERDICT_FOUND
    assert 0.436 <= result.value <= 0.437
    assert result.other > 0.437

    monkeypatch.setattr(search, "is_feasible", fake_oracle(lambda q: False))
    result = max_periodic_T(None, 2, 1, 1e-6, grid)
    assert result.value is None
    assert result.solves == len(grid)


def test_decay_vs_period_cells(monkeypatch):
    monkeypatch.setattr(
        search, "is_feasible", fake_oracle(lambda q: q.alpha <= 1.0 / q.T_M)
    )
    results = decay_vs_period(
        None, [1.0, 2.0], asynchronous_ratio=0.5, tol=1e-3, alpha_upper=5.0, jobs=1
    )
    assert [r.params["T_m"] for r in results] == [0.5, 1.0]
    assert results[0].value == pytest.approx(1.0, abs=1e-3)
    assert results[1].value == pytest.approx(0.5, abs=1e-3)
    with pytest.raises(SearchError):
        decay_vs_period(None, [])


def test_cell_errors_are_reported(monkeypatch):
    def failing(model, query, options=None, dump_problem=None):
        raise QueryError("broken cell")

    monkeypatch.setattr(search, "is_feasible", failing)
    results = table1(None, M_list=[1, 3], jobs=1)
    assert [r.verdict for r in results] == [VERDICT_ERROR, VERDICT_ERROR]
    assert [r.params["M"] for r in results] == [1, 3]
    assert results[0].message == "broken cell"


def test_check_frontier_monotone():
    def cell(p_r, h, T):
        return SearchResult(T, VERDICT_FOUND, params={"p_r": p_r, "h": h})

    results = [
        cell(0.5, 0.1, 0.8),
        cell(0.5, 0.2, 0.6),
        cell(0.5, 0.3, 0.7),
        cell(0.0, 0.1, 0.5),
        SearchResult(params={"p_r": 0.0, "h": 0.2}),
    ]
    violations = check_frontier_monotone(results, tol=0.01)
    assert violations == [{"p_r": 0.5, "h": (0.2, 0.3), "T": (0.6, 0.7)}]
    assert check_frontier_monotone(results, tol=0.2) == []


def test_bisect_rechecks_the_final_bracket():
    seen = set()

    def flaky(x):
        # feasible the first time a point is asked, infeasible afterwards
        first = x not in seen
        seen.add(x)
        return first and x >= 0.37

    found = bisect(flaky, 0.0, 1.0, 1e-3, feasible_side="high")
    assert not found.confirmed
    assert found.solves == 10 + 2

    found = bisect(lambda x: x >= 0.37, 0.0, 1.0, 1e-3, recheck=False)
    assert found.confirmed
    assert found.solves == 10


def test_unconfirmed_bracket_is_an_error(monkeypatch):
    asked = []

    def rule(q):
        asked.append(q.T_m)
        return q.T_m >= 0.62 and asked.count(q.T_m) == 1

    monkeypatch.setattr(search, "is_feasible", fake_oracle(rule))
    result = min_feasible_Tm(None, 2, 1, 1e-6, 1.0, tol=0.01)
    assert result.verdict == VERDICT_ERROR
    assert result.value is None
    assert "re-check" in result.message


def test_unexpected_cell_errors_are_reported(monkeypatch):
    def failing(model, query, options=None, dump_problem=None):
        raise ArithmeticError("solver blew up")

    monkeypatch.setattr(search, "is_feasible", failing)
    results = decay_vs_period(None, [0.5, 1.0], tol=1e-3, jobs=1)
    assert [r.verdict for r in results] == [VERDICT_ERROR, VERDICT_ERROR]
    assert [r.params["T_M"] for r in results] == [0.5, 1.0]
    assert results[1].message == "solver blew up"

    plant = make_plant([[0.0]], [[1.0]], [[1.0]])
    results = search.period_vs_delay_sweep(
        plant, 1.4, 0.3, [0.5, 2.0], [1.0], [0.5, 1.0], jobs=1
    )
    # p_r = 0.5 fails in the oracle, p_r = 2 in model construction
    assert [r.verdict for r in results] == [VERDICT_ERROR, VERDICT_ERROR]
    assert results[0].message == "solver blew up"
    assert "p_r" in results[1].message
    assert [r.params["p_r"] for r in results] == [0.5, 2.0]


def test_certified_decay_stays_below_simulated_decay():
    if should_run_solver():
        plant = make_plant([[-1.0]], [[1.0]], [[1.0]])
        ctrl = make_controller(0.5, 0.2, 0.0)
        model = build_sampled_data(plant, ctrl, 0.1)
        result = max_decay_rate(model, 2, 1, 0.5, 1.0, tol=1e-3, alpha_upper=5.0)
        assert result.verdict == VERDICT_FOUND
        assert result.value > 1e-3

        closed = build_closed_loop(plant, ctrl, 0.1)
        phi = InitialCondition.constant([1.0, 0.0, 0.0], 0.1)
        traj = simulate_reset_system(closed, no_reset(), phi, 60.0, 0.01)
        assert result.value <= 1.02 * estimate_decay_rate(traj, 0.5)


def test_example1_min_feasible_Tm():
    if should_run_solver() and should_run_table1():
        result = min_feasible_Tm(example1_sampled(), 2, 1, 1e-6, 1.0, tol=0.01)
        assert result.verdict == VERDICT_FOUND
        assert abs(result.value - 0.94) <= 0.03


def test_example1_decay_not_certifiable_far_below_frontier():
    if should_run_solver() and should_run_table1():
        result = max_decay_rate(example1_sampled(), 2, 1, 0.1, 1.0)
        assert result.value is None
        assert result.solves == 1


def test_example1_table1():
    if should_run_table1():
        expected = {1: 0.94, 3: 0.80, 5: 0.67, 10: 0.5, 50: 0.41}
        results = table1(example1_sampled(), N=2, alpha=1e-6, T_M=1.0, tol=0.01)
        for result in results:
            assert abs(result.value - expected[result.params["M"]]) <= 0.03
