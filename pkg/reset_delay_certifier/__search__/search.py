#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
"""Feasibility bisections and parameter sweeps over the stability LMIs.

Inconclusive solver verdicts count as infeasible everywhere, so every reported
bound is certified. Independent cells run in a process pool; bisection inside
a cell is sequential.
"""
import concurrent.futures
import logging
from dataclasses import dataclass, field

from reset_delay_certifier.__common__.env import (
    MACHINE_CPU_COUNT,
    SEARCH_ALPHA_LOWER,
    SEARCH_ALPHA_TOL,
    SEARCH_ALPHA_UPPER,
    SEARCH_T_TOL,
    TABLE1_M_LIST,
)
from reset_delay_certifier.__common__.exceptions import SearchError
from reset_delay_certifier.__lmi__.conditions import AnalysisQuery, assemble_conditions
from reset_delay_certifier.__model__.model import build_sampled_data, make_controller
from reset_delay_certifier.__sdp__.sdp import SolverOptions, solve

VERDICT_FOUND = "found"
VERDICT_NONE = "no_feasible_point"
VERDICT_UPPER = "upper_bound"
VERDICT_ERROR = "error"


def is_feasible(model, query, options=None, dump_problem=None):
    problem = assemble_conditions(
        model, query, (options or SolverOptions()).epsilon_scale
    )
    if dump_problem is not None:
        problem.to_json(dump_problem)
    cert = solve(problem, options)
    return cert.feasible, cert


class FeasibilityCheck:
    """Predicate over one scalar of an AnalysisQuery, counting solves and time."""

    def __init__(self, model, make_query, options=None, label="x"):
        self.model = model
        self.make_query = make_query
        self.options = options
        self.label = label
        self.solves = 0
        self.solver_time = 0.0

    def __call__(self, value):
        ok, cert = is_feasible(self.model, self.make_query(value), self.options)
        self.solves += 1
        self.solver_time += cert.solver_stats.get("runtime_s", 0.0)
        logging.info("Checking {}={:.6g} -> {}".format(self.label, value, cert.verdict))
        return ok


@dataclass
class BisectionResult:
    value: float
    other: float
    solves: int = 0
    confirmed: bool = True


def bisect(predicate, lo, hi, tol, feasible_side="high", recheck=True):
    """Monotone bisection; the caller guarantees the endpoints bracket a transition.

    feasible_side="high": predicate(hi) holds and predicate(lo) does not; the
    smallest feasible value is returned. "low" is the mirror case. With
    recheck the final bracket is checked again and confirmed only if it still
    straddles the transition.
    """
    if tol <= 0:
        raise SearchError("Bisection tolerance must be positive. Got {}".format(tol))
    if feasible_side not in ("high", "low"):
        raise SearchError("feasible_side must be 'high' or 'low'")
    solves = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ok = predicate(mid)
        solves += 1
        if ok == (feasible_side == "high"):
            hi = mid
        else:
            lo = mid
    value, other = (hi, lo) if feasible_side == "high" else (lo, hi)
    confirmed = True
    if recheck:
        value_ok = bool(predicate(value))
        other_ok = bool(predicate(other))
        solves += 2
        confirmed = value_ok and not other_ok
        if not confirmed:
            logging.warning(
                "Bracket ({}, {}) failed its re-check: feasible={}, other={}".format(
                    value, other, value_ok, other_ok
                )
            )
    return BisectionResult(value=value, other=other, solves=solves, confirmed=confirmed)


def scan_bracket(predicate, grid):
    """Walk an increasing grid and return (last feasible, first infeasible after it).

    Returns None when no grid point is feasible and (grid[-1], None) when all are.
    """
    first_feasible = None
    previous = None
    for value in grid:
        ok = predicate(value)
        if ok:
            first_feasible = value if first_feasible is None else first_feasible
            previous = value
        elif previous is not None:
            return previous, value
    if first_feasible is None:
        return None
    return previous, None


@dataclass
class SearchResult:
    value: float = None
    verdict: str = VERDICT_NONE
    other: float = None
    solves: int = 0
    solver_time: float = 0.0
    message: str = ""
    params: dict = field(default_factory=dict)

    def to_dict(self):
        out = dict(self.params)
        out.update(
            {
                "value": self.value,
                "verdict": self.verdict,
                "other": self.other,
                "solves": self.solves,
                "solver_time_s": self.solver_time,
                "message": self.message,
            }
        )
        return out


def _finish(result, check):
    result.solves = check.solves
    result.solver_time = check.solver_time
    return result


def _bisection_result(found, params, check):
    if not found.confirmed:
        message = "bracket ({:.6g}, {:.6g}) not confirmed on re-check".format(
            found.value, found.other
        )
        result = SearchResult(
            None, VERDICT_ERROR, found.other, params=params, message=message
        )
        return _finish(result, check)
    return _finish(
        SearchResult(found.value, VERDICT_FOUND, found.other, params=params), check
    )


def min_feasible_Tm(model, N, M, alpha, T_M, tol=SEARCH_T_TOL, options=None):
    check = FeasibilityCheck(
        model,
        lambda T_m: AnalysisQuery(alpha=alpha, T_m=T_m, T_M=T_M, N=N, M=M),
        options,
        "T_m",
    )
    params = {"N": N, "M": M, "alpha": alpha, "T_M": T_M}
    if not check(T_M):
        logging.warning(
            "Infeasible even at T_m=T_M={} (N={}, M={}, alpha={})".format(
                T_M, N, M, alpha
            )
        )
        return _finish(SearchResult(params=params, message="infeasible at T_m=T_M"), check)
    if check(0.0):
        return _finish(SearchResult(0.0, VERDICT_FOUND, None, params=params), check)
    found = bisect(check, 0.0, T_M, tol, feasible_side="high")
    return _bisection_result(found, params, check)


def max_decay_rate(
    model,
    N,
    M,
    T_m,
    T_M,
    tol=SEARCH_ALPHA_TOL,
    alpha_upper=SEARCH_ALPHA_UPPER,
    options=None,
):
    check = FeasibilityCheck(
        model,
        lambda alpha: AnalysisQuery(alpha=alpha, T_m=T_m, T_M=T_M, N=N, M=M),
        options,
        "alpha",
    )
    params = {"N": N, "M": M, "T_m": T_m, "T_M": T_M}
    if not check(SEARCH_ALPHA_LOWER):
        return _finish(
            SearchResult(
                params=params,
                message="not certifiable at alpha={}".format(SEARCH_ALPHA_LOWER),
            ),
            check,
        )
    if check(alpha_upper):
        return _finish(
            SearchResult(alpha_upper, VERDICT_UPPER, None, params=params), check
        )
    found = bisect(check, SEARCH_ALPHA_LOWER, alpha_upper, tol, feasible_side="low")
    return _bisection_result(found, params, check)


def max_periodic_T(model, N, M, alpha, T_grid, tol=SEARCH_T_TOL, options=None):
    """Largest periodic reset period T (T_m = T_M = T) with a certificate.

    Feasibility in T is not monotone from 0, so a coarse scan brackets the
    upper transition before bisecting.
    """
    check = FeasibilityCheck(
        model,
        lambda T: AnalysisQuery(alpha=alpha, T_m=T, T_M=T, N=N, M=M),
        options,
        "T",
    )
    params = {"N": N, "M": M, "alpha": alpha}
    bracket = scan_bracket(check, sorted(T_grid))
    if bracket is None:
        return _finish(SearchResult(params=params, message="no feasible T on grid"), check)
    feasible, infeasible = bracket
    if infeasible is None:
        return _finish(SearchResult(feasible, VERDICT_UPPER, None, params=params), check)
    found = bisect(check, feasible, infeasible, tol, feasible_side="low")
    return _bisection_result(found, params, check)


def _run_cells(worker, cells, jobs):
    if jobs is None:
        jobs = MACHINE_CPU_COUNT
    if jobs <= 1 or len(cells) <= 1:
        return [worker(cell) for cell in cells]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(worker, cells))


def _table1_cell(cell):
    model, N, M, alpha, T_M, tol, options = cell
    logging.info("Table row M={}".format(M))
    try:
        result = min_feasible_Tm(model, N, M, alpha, T_M, tol, options)
    except Exception as e:
        logging.error("Table row M={} failed: {}".format(M, e))
        result = SearchResult(verdict=VERDICT_ERROR, message=str(e))
    result.params.update({"M": M})
    return result


def table1(
    model,
    N=2,
    M_list=None,
    alpha=SEARCH_ALPHA_LOWER,
    T_M=1.0,
    tol=SEARCH_T_TOL,
    jobs=1,
    options=None,
):
    """Minimum certified T_m for each partition count M."""
    if M_list is None:
        M_list = TABLE1_M_LIST
    cells = [(model, N, M, alpha, T_M, tol, options) for M in M_list]
    return _run_cells(_table1_cell, cells, jobs)


def _sweep_cell(cell):
    plant, k_p, k_i, p_r, h, N, M, alpha, T_grid, tol, options = cell
    logging.info("Sweep cell p_r={} h={}".format(p_r, h))
    try:
        model = build_sampled_data(plant, make_controller(k_p, k_i, p_r), h)
        result = max_periodic_T(model, N, M, alpha, T_grid, tol, options)
    except Exception as e:
        logging.error("Sweep cell p_r={} h={} failed: {}".format(p_r, h, e))
        result = SearchResult(verdict=VERDICT_ERROR, message=str(e))
    result.params.update({"p_r": p_r, "h": h})
    return result


def period_vs_delay_sweep(
    plant,
    k_p,
    k_i,
    p_r_grid,
    h_grid,
    T_grid,
    N=2,
    M=1,
    alpha=SEARCH_ALPHA_LOWER,
    tol=SEARCH_T_TOL,
    jobs=1,
    options=None,
):
    if not p_r_grid or not h_grid or not T_grid:
        raise SearchError("Sweep grids must be non-empty")
    cells = [
        (plant, k_p, k_i, p_r, h, N, M, alpha, T_grid, tol, options)
        for p_r in p_r_grid
        for h in h_grid
    ]
    return _run_cells(_sweep_cell, cells, jobs)


def _decay_cell(cell):
    model, N, M, T_m, T_M, tol, alpha_upper, options = cell
    logging.info("Decay cell T_m={} T_M={}".format(T_m, T_M))
    try:
        result = max_decay_rate(model, N, M, T_m, T_M, tol, alpha_upper, options)
    except Exception as e:
        logging.error("Decay cell T_M={} failed: {}".format(T_M, e))
        result = SearchResult(verdict=VERDICT_ERROR, message=str(e))
    result.params.update({"T_m": T_m, "T_M": T_M})
    return result


def decay_vs_period(
    model,
    T_grid,
    N=2,
    M=1,
    asynchronous_ratio=None,
    tol=SEARCH_ALPHA_TOL,
    alpha_upper=SEARCH_ALPHA_UPPER,
    jobs=1,
    options=None,
):
    """Certified decay rate per period: T_m = T_M = T, or T_m = ratio * T_M."""
    if not T_grid:
        raise SearchError("Period grid must be non-empty")
    cells = []
    for T in T_grid:
        T_m = T if asynchronous_ratio is None else asynchronous_ratio * T
        cells.append((model, N, M, T_m, T, tol, alpha_upper, options))
    return _run_cells(_decay_cell, cells, jobs)


def check_frontier_monotone(results, tol=SEARCH_T_TOL):
    """Allowable T should not grow with h at fixed p_r. Returns offending pairs."""
    rows = {}
    for result in results:
        if result.value is None:
            continue
        rows.setdefault(result.params["p_r"], []).append(
            (result.params["h"], result.value)
        )
    violations = []
    for p_r, cells in rows.items():
        cells.sort()
        for (h0, T0), (h1, T1) in zip(cells, cells[1:]):
            if T1 > T0 + tol:
                violations.append({"p_r": p_r, "h": (h0, h1), "T": (T0, T1)})
    return violations
