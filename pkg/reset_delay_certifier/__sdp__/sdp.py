#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import json
import logging
import time
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
from scipy.linalg import eigh

from reset_delay_certifier.__common__.env import (
    CERTIFICATE_SCHEMA_VERSION,
    LMI_CONE_MARGIN,
    LMI_EPSILON_SCALE,
    LMI_SOLVE_MARGIN,
    SOLVER_FEASTOL,
    SOLVER_MAX_ITERS,
    SOLVER_NAME,
)
from reset_delay_certifier.__common__.exceptions import CertifierError
from reset_delay_certifier.__common__.output import json_default, write_json
from reset_delay_certifier.__lmi__.problem import SENSE_NEGATIVE, SENSE_POSITIVE

VERDICT_FEASIBLE = "Feasible"
VERDICT_INFEASIBLE = "Infeasible"
VERDICT_INCONCLUSIVE = "Inconclusive"
VERDICTS = [VERDICT_FEASIBLE, VERDICT_INFEASIBLE, VERDICT_INCONCLUSIVE]


@dataclass
class SolverOptions:
    name: str = SOLVER_NAME
    max_iters: int = SOLVER_MAX_ITERS
    feastol: float = SOLVER_FEASTOL
    epsilon_scale: float = LMI_EPSILON_SCALE
    solve_margin: float = LMI_SOLVE_MARGIN
    cone_margin: float = LMI_CONE_MARGIN
    verbose: bool = False

    def solver_kwargs(self):
        name = self.name.upper()
        if name == "CLARABEL":
            return {"max_iter": self.max_iters, "tol_feas": self.feastol}
        if name == "SCS":
            return {"max_iters": self.max_iters, "eps": self.feastol}
        return {}


@dataclass
class Residual:
    sense: str
    min_eig: float
    max_eig: float
    margin: float
    ok: bool

    def to_dict(self):
        return {
            "sense": self.sense,
            "min_eig": self.min_eig,
            "max_eig": self.max_eig,
            "margin": self.margin,
            "ok": self.ok,
        }


@dataclass
class Certificate:
    verdict: str
    epsilon: float
    variables: dict = None
    residuals: dict = field(default_factory=dict)
    solver_stats: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return self.verdict == VERDICT_FEASIBLE

    def worst_margin(self):
        if not self.residuals:
            return None
        return min(r.margin for r in self.residuals.values())


def verify_certificate(problem, values, epsilon=None):
    """Re-check every block with a dense symmetric eigensolver.

    margin is lambda_min for positivity blocks and -lambda_max for negativity
    blocks; a block is ok when its margin is at least epsilon/2.
    """
    if epsilon is None:
        epsilon = problem.epsilon
    residuals = {}
    for blk in problem.blocks:
        M = blk.matrix.evaluate(values)
        M = 0.5 * (M + M.T)
        eigs = eigh(M, eigvals_only=True)
        min_eig, max_eig = float(eigs[0]), float(eigs[-1])
        if blk.sense == SENSE_POSITIVE:
            margin = min_eig
        elif blk.sense == SENSE_NEGATIVE:
            margin = -max_eig
        else:
            raise CertifierError("Unknown block sense {}".format(blk.sense))
        residuals[blk.name] = Residual(
            sense=blk.sense,
            min_eig=min_eig,
            max_eig=max_eig,
            margin=margin,
            ok=bool(margin >= epsilon / 2.0),
        )
    return residuals


def residuals_ok(residuals):
    return all(r.ok for r in residuals.values())


def _cvx_expression(matrix, cvx_vars):
    expr = matrix.constant
    for term in matrix.terms:
        V = cvx_vars[term.variable]
        if term.transpose:
            V = V.T
        expr = expr + term.left @ V @ term.right
    return 0.5 * (expr + expr.T)


def is_homogeneous(problem):
    return all(not np.any(blk.matrix.constant) for blk in problem.blocks)


def solve_margin(problem, options):
    """Strictness requested from the solver.

    Blocks without constant terms define a cone, so any positive margin is
    reachable by scaling; a unit margin keeps it well above solver tolerances.
    """
    if is_homogeneous(problem):
        return max(problem.epsilon, options.cone_margin)
    return max(problem.epsilon, options.solve_margin)


def solve(problem, options=None):
    if options is None:
        options = SolverOptions()
    epsilon = problem.epsilon
    margin = solve_margin(problem, options)
    cvx_vars = {}
    for name, spec in problem.variables.items():
        cvx_vars[name] = cp.Variable(spec.shape, symmetric=spec.symmetric, name=name)
    constraints = []
    for blk in problem.blocks:
        expr = _cvx_expression(blk.matrix, cvx_vars)
        eye = np.eye(blk.size)
        if blk.sense == SENSE_POSITIVE:
            constraints.append(expr >> margin * eye)
        else:
            constraints.append(expr << -margin * eye)
    cvx_problem = cp.Problem(cp.Minimize(0), constraints)

    stats = {"solver": options.name, "margin": margin}
    logging.info(
        "Solving LMI problem with {} blocks using {}".format(
            len(problem.blocks), options.name
        )
    )
    start = time.perf_counter()
    try:
        cvx_problem.solve(
            solver=options.name, verbose=options.verbose, **options.solver_kwargs()
        )
    except (cp.error.SolverError, ValueError, ArithmeticError) as e:
        stats["runtime_s"] = time.perf_counter() - start
        stats["message"] = str(e)
        logging.error("Solver failed: {}".format(e))
        return Certificate(VERDICT_INCONCLUSIVE, epsilon, solver_stats=stats)
    stats["runtime_s"] = time.perf_counter() - start
    stats["status"] = cvx_problem.status
    if cvx_problem.solver_stats is not None:
        stats["iterations"] = cvx_problem.solver_stats.num_iters
        stats["solve_time_s"] = cvx_problem.solver_stats.solve_time

    status = cvx_problem.status
    if status == cp.INFEASIBLE:
        verdict = VERDICT_INFEASIBLE
        cert = Certificate(verdict, epsilon, solver_stats=stats)
    elif status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        values = {
            name: np.asarray(var.value, dtype=float) for name, var in cvx_vars.items()
        }
        residuals = verify_certificate(problem, values, epsilon)
        if residuals_ok(residuals):
            verdict = VERDICT_FEASIBLE
            cert = Certificate(verdict, epsilon, values, residuals, stats)
        else:
            failed = [name for name, r in residuals.items() if not r.ok]
            stats["message"] = "verification failed on {}".format(",".join(failed))
            verdict = VERDICT_INCONCLUSIVE
            cert = Certificate(verdict, epsilon, None, residuals, stats)
    else:
        stats["message"] = "solver status {}".format(status)
        verdict = VERDICT_INCONCLUSIVE
        cert = Certificate(verdict, epsilon, solver_stats=stats)
    logging.info(
        "Solver status {} -> {} ({:.3f}s)".format(status, verdict, stats["runtime_s"])
    )
    return cert


def certificate_to_dict(cert, query=None, model=None):
    variables = None
    if cert.variables is not None:
        variables = {name: np.asarray(v).tolist() for name, v in cert.variables.items()}
    return {
        "schema_version": CERTIFICATE_SCHEMA_VERSION,
        "verdict": cert.verdict,
        "epsilon": cert.epsilon,
        "residuals": {name: r.to_dict() for name, r in cert.residuals.items()},
        "variables": variables,
        "solver_stats": cert.solver_stats,
        "query": query if query is not None else cert.metadata.get("query"),
        "model": model if model is not None else cert.metadata.get("model"),
    }


def certificate_to_json(cert, path=None, query=None, model=None):
    data = certificate_to_dict(cert, query, model)
    if path is not None:
        logging.info("Writing certificate into {}".format(path))
        write_json(path, data)
    return json.dumps(data, indent=2, default=json_default)


def load_certificate(path):
    with open(path, "r") as fd:
        data = json.load(fd)
    if data.get("schema_version") != CERTIFICATE_SCHEMA_VERSION:
        raise CertifierError(
            "Unsupported certificate schema version {} in {}".format(
                data.get("schema_version"), path
            )
        )
    if data["verdict"] not in VERDICTS:
        raise CertifierError("Unknown verdict {} in {}".format(data["verdict"], path))
    variables = data.get("variables")
    if variables is not None:
        variables = {name: np.array(v, dtype=float) for name, v in variables.items()}
    residuals = {name: Residual(**r) for name, r in data.get("residuals", {}).items()}
    return Certificate(
        verdict=data["verdict"],
        epsilon=data["epsilon"],
        variables=variables,
        residuals=residuals,
        solver_stats=data.get("solver_stats", {}),
        metadata={"query": data.get("query"), "model": data.get("model")},
    )
